"""Benchmark instance generators and the instance file format."""

from .generators import (
    GENERATORS,
    gen_comb_auction,
    gen_facility_location,
    gen_independent_set,
    gen_set_cover,
    greedy_clique_cover,
    independent_set_from_graph,
)
from .io import InstanceFormatError, format_instance, parse_instance, read_instance, write_instance
from .presets import PRESETS, GeneratorSpec, preset_spec
from .manifest import generate

__all__ = [
    "GENERATORS", "gen_comb_auction", "gen_facility_location", "gen_independent_set", "gen_set_cover",
    "greedy_clique_cover", "independent_set_from_graph",
    "InstanceFormatError", "format_instance", "parse_instance", "read_instance", "write_instance",
    "PRESETS", "GeneratorSpec", "preset_spec", "generate",
]
