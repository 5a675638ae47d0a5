"""Named size presets: the published benchmark sizes and desk-scale versions."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..milp.instance import MilpInstance
from .generators import GENERATORS


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    sizes: dict = field(default_factory=dict)
    seed: int = 0
    count: int = 1

    def __post_init__(self):
        if self.family not in GENERATORS:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(GENERATORS)}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        for k, v in self.sizes.items():
            if k != "density" and v <= 0:
                raise ValueError(f"size {k} must be positive")

    def build(self, index: int = 0) -> MilpInstance:
        return GENERATORS[self.family](**self.sizes, seed=self.seed + index)


PRESETS = {
    # published sizes
    "setcover_easy": ("set_cover", {"rows": 500, "cols": 1000, "density": 0.05}),
    "setcover_medium": ("set_cover", {"rows": 1000, "cols": 1000, "density": 0.05}),
    "setcover_hard": ("set_cover", {"rows": 2000, "cols": 1000, "density": 0.05}),
    "cauctions_easy": ("comb_auction", {"items": 100, "bids": 500}),
    "cauctions_medium": ("comb_auction", {"items": 200, "bids": 1000}),
    "cauctions_hard": ("comb_auction", {"items": 300, "bids": 1500}),
    "facilities_easy": ("facility_location", {"facilities": 100, "customers": 100}),
    "facilities_medium": ("facility_location", {"facilities": 100, "customers": 200}),
    "facilities_hard": ("facility_location", {"facilities": 100, "customers": 400}),
    "indset_easy": ("independent_set", {"nodes": 750, "affinity": 4}),
    "indset_medium": ("independent_set", {"nodes": 1000, "affinity": 4}),
    "indset_hard": ("independent_set", {"nodes": 1500, "affinity": 4}),
    # desk scale, roughly a third of the easy sizes per dimension
    "setcover_desk": ("set_cover", {"rows": 150, "cols": 300, "density": 0.05}),
    "cauctions_desk": ("comb_auction", {"items": 30, "bids": 150}),
    "facilities_desk": ("facility_location", {"facilities": 8, "customers": 20}),
    "indset_desk": ("independent_set", {"nodes": 150, "affinity": 4}),
}


def preset_spec(name: str, seed: int = 0, count: int = 1) -> GeneratorSpec:
    try:
        family, sizes = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESETS)}") from None
    return GeneratorSpec(family, dict(sizes), seed, count)
