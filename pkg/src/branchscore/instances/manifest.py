"""Batch generation to numbered files plus a CSV manifest."""

from __future__ import annotations

import csv
from pathlib import Path

from .io import write_instance
from .presets import GeneratorSpec

MANIFEST_NAME = "manifest.csv"


def generate(spec: GeneratorSpec, out_dir, prefix: str | None = None) -> list[Path]:
    """Write ``spec.count`` instances (seeds spec.seed, spec.seed+1, ...) and a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    prefix = prefix or spec.family
    size_text = ";".join(f"{k}={v}" for k, v in sorted(spec.sizes.items()))
    paths, rows = [], []
    for i in range(spec.count):
        inst = spec.build(i)
        path = out / f"{prefix}_{i:04d}.mip"
        digest = write_instance(inst, path)
        paths.append(path)
        rows.append([path.name, spec.family, size_text, spec.seed + i, inst.num_vars, inst.num_cons, digest])
    with open(out / MANIFEST_NAME, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "family", "sizes", "seed", "vars", "rows", "sha256"])
        w.writerows(rows)
    return paths
