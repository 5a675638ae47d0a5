"""Aggregation helpers shared by tuning and benchmarking."""

from __future__ import annotations

import math

import numpy as np


def shifted_geomean(values, shift: float = 1.0) -> float:
    """exp(mean(log(v + shift))) - shift."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise ValueError("shifted_geomean of an empty sequence")
    if np.any(v < 0) or np.any(np.isnan(v)):
        raise ValueError("shifted_geomean needs nonnegative values")
    if np.any(np.isinf(v)):
        return math.inf
    return float(np.exp(np.mean(np.log(v + shift))) - shift)
