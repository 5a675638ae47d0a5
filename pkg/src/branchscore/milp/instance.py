from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class InvalidInstanceError(ValueError):
    pass


@dataclass(eq=False)
class MilpInstance:
    """``min c @ x`` s.t. ``A @ x <= b``, ``lower <= x <= upper``, integrality mask.

    All rows are stored in ``<=`` form; callers negate ``>=`` rows before
    construction.
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integrality: np.ndarray
    name: str = ""
    _dense: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = sp.csr_matrix(self.A, dtype=float)
        self.A.sum_duplicates()
        self.A.eliminate_zeros()
        self.A.sort_indices()
        self.b = np.asarray(self.b, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        self.integrality = np.asarray(self.integrality, dtype=bool)
        self.validate()

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]

    @property
    def num_cons(self) -> int:
        return self.b.shape[0]

    @property
    def num_integer(self) -> int:
        return int(self.integrality.sum())

    @property
    def dense_A(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self.A.toarray()
        return self._dense

    def validate(self) -> None:
        n, m = self.c.shape[0], self.b.shape[0]
        if self.A.shape != (m, n):
            raise InvalidInstanceError(f"A has shape {self.A.shape}, expected {(m, n)}")
        for name, vec in (("lower", self.lower), ("upper", self.upper), ("integrality", self.integrality)):
            if vec.shape != (n,):
                raise InvalidInstanceError(f"{name} has length {vec.shape[0]}, expected {n}")
        if not np.all(np.isfinite(self.c)) or not np.all(np.isfinite(self.b)):
            raise InvalidInstanceError("objective and rhs must be finite")
        if not np.all(np.isfinite(self.A.data)):
            raise InvalidInstanceError("constraint coefficients must be finite")
        if m and np.any(np.diff(self.A.indptr) == 0):
            row = int(np.flatnonzero(np.diff(self.A.indptr) == 0)[0])
            raise InvalidInstanceError(f"row {row} is empty")
        if np.any(self.lower > self.upper):
            j = int(np.flatnonzero(self.lower > self.upper)[0])
            raise InvalidInstanceError(f"variable {j} has lower > upper")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise InvalidInstanceError("bounds must not be NaN")

    def objective(self, x: np.ndarray) -> float:
        return float(self.c @ x)

    def is_feasible(self, x: np.ndarray, tol: float = 1e-6) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - tol) or np.any(x > self.upper + tol):
            return False
        if np.any(self.A @ x > self.b + tol):
            return False
        frac = np.abs(x - np.round(x))
        return bool(np.all(frac[self.integrality] <= tol))

    def structurally_equal(self, other: "MilpInstance") -> bool:
        return (
            np.array_equal(self.c, other.c)
            and np.array_equal(self.b, other.b)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and np.array_equal(self.integrality, other.integrality)
            and self.A.shape == other.A.shape
            and np.array_equal(self.A.indptr, other.A.indptr)
            and np.array_equal(self.A.indices, other.A.indices)
            and np.array_equal(self.A.data, other.A.data)
        )


def from_dense(c, A, b, lower=None, upper=None, integrality=None, name: str = "") -> MilpInstance:
    """Convenience constructor used by tests and small examples."""
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    A = np.asarray(A, dtype=float).reshape(-1, n)
    lower = np.zeros(n) if lower is None else lower
    upper = np.full(n, np.inf) if upper is None else upper
    integrality = np.ones(n, dtype=bool) if integrality is None else integrality
    return MilpInstance(c, sp.csr_matrix(A), b, lower, upper, integrality, name=name)
