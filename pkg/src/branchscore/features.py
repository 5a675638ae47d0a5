"""Per-candidate branching features (91 columns) and per-node normalization.

Column layout::

    0-18   variable features read off the LP solution and the instance
    19-38  objective split, static constraint-degree and coefficient stats,
           fractional / ceiling distance
    39-47  pseudocosts and cutoff statistics
    48-54  degree statistics restricted to active rows, and their ratios to
           the static ones
    55-66  coefficient-to-rhs ratios and one-to-all coefficient ratios
    67-90  active-row weight statistics under four weightings (unit,
           1/sum|row|, 1/sum|row over candidates|, |dual|), six stats each

Statistics over an empty set are all zero.  Every ratio carries ``EPS`` in
its denominator.  Only the groups touching requested columns are computed;
the others are left at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .milp.instance import MilpInstance
from .milp.simplex import BasisStatus, LpResult, TableauSnapshot, snapshot
from .milp.state import SearchState

NUM_FEATURES = 91
EPS = 1e-8
ACTIVE_SLACK_TOL = 1e-7
DEGENERATE_RANGE = 1e-12

FEATURE_TABLE: list[tuple[int, str, str]] = [
    (0, "obj_coef", "c_j"),
    (1, "type_binary", "1 if integer with global bounds [0,1]"),
    (2, "type_integer", "1 if integer and not binary"),
    (3, "type_implicit_integer", "always 0 (no implicit integers)"),
    (4, "type_continuous", "1 if continuous"),
    (5, "has_lower_bound", "1 if local lower bound finite"),
    (6, "has_upper_bound", "1 if local upper bound finite"),
    (7, "norm_reduced_cost", "d_j / (||A_{:,j}||_2 + eps)"),
    (8, "lp_value", "x*_j"),
    (9, "lp_frac", "x*_j - floor(x*_j)"),
    (10, "at_lower", "1 if x*_j == local lower bound"),
    (11, "at_upper", "1 if x*_j == local upper bound"),
    (12, "scaled_age", "(total LP iters - iters when last basic) / total LP iters"),
    (13, "incumbent_value", "x_j in incumbent (0 if none)"),
    (14, "avg_solution_value", "mean of x_j over found solutions (0 if none)"),
    (15, "basis_lower", "1 if nonbasic at lower"),
    (16, "basis_basic", "1 if basic"),
    (17, "basis_upper", "1 if nonbasic at upper"),
    (18, "basis_zero", "1 if nonbasic free at zero"),
    (19, "obj_raw", "c_j"),
    (20, "obj_pos", "max(c_j, 0)"),
    (21, "obj_neg", "max(-c_j, 0)"),
    (22, "n_rows", "number of rows with a_rj != 0"),
    (23, "deg_mean", "mean nnz(row r) over rows containing j"),
    (24, "deg_std", "std nnz(row r) over rows containing j"),
    (25, "deg_min", "min nnz(row r) over rows containing j"),
    (26, "deg_max", "max nnz(row r) over rows containing j"),
    (27, "pos_coef_count", "count of a_rj > 0"),
    (28, "pos_coef_mean", "mean of a_rj > 0"),
    (29, "pos_coef_std", "std of a_rj > 0"),
    (30, "pos_coef_min", "min of a_rj > 0"),
    (31, "pos_coef_max", "max of a_rj > 0"),
    (32, "neg_coef_count", "count of a_rj < 0"),
    (33, "neg_coef_mean", "mean of a_rj < 0"),
    (34, "neg_coef_std", "std of a_rj < 0"),
    (35, "neg_coef_min", "min of a_rj < 0"),
    (36, "neg_coef_max", "max of a_rj < 0"),
    (37, "frac_distance", "f = x*_j - floor(x*_j)"),
    (38, "ceil_distance", "1 - f"),
    (39, "pc_up", "mean up pseudocost (0 if none)"),
    (40, "pc_down", "mean down pseudocost (0 if none)"),
    (41, "pc_ratio", "pc_up / (pc_down + eps)"),
    (42, "pc_sum", "pc_up + pc_down"),
    (43, "pc_product", "pc_up * pc_down"),
    (44, "cutoff_up", "count of up-children infeasible or cut off"),
    (45, "cutoff_down", "count of down-children infeasible or cut off"),
    (46, "cutoff_up_ratio", "cutoff_up / (up branchings + eps)"),
    (47, "cutoff_down_ratio", "cutoff_down / (down branchings + eps)"),
    (48, "dyn_deg_mean", "mean nnz(row r) over active rows containing j"),
    (49, "dyn_deg_std", "std nnz(row r) over active rows containing j"),
    (50, "dyn_deg_min", "min nnz(row r) over active rows containing j"),
    (51, "dyn_deg_max", "max nnz(row r) over active rows containing j"),
    (52, "dyn_static_mean_ratio", "f48 / (f23 + eps)"),
    (53, "dyn_static_min_ratio", "f50 / (f25 + eps)"),
    (54, "dyn_static_max_ratio", "f51 / (f26 + eps)"),
    (55, "rhs_ratio_pos_min", "min a_rj / (|b_r| + eps) over rows with b_r > 0"),
    (56, "rhs_ratio_pos_max", "max a_rj / (|b_r| + eps) over rows with b_r > 0"),
    (57, "rhs_ratio_neg_min", "min a_rj / (|b_r| + eps) over rows with b_r < 0"),
    (58, "rhs_ratio_neg_max", "max a_rj / (|b_r| + eps) over rows with b_r < 0"),
    (59, "pos_over_pos_min", "min a_rj / (P_r + eps) over a_rj > 0, P_r = sum_k max(a_rk, 0)"),
    (60, "pos_over_pos_max", "max a_rj / (P_r + eps) over a_rj > 0"),
    (61, "pos_over_neg_min", "min a_rj / (Q_r + eps) over a_rj > 0, Q_r = sum_k max(-a_rk, 0)"),
    (62, "pos_over_neg_max", "max a_rj / (Q_r + eps) over a_rj > 0"),
    (63, "neg_over_pos_min", "min a_rj / (P_r + eps) over a_rj < 0"),
    (64, "neg_over_pos_max", "max a_rj / (P_r + eps) over a_rj < 0"),
    (65, "neg_over_neg_min", "min a_rj / (Q_r + eps) over a_rj < 0"),
    (66, "neg_over_neg_max", "max a_rj / (Q_r + eps) over a_rj < 0"),
]
_STATS = ("count", "sum", "mean", "std", "min", "max")
_WEIGHTS = (
    ("unit", "1"),
    ("inv_sum_all", "1 / (sum_k |a_rk| + eps)"),
    ("inv_sum_cand", "1 / (sum_{k in candidates} |a_rk| + eps)"),
    ("dual", "|y_r|"),
)
for _w, (_wname, _wformula) in enumerate(_WEIGHTS):
    for _s, _stat in enumerate(_STATS):
        FEATURE_TABLE.append(
            (67 + 6 * _w + _s, f"active_{_wname}_{_stat}", f"{_stat} of w_r = {_wformula} over active rows containing j")
        )
del _w, _wname, _wformula, _s, _stat
FEATURE_NAMES = [name for _, name, _ in FEATURE_TABLE]

# column ranges written by each lazily evaluated group
_GROUPS = {
    "variable": range(0, 19),
    "static": list(range(19, 37)) + list(range(55, 67)),
    "fraction": range(37, 39),
    "pseudocost": range(39, 48),
    "dynamic_degree": range(48, 55),
    "active": range(67, 91),
}
_COLUMN_GROUP = {col: name for name, cols in _GROUPS.items() for col in cols}


def feature_doc_rows() -> list[tuple[int, str, str]]:
    return list(FEATURE_TABLE)


def _grouped_stats(indptr: np.ndarray, values: np.ndarray) -> np.ndarray:
    """count/sum/mean/std/min/max of ``values`` split by CSC-style ``indptr``."""
    ngroups = indptr.shape[0] - 1
    out = np.zeros((ngroups, 6))
    counts = np.diff(indptr)
    nonempty = counts > 0
    if values.size == 0 or not nonempty.any():
        return out
    starts = indptr[:-1][nonempty]
    cnt = counts[nonempty]
    sums = np.add.reduceat(values, starts)
    means = sums / cnt
    group_ids = np.repeat(np.arange(cnt.shape[0]), cnt)
    sq = np.add.reduceat((values - means[group_ids]) ** 2, starts)
    out[nonempty, 0] = cnt
    out[nonempty, 1] = sums
    out[nonempty, 2] = means
    out[nonempty, 3] = np.sqrt(sq / cnt)
    out[nonempty, 4] = np.minimum.reduceat(values, starts)
    out[nonempty, 5] = np.maximum.reduceat(values, starts)
    return out


def _masked_column_stats(csc: sp.csc_matrix, keep: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Stats of per-entry ``values`` keeping entries where ``keep`` is true."""
    kept = np.concatenate([[0], np.cumsum(keep, dtype=np.int64)])
    counts = kept[csc.indptr[1:]] - kept[csc.indptr[:-1]]
    indptr = np.concatenate([[0], np.cumsum(counts)])
    return _grouped_stats(indptr, values[keep])


@dataclass
class StaticFeatureCache:
    """Instance-level statistics computed once per instance (columns 19-36, 55-66)."""

    values: np.ndarray  # n x 91, only static columns filled
    column_norm: np.ndarray
    row_degree: np.ndarray
    row_abs_sum: np.ndarray
    csc: sp.csc_matrix
    var_type: np.ndarray  # n x 4 one-hot


def precompute_static(instance: MilpInstance) -> StaticFeatureCache:
    n = instance.num_vars
    csr = instance.A
    csc = csr.tocsc()
    csc.sort_indices()
    rows = csc.indices
    data = csc.data
    row_degree = np.diff(csr.indptr).astype(float)
    row_abs_sum = np.asarray(abs(csr).sum(axis=1)).ravel()
    pos_sum = np.asarray(csr.maximum(0).sum(axis=1)).ravel()
    neg_sum = np.asarray((-csr).maximum(0).sum(axis=1)).ravel()

    v = np.zeros((n, NUM_FEATURES))
    c = instance.c
    v[:, 19] = c
    v[:, 20] = np.maximum(c, 0.0)
    v[:, 21] = np.maximum(-c, 0.0)
    v[:, 22] = np.diff(csc.indptr)
    v[:, 23:27] = _grouped_stats(csc.indptr, row_degree[rows])[:, 2:6]
    v[:, 27:32] = _masked_column_stats(csc, data > 0, data)[:, [0, 2, 3, 4, 5]]
    v[:, 32:37] = _masked_column_stats(csc, data < 0, data)[:, [0, 2, 3, 4, 5]]

    b = instance.b
    rhs_ratio = data / (np.abs(b[rows]) + EPS)
    v[:, 55:57] = _masked_column_stats(csc, b[rows] > 0, rhs_ratio)[:, 4:6]
    v[:, 57:59] = _masked_column_stats(csc, b[rows] < 0, rhs_ratio)[:, 4:6]
    over_pos = data / (pos_sum[rows] + EPS)
    over_neg = data / (neg_sum[rows] + EPS)
    v[:, 59:61] = _masked_column_stats(csc, data > 0, over_pos)[:, 4:6]
    v[:, 61:63] = _masked_column_stats(csc, data > 0, over_neg)[:, 4:6]
    v[:, 63:65] = _masked_column_stats(csc, data < 0, over_pos)[:, 4:6]
    v[:, 65:67] = _masked_column_stats(csc, data < 0, over_neg)[:, 4:6]

    var_type = np.zeros((n, 4))
    integral = instance.integrality
    binary = integral & (instance.lower == 0) & (instance.upper == 1)
    var_type[:, 0] = binary
    var_type[:, 1] = integral & ~binary
    var_type[:, 3] = ~integral
    column_norm = np.sqrt(np.asarray(csc.multiply(csc).sum(axis=0)).ravel())
    return StaticFeatureCache(v, column_norm, row_degree, row_abs_sum, csc, var_type)


@dataclass
class NodeContext:
    """Everything the feature extractor and built-in scorers read at one node."""

    instance: MilpInstance
    lower: np.ndarray
    upper: np.ndarray
    lp: LpResult
    state: SearchState
    static: StaticFeatureCache | None = None
    _active: np.ndarray | None = field(default=None, init=False, repr=False)
    _tableau: TableauSnapshot | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if not self.lp.optimal:
            raise ValueError("NodeContext requires an optimal LP")

    @property
    def incumbent(self) -> np.ndarray | None:
        return self.state.incumbent

    @property
    def duals(self) -> np.ndarray:
        return self.lp.duals

    @property
    def active_rows(self) -> np.ndarray:
        if self._active is None:
            self._active = self.lp.slacks(self.instance) <= ACTIVE_SLACK_TOL
        return self._active

    def tableau(self) -> TableauSnapshot:
        """Optimal tableau of the node LP, built on first use."""
        if self._tableau is None:
            self._tableau = snapshot(self.instance, self.lower, self.upper, self.lp)
        return self._tableau

    def static_cache(self) -> StaticFeatureCache:
        if self.static is None:
            self.static = precompute_static(self.instance)
        return self.static

    def fractionality(self, candidates) -> np.ndarray:
        x = self.lp.x[candidates]
        return x - np.floor(x)


@dataclass
class FeatureMatrix:
    values: np.ndarray
    candidates: np.ndarray
    normalized: bool = False

    @property
    def shape(self):
        return self.values.shape

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]


def groups_for(columns) -> set[str]:
    return {_COLUMN_GROUP[int(c)] for c in columns}


def extract_features(
    ctx: NodeContext,
    cache: StaticFeatureCache | None,
    candidates,
    columns=None,
) -> FeatureMatrix:
    """Unnormalized |C| x 91 feature matrix for the given candidates.

    ``columns`` restricts computation to the groups containing those columns.
    """
    if not ctx.lp.optimal:
        raise ValueError("LP at node is not optimal")
    cand = np.asarray(candidates, dtype=np.int64)
    if cand.size == 0:
        raise ValueError("candidate set is empty")
    cache = cache if cache is not None else ctx.static_cache()
    groups = set(_GROUPS) if columns is None else groups_for(columns)
    k = cand.shape[0]
    out = np.zeros((k, NUM_FEATURES))
    inst, lp, state = ctx.instance, ctx.lp, ctx.state
    x = lp.x[cand]
    frac = x - np.floor(x)

    if "variable" in groups:
        lo, up = ctx.lower[cand], ctx.upper[cand]
        out[:, 0] = inst.c[cand]
        out[:, 1:5] = cache.var_type[cand]
        out[:, 5] = np.isfinite(lo)
        out[:, 6] = np.isfinite(up)
        out[:, 7] = lp.reduced_costs[cand] / (cache.column_norm[cand] + EPS)
        out[:, 8] = x
        out[:, 9] = frac
        out[:, 10] = np.abs(x - lo) <= 1e-9
        out[:, 11] = np.abs(x - up) <= 1e-9
        total = state.total_lp_iterations
        if total > 0:
            out[:, 12] = (total - state.last_basic[cand]) / total
        if state.incumbent is not None:
            out[:, 13] = state.incumbent[cand]
        out[:, 14] = state.historical_average()[cand]
        bs = lp.basis_status[cand]
        out[:, 15] = bs == BasisStatus.LOWER
        out[:, 16] = bs == BasisStatus.BASIC
        out[:, 17] = bs == BasisStatus.UPPER
        out[:, 18] = bs == BasisStatus.ZERO

    if "static" in groups:
        cols = _GROUPS["static"]
        out[:, cols] = cache.values[np.ix_(cand, cols)]

    if "fraction" in groups:
        out[:, 37] = frac
        out[:, 38] = 1.0 - frac

    if "pseudocost" in groups:
        up_pc = state.pseudocost_up()[cand]
        down_pc = state.pseudocost_down()[cand]
        out[:, 39] = up_pc
        out[:, 40] = down_pc
        out[:, 41] = up_pc / (down_pc + EPS)
        out[:, 42] = up_pc + down_pc
        out[:, 43] = up_pc * down_pc
        out[:, 44] = state.cutoff_up[cand]
        out[:, 45] = state.cutoff_down[cand]
        out[:, 46] = state.cutoff_up[cand] / (state.branch_up[cand] + EPS)
        out[:, 47] = state.cutoff_down[cand] / (state.branch_down[cand] + EPS)

    if "dynamic_degree" in groups or "active" in groups:
        sub = cache.csc[:, cand]
        sub.sort_indices()
        rows = sub.indices
        keep = ctx.active_rows[rows]
        if "dynamic_degree" in groups:
            dyn = _masked_column_stats(sub, keep, cache.row_degree[rows])
            out[:, 48:52] = dyn[:, 2:6]
            out[:, 52] = out[:, 48] / (cache.values[cand, 23] + EPS)
            out[:, 53] = out[:, 50] / (cache.values[cand, 25] + EPS)
            out[:, 54] = out[:, 51] / (cache.values[cand, 26] + EPS)
        if "active" in groups:
            cand_abs = np.zeros(inst.num_cons)
            np.add.at(cand_abs, rows, np.abs(sub.data))
            weights = (
                np.ones(rows.shape[0]),
                1.0 / (cache.row_abs_sum[rows] + EPS),
                1.0 / (cand_abs[rows] + EPS),
                np.abs(lp.duals[rows]),
            )
            for w, wv in enumerate(weights):
                out[:, 67 + 6 * w : 73 + 6 * w] = _masked_column_stats(sub, keep, wv)

    return FeatureMatrix(out, cand, normalized=False)


def normalize_per_node(m: FeatureMatrix) -> FeatureMatrix:
    """Min-max scale every column across candidates; flat columns become 0."""
    v = m.values
    if v.shape[0] == 0:
        raise ValueError("feature matrix has no rows")
    lo = v.min(axis=0)
    span = v.max(axis=0) - lo
    ok = span > DEGENERATE_RANGE
    out = np.zeros_like(v)
    out[:, ok] = (v[:, ok] - lo[ok]) / span[ok]
    np.clip(out, 0.0, 1.0, out=out)
    return FeatureMatrix(out, m.candidates, normalized=True)
