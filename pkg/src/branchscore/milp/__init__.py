from .instance import InvalidInstanceError, MilpInstance, from_dense
from .simplex import BasisStatus, LpResult, LpStatus, WarmStart, solve_lp_relaxation
from .state import DOWN, UP, SearchState, update_search_state

__all__ = [
    "DOWN",
    "UP",
    "BasisStatus",
    "InvalidInstanceError",
    "LpResult",
    "LpStatus",
    "MilpInstance",
    "SearchState",
    "WarmStart",
    "from_dense",
    "solve_lp_relaxation",
    "update_search_state",
]
