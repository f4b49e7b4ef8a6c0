from .constants import (
    DEFAULT_MAX_ITERS,
    DEFAULT_SEED,
    DEFAULT_SOLVER_TOL,
    DEFAULT_TOL,
    NAMED_POLYTOPES,
)
from .fixtures import RESOLVENT_SEXTIC_P20, SIX_AVERAGE_DATA

__all__ = [
    "DEFAULT_MAX_ITERS",
    "DEFAULT_SEED",
    "DEFAULT_SOLVER_TOL",
    "DEFAULT_TOL",
    "NAMED_POLYTOPES",
    "RESOLVENT_SEXTIC_P20",
    "SIX_AVERAGE_DATA",
]
