"""Permanents, Sinkhorn scaling and the law of large permanent."""

from .matrix import (
    LogValue,
    as_matrix,
    check_doubly_stochastic,
    permanental_mean,
    perm_bruteforce,
    perm_ryser,
)

__version__ = "0.1.0"

__all__ = [
    "LogValue",
    "as_matrix",
    "check_doubly_stochastic",
    "permanental_mean",
    "perm_bruteforce",
    "perm_ryser",
]
