"""Matrices, exact permanents, permanental means and closed-form bounds.

Matrices are plain ``numpy`` float arrays; :func:`as_matrix` validates and
normalizes anything array-like.  Permanents are returned as :class:`LogValue`
because ``perm`` of an ``n``-scaled doubly stochastic matrix grows like ``n!``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import _kernels
from .matching import has_perfect_matching
from .errors import (
    NegativeEntryError,
    NotBinaryError,
    PermlawError,
    PrecisionLossError,
    SizeExceededError,
    ZeroPermanentError,
    ZeroRowError,
)

__all__ = [
    "LogValue",
    "StochasticityReport",
    "as_matrix",
    "log_factorial",
    "perm_bruteforce",
    "perm_ryser",
    "count_perfect_matchings",
    "permanental_mean",
    "per_from_log",
    "vdw_bounds",
    "bregman_minc_bound",
    "stochastic_upper_bound",
    "check_doubly_stochastic",
    "parse_matrix",
    "format_matrix",
    "read_matrix",
    "write_matrix",
]

BRUTEFORCE_MAX_N = 10
RYSER_MAX_N = 30


@dataclass(frozen=True)
class LogValue:
    """A non-negative quantity stored as its natural logarithm.

    When ``is_zero`` is set the quantity is exactly zero and ``log_magnitude``
    carries no information.
    """

    log_magnitude: float
    is_zero: bool = False

    @classmethod
    def zero(cls) -> "LogValue":
        return cls(-math.inf, True)

    @classmethod
    def of(cls, x: float) -> "LogValue":
        if x < 0:
            raise ValueError("LogValue holds non-negative quantities only")
        return cls.zero() if x == 0 else cls(math.log(x))

    @property
    def value(self) -> float:
        """The plain float (``inf`` on overflow)."""
        if self.is_zero:
            return 0.0
        try:
            return math.exp(self.log_magnitude)
        except OverflowError:
            return math.inf

    def __float__(self) -> float:
        return self.value


def as_matrix(m) -> np.ndarray:
    """Validate ``m`` as a square, finite, non-negative float64 matrix."""
    a = np.array(m, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PermlawError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < 1:
        raise PermlawError("matrix size must be at least 1")
    if not np.all(np.isfinite(a)):
        raise PermlawError("matrix entries must be finite")
    if np.any(a < 0):
        raise NegativeEntryError("matrix entries must be non-negative")
    return np.ascontiguousarray(a)


@lru_cache(maxsize=1024)
def log_factorial(n: int) -> float:
    """``log n!`` by direct summation of logarithms."""
    if n < 0:
        raise ValueError("factorial of a negative number")
    return math.fsum(math.log(k) for k in range(2, n + 1))


def perm_bruteforce(m) -> LogValue:
    """Permanent by enumerating all ``n!`` permutations (``n <= 10``).

    Each row is divided by its largest entry first; products are accumulated
    with :func:`math.fsum`.
    """
    a = as_matrix(m)
    n = a.shape[0]
    if n > BRUTEFORCE_MAX_N:
        raise SizeExceededError(f"brute force permanent limited to n <= {BRUTEFORCE_MAX_N}, got {n}")
    row_max = a.max(axis=1)
    if np.any(row_max == 0):
        return LogValue.zero()
    b = a / row_max[:, None]
    rows = np.arange(n)
    parts = []
    perms = itertools.permutations(range(n))
    while True:
        chunk = np.array(list(itertools.islice(perms, 40320)), dtype=np.intp)
        if chunk.size == 0:
            break
        parts.append(math.fsum(np.prod(b[rows, chunk], axis=1)))
    total = math.fsum(parts)
    if total == 0:
        return LogValue.zero()
    return LogValue(math.log(total) + float(np.log(row_max).sum()))


def perm_ryser(m) -> LogValue:
    """Exact permanent by Gray-code inclusion-exclusion (``n <= 30``).

    Rows are first divided by the geometric mean of their positive entries and
    the factor is restored in log space afterwards, which keeps every partial
    sum near unit scale.  A structurally singular pattern (no perfect matching
    among positive entries) gives an exact zero.
    """
    a = as_matrix(m)
    n = a.shape[0]
    if n > RYSER_MAX_N:
        raise SizeExceededError(f"Ryser permanent limited to n <= {RYSER_MAX_N}, got {n}")
    positive = a > 0
    if not has_perfect_matching(positive):
        return LogValue.zero()
    with np.errstate(divide="ignore"):
        logs = np.where(positive, np.log(np.where(positive, a, 1.0)), 0.0)
    log_gm = logs.sum(axis=1) / positive.sum(axis=1)
    b = np.ascontiguousarray(np.where(positive, np.exp(logs - log_gm[:, None]), 0.0))
    total = _kernels.ryser_centered(b, _kernels.LOW_BITS)
    if total > 0:
        return LogValue(math.log(total) + float(log_gm.sum()))
    raise PrecisionLossError(f"permanent of a structurally non-singular {n}x{n} matrix evaluated to {total!r}")


def count_perfect_matchings(b) -> int:
    """Exact integer permanent of a 0/1 matrix (``n <= 30``; int64 range)."""
    a = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PermlawError(f"expected a square matrix, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise NotBinaryError("matching count needs a 0/1 matrix")
    if a.shape[0] > RYSER_MAX_N:
        raise SizeExceededError(f"matching count limited to n <= {RYSER_MAX_N}")
    return int(_kernels.count_matchings(a.astype(np.uint8)))


def per_from_log(log_perm: LogValue, n: int) -> float:
    if log_perm.is_zero:
        raise ZeroPermanentError("permanent is zero; the positivity pattern has no perfect matching")
    return math.exp((log_perm.log_magnitude - log_factorial(n)) / n)


def permanental_mean(m) -> float:
    """``(perm(m) / n!) ** (1/n)``."""
    a = as_matrix(m)
    return per_from_log(perm_ryser(a), a.shape[0])


def vdw_bounds(n: int, log: bool = False) -> tuple[float, float]:
    """Range ``(n!/n^n, 1)`` of the permanent over doubly stochastic matrices."""
    if n < 1:
        raise ValueError("n must be positive")
    lower = log_factorial(n) - n * math.log(n)
    return (lower, 0.0) if log else (math.exp(lower), 1.0)


def bregman_minc_bound(b) -> LogValue:
    """``log prod_i (r_i!)^(1/r_i)`` for a 0/1 matrix with row sums ``r_i``."""
    a = as_matrix(b)
    if not np.isin(a, (0.0, 1.0)).all():
        raise NotBinaryError("Bregman-Minc bound needs a 0/1 matrix")
    r = a.sum(axis=1).astype(int)
    if np.any(r == 0):
        raise ZeroRowError("a zero row forces perm = 0; the bound degenerates")
    return LogValue(math.fsum(log_factorial(int(k)) / k for k in r))


def stochastic_upper_bound(n: int, lam: float) -> LogValue:
    """``log(e^(2 lam) n^((lam-1)/2) n!)``, valid for ``A in n*S_n`` with entries ``<= lam``."""
    if n < 1:
        raise ValueError("n must be positive")
    if not lam > 1:
        raise ValueError("lambda must exceed 1")
    return LogValue(2 * lam + 0.5 * (lam - 1) * math.log(n) + log_factorial(n))


@dataclass(frozen=True)
class StochasticityReport:
    max_row_deviation: float
    max_col_deviation: float
    min_entry: float
    max_entry: float
    passed: bool


def check_doubly_stochastic(m, tol: float = 1e-10) -> StochasticityReport:
    if not tol > 0:
        raise ValueError("tol must be positive")
    a = np.asarray(m, dtype=np.float64)
    row_dev = float(np.max(np.abs(a.sum(axis=1) - 1.0)))
    col_dev = float(np.max(np.abs(a.sum(axis=0) - 1.0)))
    lo, hi = float(a.min()), float(a.max())
    ok = row_dev <= tol and col_dev <= tol and lo >= 0.0 and hi <= 1.0 + tol
    return StochasticityReport(row_dev, col_dev, lo, hi, bool(ok))


# -- text format: first line n, then n rows of n reals ------------------------


def parse_matrix(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise PermlawError("empty matrix text")
    try:
        n = int(lines[0])
    except ValueError:
        raise PermlawError(f"first line must be the size n, got {lines[0]!r}") from None
    if n < 1:
        raise PermlawError("matrix size must be at least 1")
    if len(lines) - 1 != n:
        raise PermlawError(f"expected {n} rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:], start=1):
        vals = ln.split()
        if len(vals) != n:
            raise PermlawError(f"row {k} has {len(vals)} entries, expected {n}")
        rows.append([float(v) for v in vals])
    return as_matrix(rows)


def format_matrix(m) -> str:
    a = np.asarray(m, dtype=np.float64)
    out = [str(a.shape[0])]
    out += [" ".join(f"{x:.17g}" for x in row) for row in a]
    return "\n".join(out) + "\n"


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())


def write_matrix(path, m) -> None:
    Path(path).write_text(format_matrix(m))
