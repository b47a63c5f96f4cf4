"""Constructive approximation of a nearly balanced matrix by an ``n``-scaled doubly stochastic one.

Pipeline: classify row/column sums (:func:`row_col_sum_report`), drop the
exceptional rows and columns and rescale rows to sum ``m``
(:func:`truncate_and_rescale`), even out the columns by pairwise mass transfers
(:func:`pairwise_column_balance`), then scale by ``n/m`` and glue ``n * I``
into the removed positions (:func:`ds_approximate`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BalanceInvariantError, BandViolationError, EpsilonTooLargeError, PermlawError, SizeExceededError
from .matrix import as_matrix, log_factorial, perm_ryser

__all__ = [
    "SumReport",
    "Stage",
    "BalanceResult",
    "row_col_sum_report",
    "fit_epsilon",
    "truncate_and_rescale",
    "pairwise_column_balance",
    "balance_columns",
    "ds_approximate",
    "perm_continuity_gap",
    "format_stage_log",
]


@dataclass(frozen=True)
class SumReport:
    epsilon: float
    bad_rows: list[int]
    bad_cols: list[int]
    row_sums: np.ndarray
    col_sums: np.ndarray


def row_col_sum_report(m, epsilon: float) -> SumReport:
    """Flag rows and columns whose sum falls outside ``[(1-eps) n, (1+eps) n]``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    a = as_matrix(m)
    n = a.shape[0]
    rs, cs = a.sum(axis=1), a.sum(axis=0)
    lo, hi = (1 - epsilon) * n, (1 + epsilon) * n
    bad = lambda s: [int(k) for k in np.flatnonzero((s < lo) | (s > hi))]
    return SumReport(epsilon, bad(rs), bad(cs), rs, cs)


def fit_epsilon(m) -> float:
    """Smallest ``eps`` for which at most ``eps*n`` rows and ``eps*n`` columns are exceptional."""
    a = as_matrix(m)
    n = a.shape[0]

    def fit(sums):
        dev = np.sort(np.abs(sums / n - 1.0))
        # allow k exceptions: eps >= k/n and eps >= the largest remaining deviation
        cands = [max(k / n, dev[n - k - 1]) for k in range(n)]
        return min(cands)

    eps = max(fit(a.sum(axis=1)), fit(a.sum(axis=0)))
    eps = max(eps * (1 + 1e-12), 1e-15)
    while True:
        rep = row_col_sum_report(a, eps)
        if len(rep.bad_rows) <= eps * n and len(rep.bad_cols) <= eps * n:
            return eps
        eps = np.nextafter(eps, 1.0)


def _check_band(a, lo, hi, what):
    if a.min() < lo or a.max() > hi:
        raise BandViolationError(f"{what} entries must lie in [{lo:g}, {hi:g}], got [{a.min():g}, {a.max():g}]")


def _check_window(epsilon, lam):
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not lam >= 1:
        raise ValueError("lambda must be at least 1")
    if not 4 * lam * epsilon < 1:
        raise EpsilonTooLargeError(f"need 4*lambda*epsilon < 1, got {4 * lam * epsilon:g}")


def _pick_removed(bad, k, n):
    chosen = list(bad)
    for idx in range(n):
        if len(chosen) >= k:
            break
        if idx not in bad:
            chosen.append(idx)
    return sorted(chosen)


@dataclass
class _Truncation:
    y: np.ndarray
    kept_rows: np.ndarray
    kept_cols: np.ndarray
    removed_rows: list[int]
    removed_cols: list[int]
    factors: np.ndarray


def _truncate(m, epsilon, lam) -> _Truncation:
    _check_window(epsilon, lam)
    a = as_matrix(m)
    n = a.shape[0]
    _check_band(a, 1 / lam, lam, "input")
    rep = row_col_sum_report(a, epsilon)
    if len(rep.bad_rows) > epsilon * n or len(rep.bad_cols) > epsilon * n:
        raise PermlawError(
            f"{len(rep.bad_rows)} bad rows / {len(rep.bad_cols)} bad columns exceed eps*n = {epsilon * n:g}"
        )
    k = math.ceil(epsilon * n)
    m_size = n - k
    if m_size < 1:
        raise EpsilonTooLargeError("truncation would remove every row")
    removed_rows = _pick_removed(rep.bad_rows, k, n)
    removed_cols = _pick_removed(rep.bad_cols, k, n)
    kept_rows = np.setdiff1d(np.arange(n), removed_rows)
    kept_cols = np.setdiff1d(np.arange(n), removed_cols)
    core = a[np.ix_(kept_rows, kept_cols)]
    factors = m_size / core.sum(axis=1)
    y = core * factors[:, None]
    try:
        _check_band(y, 1 / (2 * lam), 2 * lam, "rescaled")
    except BandViolationError as exc:
        raise EpsilonTooLargeError(f"row rescaling left the band: {exc}") from None
    return _Truncation(y, kept_rows, kept_cols, removed_rows, removed_cols, factors)


def truncate_and_rescale(m, epsilon: float, lam: float) -> np.ndarray:
    """Drop ``ceil(eps*n)`` rows and columns (all exceptional ones first) and rescale rows to sum ``m``."""
    return _truncate(m, epsilon, lam).y


@dataclass(frozen=True)
class ColumnBalance:
    matrix: np.ndarray
    iterations: int
    l1_change: float


def balance_columns(y, lam: float, cap: float | None = None) -> ColumnBalance:
    """Pairwise column balancing with transfer diagnostics.

    Mass always moves from the surplus column ``j`` to the deficient column
    ``i`` row by row, each transfer kept inside ``[(2 lam)^-1, cap]`` (``cap``
    defaults to ``2 lam``); the total moved is ``min(m - s_i, s_j - m)`` so one
    of the two columns ends at exactly ``m``.  Any ``cap`` works as long as the
    input already lies below it.
    """
    y = as_matrix(y)
    m = y.shape[0]
    lo = 1 / (2 * lam)
    hi = 2 * lam if cap is None else cap
    tol = 1e-9 * m
    tiny = 1e-15 * m
    rows0 = y.sum(axis=1)
    if np.max(np.abs(rows0 - m)) > tol:
        raise PermlawError("every row must sum to m before column balancing")
    _check_band(y, lo - 1e-12, hi + 1e-12, "column-balance input")
    moved = 0.0
    it = 0
    while True:
        s = y.sum(axis=0)
        deficient = np.flatnonzero(s < m - tol)
        surplus = np.flatnonzero(s > m + tol)
        if deficient.size == 0 and surplus.size == 0:
            break
        # rounding can leave only one side outside tol; pair it with the extreme column
        i = int(deficient[0]) if deficient.size else int(np.argmin(s))
        j = int(surplus[0]) if surplus.size else int(np.argmax(s))
        if not s[i] < m < s[j]:
            break
        fixed_before = int(np.sum(np.abs(s - m) <= tol))
        need = min(m - s[i], s[j] - m)
        for k in range(m):
            if need <= tiny:
                break
            amount = min(need, hi - y[k, i], y[k, j] - lo)
            if amount <= tiny:
                continue
            y[k, i] += amount
            y[k, j] -= amount
            need -= amount
            moved += amount
        it += 1
        if need > tol:
            raise BalanceInvariantError(f"columns {i}, {j} could not be balanced (residual {need:g})")
        s = y.sum(axis=0)
        if np.max(np.abs(y.sum(axis=1) - rows0)) > tol:
            raise BalanceInvariantError("a transfer changed a row sum")
        if int(np.sum(np.abs(s - m) <= tol)) <= fixed_before:
            raise BalanceInvariantError("an iteration failed to fix a column")
        if it > m:
            raise BalanceInvariantError("column balancing exceeded m iterations")
    return ColumnBalance(y, it, 2.0 * moved)


def pairwise_column_balance(y, lam: float) -> np.ndarray:
    """Return a matrix in ``m * Omega_m`` obtained from ``y`` by pairwise column transfers."""
    return balance_columns(y, lam).matrix


@dataclass(frozen=True)
class Stage:
    name: str
    metrics: dict


@dataclass(frozen=True)
class BalanceResult:
    approximant: np.ndarray
    l1_distance: float
    l1_bound: float
    core_rows: np.ndarray
    core_cols: np.ndarray
    stage_log: list[Stage] = field(default_factory=list)

    def core(self) -> np.ndarray:
        return self.approximant[np.ix_(self.core_rows, self.core_cols)]


def ds_approximate(x, epsilon: float, lam: float) -> BalanceResult:
    """Approximate ``x`` (entries in ``[1/lam, lam]``, few exceptional lines) inside ``n * Omega_n``.

    The glued diagonal block carries entries equal to ``n``; the entry band
    ``[(2 lam)^-1, 2 lam]`` is enforced on the core block only.
    """
    a = as_matrix(x)
    n = a.shape[0]
    tr = _truncate(a, epsilon, lam)
    m = tr.y.shape[0]
    # cap at 2 lam * m/n so the final n/m scaling keeps the core inside the band
    cap = 2 * lam * m / n
    if tr.y.max() > cap:
        raise EpsilonTooLargeError(f"rescaled entries reach {tr.y.max():g} > 2*lam*m/n = {cap:g}")
    bal = balance_columns(tr.y, lam, cap)
    core = bal.matrix * (n / m)

    out = np.zeros_like(a)
    out[np.ix_(tr.kept_rows, tr.kept_cols)] = core
    for r, c in zip(tr.removed_rows, tr.removed_cols):
        out[r, c] = n
    l1 = float(np.abs(a - out).sum())
    bound = float(16 * epsilon * lam**2 * n**2)

    log = [
        Stage("truncate", {"n": n, "m": m, "removed_rows": tr.removed_rows, "removed_cols": tr.removed_cols}),
        Stage(
            "rescale",
            {
                "factor_min": float(tr.factors.min()),
                "factor_max": float(tr.factors.max()),
                "factor_window": (1 - 2 * epsilon, 1 + 2 * lam * epsilon),
                "factors_in_window": bool(
                    tr.factors.min() >= 1 - 2 * epsilon and tr.factors.max() <= 1 + 2 * lam * epsilon
                ),
            },
        ),
        Stage("column_balance", {"iterations": bal.iterations, "l1_change": float(bal.l1_change),
                                 "l1_budget": float(4 * epsilon * lam**2 * m**2)}),
        Stage("glue", {"scale": n / m, "glued_entries": len(tr.removed_rows), "glued_value": float(n),
                       "core_min": float(core.min()), "core_max": float(core.max())}),
        Stage("result", {"l1_distance": l1, "l1_bound": float(bound)}),
    ]

    tol = 1e-9 * n
    if np.max(np.abs(out.sum(axis=1) - n)) > tol or np.max(np.abs(out.sum(axis=0) - n)) > tol:
        raise BalanceInvariantError("approximant is not in n * Omega_n")
    if core.min() < 1 / (2 * lam) - 1e-12 or core.max() > 2 * lam + 1e-12:
        raise BalanceInvariantError(
            f"core entries [{core.min():g}, {core.max():g}] leave [{1 / (2 * lam):g}, {2 * lam:g}]"
        )
    if l1 > bound:
        raise BalanceInvariantError(f"L1 distance {l1:g} exceeds 16*eps*lam^2*n^2 = {bound:g}")
    return BalanceResult(out, l1, bound, tr.kept_rows, tr.kept_cols, log)


def format_stage_log(stages) -> str:
    lines = []
    for st in stages:
        parts = []
        for key, val in st.metrics.items():
            if isinstance(val, float):
                val = f"{val:.6g}"
            elif isinstance(val, tuple):
                val = "[" + ",".join(f"{v:.6g}" for v in val) + "]"
            elif isinstance(val, list):
                val = "[" + ",".join(str(v) for v in val) + "]"
            parts.append(f"{key}={val}")
        lines.append(f"{st.name} " + " ".join(parts))
    return "\n".join(lines) + "\n"


def perm_continuity_gap(x, y, lam: float) -> tuple[float, float]:
    """``(|log per(x) - log per(y)|, lam^5 / n^2 * sum |x - y|)`` for in-band matrices."""
    a, b = as_matrix(x), as_matrix(y)
    if a.shape != b.shape:
        raise PermlawError("matrices must have the same shape")
    n = a.shape[0]
    if n > 12:
        raise SizeExceededError("continuity check limited to n <= 12")
    _check_band(a, 1 / lam, lam, "x")
    _check_band(b, 1 / lam, lam, "y")
    # log per = (log perm - log n!) / n; the factorial cancels in the difference
    lhs = abs(perm_ryser(a).log_magnitude - perm_ryser(b).log_magnitude) / n
    rhs = lam**5 / n**2 * float(np.abs(a - b).sum())
    return lhs, rhs
