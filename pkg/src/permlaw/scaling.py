"""Sinkhorn scaling, total-support detection and the scaling mean."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MaxIterationsError, NoTotalSupportError, PermlawError
from .matching import perfect_matching, rematch_without
from .matrix import as_matrix, format_matrix, parse_matrix

__all__ = [
    "SinkhornDecomposition",
    "SupportReport",
    "geometric_mean",
    "has_support",
    "support_report",
    "sinkhorn",
    "scaling_mean",
    "scaling_mean_direct",
    "direct_descent_trace",
    "format_decomposition",
    "parse_decomposition",
]

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000


def geometric_mean(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0 or np.any(~(v > 0)):
        raise PermlawError("geometric mean needs strictly positive components")
    return math.exp(float(np.mean(np.log(v))))


@dataclass(frozen=True)
class SupportReport:
    has_support: bool
    has_total_support: bool
    offending_entries: list[tuple[int, int]] = field(default_factory=list)


def has_support(m) -> bool:
    """Does the positivity pattern of ``m`` admit a perfect matching?"""
    return perfect_matching(as_matrix(m) > 0) is not None


def support_report(m) -> SupportReport:
    """Check, for every positive entry, whether some positive permutation passes through it.

    Offending entries are reported with 0-based ``(row, col)`` indices.
    """
    positive = as_matrix(m) > 0
    if positive.all():
        return SupportReport(True, True, [])
    match = perfect_matching(positive)
    entries = [tuple(int(t) for t in ij) for ij in np.argwhere(positive)]
    if match is None:
        return SupportReport(False, False, entries)
    offending = [(i, j) for i, j in entries if not rematch_without(positive, match, i, j)]
    return SupportReport(True, not offending, offending)


@dataclass(frozen=True)
class SinkhornDecomposition:
    """``m = diag(d) @ g @ diag(e)`` with ``g`` doubly stochastic."""

    d: np.ndarray
    e: np.ndarray
    g: np.ndarray
    iterations: int
    residual: float

    def reconstruct(self) -> np.ndarray:
        return self.d[:, None] * self.g * self.e[None, :]


def _residual(g):
    return max(float(np.max(np.abs(g.sum(axis=1) - 1.0))), float(np.max(np.abs(g.sum(axis=0) - 1.0))))


def sinkhorn(m, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, check_support: bool = True) -> SinkhornDecomposition:
    """Alternate row and column normalization until the core is doubly stochastic.

    Raises :class:`NoTotalSupportError` up front when the pattern forbids a
    decomposition, and :class:`MaxIterationsError` (carrying the last
    residual) when ``max_iter`` sweeps are not enough.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    a = as_matrix(m)
    if check_support:
        rep = support_report(a)
        if not rep.has_total_support:
            raise NoTotalSupportError(
                f"matrix lacks total support; entries on no positive permutation: {rep.offending_entries[:10]}"
            )
    n = a.shape[0]
    d = np.ones(n)
    e = np.ones(n)
    g = a.copy()
    res = _residual(g)
    it = 0
    while res > tol:
        if it >= max_iter:
            raise MaxIterationsError(f"Sinkhorn did not reach tol={tol:g} in {max_iter} sweeps (residual {res:.3e})", res)
        r = g.sum(axis=1)
        g /= r[:, None]
        d *= r
        c = g.sum(axis=0)
        g /= c[None, :]
        e *= c
        it += 1
        res = _residual(g)
    return SinkhornDecomposition(d, e, g, it, res)


def scaling_mean(m, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> float:
    """``gm(d) * gm(e) / n`` from the Sinkhorn decomposition of ``m``."""
    dec = sinkhorn(m, tol, max_iter)
    return geometric_mean(dec.d) * geometric_mean(dec.e) / len(dec.d)


def direct_descent_trace(m, iters: int = 1000) -> np.ndarray:
    """Objective values of the alternating minimization behind :func:`scaling_mean_direct`.

    Entry 0 is the objective at ``x = y = 1``; each later entry follows one
    full (x then y) update.
    """
    a = as_matrix(m)
    if np.any(a == 0):
        raise PermlawError("direct minimization needs strictly positive entries")
    n = a.shape[0]
    x = np.ones(n)
    y = np.ones(n)
    trace = [float(x @ a @ y) / n**2]
    for _ in range(iters):
        # for fixed y, x_i ∝ 1/(M y)_i is optimal (AM-GM); keep gm(x) = gm(y) = 1
        x = 1.0 / (a @ y)
        x /= geometric_mean(x)
        y = 1.0 / (a.T @ x)
        y /= geometric_mean(y)
        trace.append(float(x @ a @ y) / n**2)
    return np.array(trace)


def scaling_mean_direct(m, iters: int = 1000) -> float:
    """Scaling mean by direct alternating minimization over positive ``x, y``."""
    return float(direct_descent_trace(m, iters)[-1])


def format_decomposition(dec: SinkhornDecomposition) -> str:
    return "".join(
        [
            "D\n",
            format_matrix(np.diag(dec.d)),
            "G\n",
            format_matrix(dec.g),
            "E\n",
            format_matrix(np.diag(dec.e)),
            "iterations residual\n",
            f"{dec.iterations} {dec.residual:.17g}\n",
        ]
    )


def parse_decomposition(text: str) -> SinkhornDecomposition:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    sections = {}
    k = 0
    for name in ("D", "G", "E"):
        if lines[k] != name:
            raise PermlawError(f"expected section {name!r}, got {lines[k]!r}")
        n = int(lines[k + 1])
        sections[name] = parse_matrix("\n".join(lines[k + 1 : k + 2 + n]))
        k += 2 + n
    if lines[k] != "iterations residual":
        raise PermlawError("missing metadata line")
    it, res = lines[k + 1].split()
    return SinkhornDecomposition(
        np.diag(sections["D"]).copy(), np.diag(sections["E"]).copy(), sections["G"], int(it), float(res)
    )


def write_decomposition(path, dec: SinkhornDecomposition) -> None:
    Path(path).write_text(format_decomposition(dec))
