"""Monte-Carlo checks: Gaussian determinant estimator and random bipartite matchings.

All randomness is counter-based (see :mod:`permlaw.rng`) and keyed by
``(seed, sample_index, i, j)``, so a run with more samples extends a run with
fewer without reshuffling earlier draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import _kernels, rng
from .environments import Environment, box_matrix
from .errors import HypothesisViolationError, PermlawError, ProbabilityRangeError, SizeExceededError
from .matrix import LogValue, as_matrix, check_doubly_stochastic, log_factorial, perm_ryser

__all__ = [
    "McSummary",
    "ConcentrationSummary",
    "gaussian_det_sample",
    "gaussian_log_det2",
    "bgg_estimate",
    "bgg_log_estimate",
    "logdet_concentration_experiment",
    "matching_count_sample",
    "matching_counts",
    "matching_expectation_experiment",
]

BLOCK = 4096
EXACT_TARGET_MAX_N = 12
MATCHING_MAX_N = 20


@dataclass(frozen=True)
class McSummary:
    samples: int
    mean: float
    stderr: float
    target: float
    z_score: float


def _summarize(values, target) -> McSummary:
    values = np.asarray(values, dtype=np.float64)
    s = values.size
    if s < 2:
        raise PermlawError("need at least 2 samples")
    mean = float(np.sum(values) / s)  # numpy sums pairwise
    stderr = float(np.std(values, ddof=1) / math.sqrt(s))
    if stderr > 0:
        z = (mean - target) / stderr
    else:
        z = 0.0 if mean == target else math.copysign(math.inf, mean - target)
    return McSummary(s, mean, stderr, float(target), float(z))


def _gaussians(seed, start, count, n):
    k = np.arange(start, start + count)[:, None, None]
    i = np.arange(n)[None, :, None]
    j = np.arange(n)[None, None, :]
    return rng.normal(seed, k, i, j, stream=rng.GAUSSIAN)


def gaussian_log_det2(a, seed: int, start: int = 0, count: int = 1) -> np.ndarray:
    """``log det(X)^2`` for samples ``start .. start+count-1``; ``-inf`` marks a zero determinant.

    ``x_ij = sqrt(a_ij) * g_ij`` with ``g`` standard normal; determinants come
    from LU with partial pivoting.
    """
    a = as_matrix(a)
    root = np.sqrt(a)
    out = np.empty(count)
    for lo in range(0, count, BLOCK):
        c = min(BLOCK, count - lo)
        x = root[None] * _gaussians(seed, start + lo, c, a.shape[0])
        sign, logabs = np.linalg.slogdet(x)
        out[lo : lo + c] = np.where(sign == 0, -np.inf, 2.0 * logabs)
    return out


def gaussian_det_sample(a, seed: int, sample: int = 0) -> LogValue:
    """One draw of ``det(X)^2`` as a :class:`LogValue`."""
    ld = float(gaussian_log_det2(a, seed, sample, 1)[0])
    return LogValue.zero() if ld == -math.inf else LogValue(ld)


def bgg_estimate(a, samples: int, seed: int) -> McSummary:
    """Sample mean of ``det(X)^2`` against the exact permanent (``n <= 12``)."""
    a = as_matrix(a)
    if a.shape[0] > EXACT_TARGET_MAX_N:
        raise SizeExceededError(f"exact target limited to n <= {EXACT_TARGET_MAX_N}")
    vals = np.exp(gaussian_log_det2(a, seed, 0, samples))
    return _summarize(vals, perm_ryser(a).value)


def bgg_log_estimate(a, samples: int, seed: int) -> LogValue:
    """``log`` of the sample mean of ``det(X)^2``, overflow-safe; no exact target needed."""
    ld = gaussian_log_det2(a, seed, 0, samples)
    if np.all(ld == -np.inf):
        return LogValue.zero()
    return LogValue(float(logsumexp(ld) - math.log(samples)))


@dataclass(frozen=True)
class ConcentrationSummary:
    samples: int
    median: float
    iqr: float
    log_n_factorial: float
    median_gap: float
    deviation_scale: float
    values: np.ndarray


def logdet_concentration_experiment(a, samples: int, seed: int, tol: float = 1e-9) -> ConcentrationSummary:
    """Empirical law of ``log det(X)^2`` for ``a`` in ``n * Omega_n`` with positive entries.

    ``deviation_scale`` is ``sqrt(lam * n)`` with ``lam`` the largest entry; it
    is reported for context only since the polylog factor and constants are
    unspecified.
    """
    a = as_matrix(a)
    n = a.shape[0]
    if not check_doubly_stochastic(a / n, tol).passed:
        raise HypothesisViolationError("variance profile must lie in n * Omega_n")
    if a.min() <= 0:
        raise HypothesisViolationError("variance profile entries must be bounded away from zero")
    vals = gaussian_log_det2(a, seed, 0, samples)
    q25, med, q75 = np.quantile(vals, [0.25, 0.5, 0.75])
    lnf = log_factorial(n)
    return ConcentrationSummary(
        samples, float(med), float(q75 - q25), lnf, float(abs(med - lnf)), math.sqrt(a.max() * n), vals
    )


def _check_probabilities(p):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise PermlawError("probability matrix must be square")
    if np.any(~((p >= 0) & (p <= 1))):
        raise ProbabilityRangeError("edge probabilities must lie in [0, 1]")
    if p.shape[0] > MATCHING_MAX_N:
        raise SizeExceededError(f"matching counts limited to n <= {MATCHING_MAX_N}")
    return p


def matching_counts(p, seed: int, start: int = 0, count: int = 1) -> np.ndarray:
    """Perfect-matching counts of independent random bipartite graphs with edge probabilities ``p``."""
    p = _check_probabilities(p)
    n = p.shape[0]
    out = np.empty(count, dtype=np.int64)
    for lo in range(0, count, BLOCK):
        c = min(BLOCK, count - lo)
        k = np.arange(start + lo, start + lo + c)[:, None, None]
        u = rng.uniform(seed, k, np.arange(n)[None, :, None], np.arange(n)[None, None, :], stream=rng.EDGE)
        out[lo : lo + c] = _kernels.count_matchings_batch((u < p[None]).astype(np.uint8))
    return out


def matching_count_sample(p, seed: int, sample: int = 0) -> int:
    """Number of perfect matchings in one sampled graph (edge ``(i, j)`` iff ``u < p_ij``)."""
    return int(matching_counts(p, seed, sample, 1)[0])


def matching_expectation_experiment(env: Environment, n: int, samples: int, seed: int) -> McSummary:
    """Mean matching count over graphs drawn from ``Box_n`` of a fixed environment, against its permanent."""
    lo, hi = env.value_range()
    if hi > 1 or lo < 0:
        raise ProbabilityRangeError(f"environment values [{lo:g}, {hi:g}] are not probabilities")
    if n > EXACT_TARGET_MAX_N:
        raise SizeExceededError(f"exact target limited to n <= {EXACT_TARGET_MAX_N}")
    p = box_matrix(env, n)
    counts = matching_counts(p, seed, 0, samples)
    return _summarize(counts.astype(np.float64), perm_ryser(p).value)
