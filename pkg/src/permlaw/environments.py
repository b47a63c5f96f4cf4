"""Deterministic ergodic environments and their ``Box_n`` matrices.

An :class:`Environment` is an immutable description of a field
``f(T^(i,j) omega)`` on the lattice ``N^2``.  ``entry(i, j)`` is a pure
function of the parameters, the seed and the index, so any corner of the
field can be sampled in any order.

Three families are provided:

``iid``
    independent ``Uniform[lo, hi]`` entries from a counter-based hash;
``product_rotation``
    ``f(x0 + i*alpha, y0 + j*beta)`` for two circle rotations and a function
    ``f`` on the torus;
``separable_profile``
    ``phi(x0 + i*alpha) * psi(y0 + j*beta)``, the case whose doubly
    stochastic part is identically one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .errors import AmplitudeError, PermlawError
from .matrix import log_factorial, perm_ryser, RYSER_MAX_N

__all__ = [
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
    "Environment",
    "LlpRecord",
    "iid_environment",
    "product_rotation_environment",
    "separable_profile_environment",
    "environment_from_dict",
    "analytic_scaling_mean",
    "profile_log_gm",
    "profile_log_gm_quadrature",
    "box_matrix",
    "llp_ratio_series",
    "llp_seed_sweep",
]

log = logging.getLogger(__name__)

DEFAULT_ALPHA = (math.sqrt(5) - 1) / 2
DEFAULT_BETA = math.sqrt(2) - 1

KINDS = ("iid", "product_rotation", "separable_profile")
PROFILES = ("constant", "affine_sine", "exp_sine")


# -- profiles on the circle ----------------------------------------------------


def _check_profile(spec):
    kind = spec.get("profile")
    if kind not in PROFILES:
        raise PermlawError(f"unknown profile {kind!r}; expected one of {PROFILES}")
    if kind == "constant":
        if not spec.get("c", 1.0) > 0:
            raise AmplitudeError("constant profile must be positive")
    elif kind == "affine_sine" and not abs(spec["a"]) < 1:
        raise AmplitudeError("affine-sine profile needs |a| < 1 to stay positive")


def _profile_value(spec, x):
    kind = spec["profile"]
    if kind == "constant":
        return np.full(np.shape(x), float(spec.get("c", 1.0)))
    if kind == "affine_sine":
        return 1.0 + spec["a"] * np.sin(2 * np.pi * x)
    return np.exp(spec["a"] * np.sin(2 * np.pi * x))


def _profile_range(spec):
    kind = spec["profile"]
    if kind == "constant":
        c = float(spec.get("c", 1.0))
        return c, c
    a = abs(spec["a"])
    if kind == "affine_sine":
        return 1 - a, 1 + a
    return math.exp(-a), math.exp(a)


def profile_log_gm(spec) -> float:
    """Closed-form ``log gm`` (integral of the log over one period)."""
    _check_profile(spec)
    kind = spec["profile"]
    if kind == "constant":
        return math.log(spec.get("c", 1.0))
    if kind == "affine_sine":
        a = spec["a"]
        return math.log((1 + math.sqrt(1 - a * a)) / 2)
    return 0.0


def profile_log_gm_quadrature(spec, points: int = 10_000) -> float:
    """Midpoint-rule ``log gm``; spectrally accurate for these smooth periodic profiles."""
    _check_profile(spec)
    x = (np.arange(points) + 0.5) / points
    return float(np.mean(np.log(_profile_value(spec, x))))


# -- environments ----------------------------------------------------------------


def _near_rational(theta, max_den=1000, tol=1e-12):
    q = np.arange(1, max_den + 1)
    return bool(np.any(np.abs(theta - np.round(theta * q) / q) <= tol))


@dataclass(frozen=True)
class Environment:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    lam: float = 1.0

    def with_seed(self, seed: int) -> "Environment":
        return replace(self, seed=int(seed))

    def start_point(self) -> tuple[float, float]:
        """Initial torus point; unset coordinates are drawn from the seed."""
        x0, y0 = self.params.get("x0"), self.params.get("y0")
        if x0 is None:
            x0 = float(rng.uniform(self.seed, 0, stream=rng.START_POINT))
        if y0 is None:
            y0 = float(rng.uniform(self.seed, 1, stream=rng.START_POINT))
        return x0, y0

    def orbit(self, i, j):
        """Torus coordinates of ``T^(i,j) omega``: ``i`` steps of the first rotation, ``j`` of the second."""
        x0, y0 = self.start_point()
        i = np.asarray(i, dtype=np.float64)
        j = np.asarray(j, dtype=np.float64)
        return np.mod(x0 + i * self.params["alpha"], 1.0), np.mod(y0 + j * self.params["beta"], 1.0)

    def entry(self, i, j):
        i, j = np.broadcast_arrays(np.asarray(i, dtype=np.int64), np.asarray(j, dtype=np.int64))
        p = self.params
        if self.kind == "iid":
            u = rng.uniform(self.seed, i, j, stream=rng.ENTRY)
            return p["lo"] + (p["hi"] - p["lo"]) * u
        x, y = self.orbit(i, j)
        if self.kind == "separable_profile":
            return _profile_value(p["phi"], x) * _profile_value(p["psi"], y)
        f = p["f"]
        if f["form"] == "separable":
            return _profile_value(f["phi"], x) * _profile_value(f["psi"], y)
        s = lambda t: np.sin(2 * np.pi * t)
        return np.exp(f["a"] * s(x) + f["b"] * s(y) + f["c"] * s(x + y))

    def value_range(self) -> tuple[float, float]:
        """Certified lower and upper bounds on every entry."""
        p = self.params
        if self.kind == "iid":
            return p["lo"], p["hi"]
        if self.kind == "separable_profile":
            f = {"form": "separable", "phi": p["phi"], "psi": p["psi"]}
        else:
            f = p["f"]
        if f["form"] == "separable":
            (a_lo, a_hi), (b_lo, b_hi) = _profile_range(f["phi"]), _profile_range(f["psi"])
            return a_lo * b_lo, a_hi * b_hi
        amp = abs(f["a"]) + abs(f["b"]) + abs(f["c"])
        return math.exp(-amp), math.exp(amp)

    def box(self, n: int) -> np.ndarray:
        return box_matrix(self, n)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, **_deep_copy(self.params)}


def _deep_copy(d):
    return {k: _deep_copy(v) if isinstance(v, dict) else v for k, v in d.items()}


def _lam_of(lo, hi):
    return max(hi, 1.0 / lo, 1.0)


def iid_environment(lo: float, hi: float, seed: int = 0) -> Environment:
    if not (lo > 0 and hi >= lo):
        raise PermlawError("iid environment needs 0 < lo <= hi")
    lo, hi = float(lo), float(hi)
    return Environment("iid", {"lo": lo, "hi": hi}, int(seed), _lam_of(lo, hi))


def _check_angle(name, theta):
    if _near_rational(theta):
        log.warning("rotation angle %s=%r is within 1e-12 of a rational with denominator <= 1000", name, theta)


def _check_f(f):
    form = f.get("form")
    if form == "separable":
        _check_profile(f["phi"])
        _check_profile(f["psi"])
    elif form == "exp_sine_sum":
        for key in ("a", "b", "c"):
            f.setdefault(key, 0.0)
    else:
        raise PermlawError(f"unknown f form {form!r}; expected 'separable' or 'exp_sine_sum'")


def product_rotation_environment(
    f_spec: dict, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA, x0=None, y0=None, seed: int = 0
) -> Environment:
    """Sample ``f`` along the orbit of two commuting circle rotations.

    ``f_spec`` is either ``{"form": "separable", "phi": ..., "psi": ...}`` or
    ``{"form": "exp_sine_sum", "a": .., "b": .., "c": ..}`` meaning
    ``exp(a sin 2πx + b sin 2πy + c sin 2π(x+y))``.
    """
    f = _deep_copy(f_spec)
    _check_f(f)
    _check_angle("alpha", alpha)
    _check_angle("beta", beta)
    env = Environment(
        "product_rotation",
        {"alpha": float(alpha), "beta": float(beta), "x0": x0, "y0": y0, "f": f},
        int(seed),
    )
    return replace(env, lam=_lam_of(*env.value_range()))


def separable_profile_environment(
    phi_spec: dict, psi_spec: dict, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA, x0=None, y0=None, seed: int = 0
) -> Environment:
    phi, psi = dict(phi_spec), dict(psi_spec)
    _check_profile(phi)
    _check_profile(psi)
    _check_angle("alpha", alpha)
    _check_angle("beta", beta)
    env = Environment(
        "separable_profile",
        {"alpha": float(alpha), "beta": float(beta), "x0": x0, "y0": y0, "phi": phi, "psi": psi},
        int(seed),
    )
    return replace(env, lam=_lam_of(*env.value_range()))


def environment_from_dict(d: dict) -> Environment:
    """Inverse of :meth:`Environment.to_dict`."""
    d = _deep_copy(d)
    kind = d.pop("kind", None)
    seed = int(d.pop("seed", 0))
    if kind == "iid":
        return iid_environment(d["lo"], d["hi"], seed)
    rot = {k: d[k] for k in ("alpha", "beta", "x0", "y0") if k in d}
    if kind == "product_rotation":
        return product_rotation_environment(d["f"], seed=seed, **rot)
    if kind == "separable_profile":
        return separable_profile_environment(d["phi"], d["psi"], seed=seed, **rot)
    raise PermlawError(f"unknown environment kind {kind!r}; expected one of {KINDS}")


def analytic_scaling_mean(env: Environment):
    """Scaling mean of the environment's function, or ``None`` when no closed form is known.

    For an i.i.d. field the invariant sigma-algebras are trivial, the
    competing scalings are constants and the answer is the mean.  For
    ``phi(x) * psi(y)`` the doubly stochastic part is 1 and the answer is
    ``gm(phi) * gm(psi)``.
    """
    p = env.params
    if env.kind == "iid":
        return 0.5 * (p["lo"] + p["hi"])
    if env.kind == "separable_profile":
        f = {"form": "separable", "phi": p["phi"], "psi": p["psi"]}
    else:
        f = p["f"]
    if f["form"] == "separable":
        return math.exp(profile_log_gm(f["phi"]) + profile_log_gm(f["psi"]))
    if f["a"] == 0 and f["b"] == 0 and f["c"] == 0:
        return 1.0
    if f["c"] == 0:
        # exp(a sin) * exp(b sin): both geometric means are exp(0)
        return 1.0
    return None


def box_matrix(env: Environment, n: int) -> np.ndarray:
    """``(f(T^(i,j) omega))`` for ``0 <= i, j < n``."""
    if n < 1:
        raise ValueError("n must be positive")
    idx = np.arange(n)
    return np.ascontiguousarray(env.entry(idx[:, None], idx[None, :]), dtype=np.float64)


@dataclass(frozen=True)
class LlpRecord:
    n: int
    per_value: float
    sm_reference: float
    ratio: float
    seed: int
    method: str = "exact"
    log_perm: float = math.nan


def llp_ratio_series(env: Environment, ns, bgg_samples: int = 20_000) -> list[LlpRecord]:
    """Permanental mean of ``Box_n`` over the analytic scaling mean, for each ``n``.

    Sizes up to 30 use the exact engine; larger ones fall back to the
    Gaussian determinant estimator and are flagged ``method="bgg"``.
    """
    sm = analytic_scaling_mean(env)
    if sm is None:
        raise PermlawError(f"no closed-form scaling mean for environment {env.to_dict()}")
    records = []
    for n in ns:
        a = box_matrix(env, int(n))
        if n <= RYSER_MAX_N:
            lp, method = perm_ryser(a), "exact"
        else:
            from .randomized import bgg_log_estimate

            lp, method = bgg_log_estimate(a, bgg_samples, env.seed), "bgg"
        per = math.exp((lp.log_magnitude - log_factorial(int(n))) / n)
        records.append(LlpRecord(int(n), per, sm, per / sm, env.seed, method, lp.log_magnitude))
    return records


def llp_seed_sweep(env: Environment, ns, seeds, **kwargs) -> list[LlpRecord]:
    out = []
    for s in seeds:
        out += llp_ratio_series(env.with_seed(s), ns, **kwargs)
    return out
