"""Counter-based pseudo-randomness.

Every value is a pure function of ``(seed, stream, *counters)``: there is no
generator state, so draws can be requested in any order, in any batch shape,
and from any number of workers with identical results.  The mixing function
is the splitmix64 finalizer applied once per absorbed counter.
"""

import numpy as np
from scipy.special import ndtri

__all__ = ["ENTRY", "START_POINT", "GAUSSIAN", "EDGE", "hash_counters", "uniform", "normal"]

# stream tags keep unrelated consumers of the same seed decorrelated
ENTRY = 1
START_POINT = 2
GAUSSIAN = 3
EDGE = 4

_MASK = (1 << 64) - 1
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _as_u64(x):
    if isinstance(x, (int, np.integer)):
        return np.uint64(int(x) & _MASK)
    x = np.asarray(x)
    if x.dtype.kind == "i":
        return x.astype(np.int64).view(np.uint64)
    return x.astype(np.uint64)


def hash_counters(seed, *counters, stream=0):
    """Return uint64 hashes of ``(seed, stream, counters...)``, broadcasting the counters."""
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(_as_u64(seed) + _GOLDEN * np.uint64(stream + 1), dtype=np.uint64))
        for c in counters:
            h = _mix((h ^ _as_u64(c)) + _GOLDEN)
    return h


def uniform(seed, *counters, stream=0):
    """Uniform doubles in the open interval (0, 1)."""
    h = hash_counters(seed, *counters, stream=stream)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normal(seed, *counters, stream=GAUSSIAN):
    """Standard normal draws by inverse-CDF transform of :func:`uniform`."""
    return ndtri(uniform(seed, *counters, stream=stream))
