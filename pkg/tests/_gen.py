"""Random instance generators shared by the tests."""

import numpy as np


def birkhoff_mixture(n, rng, terms=None):
    """Convex combination of random permutation matrices (doubly stochastic, total support)."""
    terms = terms or rng.integers(1, 2 * n + 1)
    w = rng.dirichlet(np.ones(terms))
    g = np.zeros((n, n))
    for wk in w:
        g[np.arange(n), rng.permutation(n)] += wk
    return g


def capped_row_stochastic(n, lam, rng):
    """Matrix in n * S_n with entries <= lam: scale random rows and clip at lam until each sums to n."""
    a = np.empty((n, n))
    for i in range(n):
        x = rng.uniform(0, 1, n) ** rng.uniform(0.2, 3)
        lo, hi = 0.0, n * lam / max(x.min(), 1e-12)
        for _ in range(200):
            t = 0.5 * (lo + hi)
            if np.minimum(t * x, lam).sum() < n:
                lo = t
            else:
                hi = t
        row = np.minimum(hi * x, lam)
        a[i] = row * (n / row.sum())
    return a


def extremal_row_stochastic(n, lam, rng):
    """Rows with floor(n/lam) entries equal to lam and one remainder entry, shuffled."""
    a = np.zeros((n, n))
    full = int(n // lam)
    for i in range(n):
        row = np.zeros(n)
        row[:full] = lam
        if full < n:
            row[full] = n - full * lam
        a[i] = rng.permutation(row)
    return a


def block_all_ones(sizes, rng=None):
    n = sum(sizes)
    b = np.zeros((n, n))
    k = 0
    for s in sizes:
        b[k : k + s, k : k + s] = 1
        k += s
    if rng is not None:
        b = b[rng.permutation(n)][:, rng.permutation(n)]
    return b
