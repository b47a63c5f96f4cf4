"""Compiled inner loops for the exact permanent engines."""

import numba as nb
import numpy as np

LOW_BITS = 8


@nb.njit(cache=True, fastmath=True)
def ryser_centered(a, low_bits):
    """Inclusion-exclusion permanent with each row centred at half its sum.

    For any offsets ``c_i`` the identity

        perm(A) = sum_S (-1)^(n-|S|) prod_i (sum_{j in S} a_ij - c_i)

    holds, because every term that does not use all columns cancels.  With
    ``c_i = R_i / 2`` the terms for ``S`` and its complement coincide, so only
    subsets avoiding column 0 are visited and the result is doubled.  The
    largest summand shrinks by ``2^n`` relative to the uncentred form.

    Columns ``1..L`` are tabulated once (all ``2^L`` partial row sums); the
    remaining columns are walked in Gray-code order, one column added or
    removed per step, and each step sweeps the whole table.
    """
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    m = n - 1
    L = min(low_bits, m)
    H = m - L
    size = 1 << L

    table = np.zeros((n, size))
    sgn = np.empty(size)
    sgn[0] = 1.0
    for s in range(1, size):
        j = 0
        while not (s >> j) & 1:
            j += 1
        prev = s & (s - 1)
        sgn[s] = -sgn[prev]
        for i in range(n):
            table[i, s] = table[i, prev] + a[i, 1 + j]

    base = np.empty(n)
    for i in range(n):
        r = 0.0
        for j in range(n):
            r += a[i, j]
        base[i] = -0.5 * r

    prod = np.empty(size)
    total = 0.0
    comp = 0.0
    hsign = -1.0 if n % 2 else 1.0
    for k in range(1 << H):
        if k > 0:
            j = 0
            while not (k >> j) & 1:
                j += 1
            col = 1 + L + j
            if ((k ^ (k >> 1)) >> j) & 1:
                for i in range(n):
                    base[i] += a[i, col]
            else:
                for i in range(n):
                    base[i] -= a[i, col]
            hsign = -hsign
        for s in range(size):
            prod[s] = sgn[s]
        for i in range(n):
            b = base[i]
            for s in range(size):
                prod[s] *= b + table[i, s]
        block = 0.0
        for s in range(size):
            block += prod[s]
        # Neumaier compensation across blocks
        p = hsign * block
        t = total + p
        if abs(total) >= abs(p):
            comp += (total - t) + p
        else:
            comp += (p - t) + total
        total = t
    return 2.0 * (total + comp)


@nb.njit(cache=True)
def count_matchings(adj):
    """Exact number of perfect matchings of a 0/1 matrix (subset DP, int64)."""
    n = adj.shape[0]
    dp = np.zeros(1 << n, dtype=np.int64)
    dp[0] = 1
    for mask in range(1 << n):
        c = dp[mask]
        if c == 0:
            continue
        i = 0
        x = mask
        while x:
            x &= x - 1
            i += 1
        if i == n:
            continue
        for j in range(n):
            if adj[i, j] and not (mask >> j) & 1:
                dp[mask | (1 << j)] += c
    return dp[(1 << n) - 1]


@nb.njit(cache=True)
def count_matchings_batch(adj):
    out = np.empty(adj.shape[0], dtype=np.int64)
    for s in range(adj.shape[0]):
        out[s] = count_matchings(adj[s])
    return out
