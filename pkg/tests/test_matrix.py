import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from permlaw.errors import (
    NegativeEntryError,
    NotBinaryError,
    PermlawError,
    SizeExceededError,
    ZeroPermanentError,
    ZeroRowError,
)
from permlaw.matrix import (
    LogValue,
    bregman_minc_bound,
    check_doubly_stochastic,
    count_perfect_matchings,
    format_matrix,
    log_factorial,
    parse_matrix,
    perm_bruteforce,
    perm_ryser,
    permanental_mean,
    stochastic_upper_bound,
    vdw_bounds,
)
from permlaw.scaling import sinkhorn

from _gen import block_all_ones, capped_row_stochastic, extremal_row_stochastic


def naive_perm(a):
    n = len(a)
    return math.fsum(math.prod(a[i][p[i]] for i in range(n)) for p in itertools.permutations(range(n)))


@pytest.mark.parametrize("engine", [perm_bruteforce, perm_ryser])
def test_permanent_examples(engine):
    assert engine([[1, 2], [3, 4]]).log_magnitude == pytest.approx(math.log(10), rel=1e-12)
    assert engine(np.eye(4)).log_magnitude == pytest.approx(0.0, abs=1e-12)
    assert engine(np.ones((3, 3))).log_magnitude == pytest.approx(math.log(6), rel=1e-12)
    assert engine([[7.5]]).log_magnitude == pytest.approx(math.log(7.5))


def test_ryser_on_uniform_matrix():
    # minimum of the permanent over doubly stochastic 4x4 matrices
    assert perm_ryser(np.full((4, 4), 0.25)).log_magnitude == pytest.approx(math.log(24 / 256), rel=1e-12)


def test_ryser_matches_bruteforce_7x7():
    a = np.random.default_rng(7).uniform(0, 1, (7, 7))
    a[a == 0] = 0.5
    assert perm_ryser(a).value == pytest.approx(naive_perm(a.tolist()), rel=1e-9)
    assert perm_bruteforce(a).value == pytest.approx(naive_perm(a.tolist()), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    arrays(
        np.float64,
        st.integers(1, 8).map(lambda n: (n, n)),
        elements=st.one_of(st.just(0.0), st.floats(1e-3, 5)),
    )
)
def test_oracle_equivalence(a):
    bf, ry = perm_bruteforce(a), perm_ryser(a)
    assert bf.is_zero == ry.is_zero
    if not bf.is_zero:
        assert abs(bf.log_magnitude - ry.log_magnitude) <= 1e-9


def test_zero_patterns():
    assert perm_ryser([[1, 1], [0, 0]]).is_zero
    assert perm_ryser([[1, 1, 1], [1, 0, 0], [1, 0, 0]]).is_zero
    assert perm_bruteforce([[1, 1, 1], [1, 0, 0], [1, 0, 0]]).is_zero
    with pytest.raises(ZeroPermanentError):
        permanental_mean([[0, 1], [0, 1]])


def test_guards():
    with pytest.raises(SizeExceededError):
        perm_bruteforce(np.ones((11, 11)))
    with pytest.raises(SizeExceededError):
        perm_ryser(np.ones((31, 31)))
    with pytest.raises(NegativeEntryError):
        perm_ryser([[1, -1], [1, 1]])
    with pytest.raises(PermlawError):
        perm_ryser(np.ones((2, 3)))
    with pytest.raises(PermlawError):
        perm_ryser(np.ones((0, 0)))


def test_ryser_large_n_uniform():
    # perm(J_n scaled to all-ones) = n!; exercises the tabulated + Gray-code split
    for n in (12, 16, 20):
        assert perm_ryser(np.ones((n, n))).log_magnitude == pytest.approx(log_factorial(n), rel=1e-12)
    assert perm_ryser(np.eye(24) * 3.0).log_magnitude == pytest.approx(24 * math.log(3), rel=1e-12)


def test_ryser_large_n_block_diagonal():
    b = block_all_ones([5, 6, 7, 4])
    assert perm_ryser(b).log_magnitude == pytest.approx(
        sum(log_factorial(k) for k in (5, 6, 7, 4)), rel=1e-11
    )


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0, 2, (6, 6))
    b = a[rng.permutation(6)][:, rng.permutation(6)]
    assert perm_ryser(b).log_magnitude == pytest.approx(perm_ryser(a).log_magnitude, abs=1e-11)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
def test_scaling_homogeneity(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.uniform(0.1, 2, (n, n))
    d, e = rng.uniform(0.1, 10, n), rng.uniform(0.1, 10, n)
    gm = lambda v: math.exp(np.mean(np.log(v)))
    lhs = permanental_mean(d[:, None] * m * e[None, :])
    assert lhs == pytest.approx(gm(d) * permanental_mean(m) * gm(e), rel=1e-9)


def test_permanental_mean_examples():
    assert permanental_mean(np.ones((3, 3))) == pytest.approx(1.0, rel=1e-14)
    p = 4 * np.eye(4)[[2, 0, 3, 1]]
    assert permanental_mean(p) == pytest.approx((4**4 / 24) ** 0.25, rel=1e-12)
    assert permanental_mean(p) == pytest.approx(1.80720, abs=1e-5)
    assert permanental_mean([[1, 2], [3, 4]]) == pytest.approx(math.sqrt(5), rel=1e-12)


def test_vdw_bounds():
    assert vdw_bounds(1) == (1.0, 1.0)
    assert vdw_bounds(2)[0] == pytest.approx(0.5)
    lo, hi = vdw_bounds(3)
    assert lo == pytest.approx(6 / 27) and hi == 1.0
    assert vdw_bounds(3, log=True)[0] == pytest.approx(math.log(6 / 27))
    with pytest.raises(ValueError):
        vdw_bounds(0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_vdw_sandwich(seed, n):
    rng = np.random.default_rng(seed)
    g = sinkhorn(rng.uniform(0.01, 1, (n, n)) ** 3, tol=1e-13).g
    assert check_doubly_stochastic(g, 1e-10).passed
    p = perm_ryser(g).value
    lo, hi = vdw_bounds(n)
    assert lo - 1e-8 <= p <= hi + 1e-8


def test_vdw_extremes_attained():
    n = 6
    assert perm_ryser(np.full((n, n), 1 / n)).value == pytest.approx(vdw_bounds(n)[0], rel=1e-12)
    assert perm_ryser(np.eye(n)[::-1]).value == pytest.approx(1.0, rel=1e-12)


def test_bregman_minc_examples():
    b = block_all_ones([2, 2])
    assert bregman_minc_bound(b).log_magnitude == pytest.approx(math.log(4), rel=1e-14)
    assert perm_ryser(b).value == pytest.approx(4.0, rel=1e-12)
    assert bregman_minc_bound(np.eye(5)).log_magnitude == 0.0
    with pytest.raises(NotBinaryError):
        bregman_minc_bound([[0.5, 1], [1, 1]])
    with pytest.raises(ZeroRowError):
        bregman_minc_bound([[0, 0], [1, 1]])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.floats(0.2, 0.9))
def test_bregman_minc_holds(seed, n, p):
    rng = np.random.default_rng(seed)
    b = (rng.random((n, n)) < p).astype(float)
    b[np.arange(n), rng.integers(0, n, n)] = 1  # no zero row
    exact = count_perfect_matchings(b)
    bound = bregman_minc_bound(b).log_magnitude
    assert exact == 0 or math.log(exact) <= bound + 1e-12


@pytest.mark.parametrize("sizes", [[3], [1, 1, 1], [2, 3], [4, 2, 2], [3, 3, 1, 1]])
def test_bregman_minc_equality_on_blocks(sizes):
    b = block_all_ones(sizes, np.random.default_rng(len(sizes)))
    exact = count_perfect_matchings(b)
    assert exact == math.prod(math.factorial(s) for s in sizes)
    assert bregman_minc_bound(b).log_magnitude == pytest.approx(math.log(exact), rel=1e-14, abs=1e-14)


def test_stochastic_upper_bound_examples():
    assert stochastic_upper_bound(4, 2).log_magnitude == pytest.approx(4 + 0.5 * math.log(4) + math.log(24))
    assert stochastic_upper_bound(4, 2).log_magnitude == pytest.approx(7.8712, abs=1e-4)
    assert stochastic_upper_bound(1, 1.5).log_magnitude == pytest.approx(3.0)
    with pytest.raises(ValueError):
        stochastic_upper_bound(3, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.sampled_from([1.5, 2.0, 3.0]), st.booleans())
def test_stochastic_upper_bound_holds(seed, n, lam, extremal):
    rng = np.random.default_rng(seed)
    gen = extremal_row_stochastic if extremal else capped_row_stochastic
    a = gen(n, lam, rng)
    assert np.allclose(a.sum(axis=1), n) and a.max() <= lam + 1e-12
    assert perm_ryser(a).log_magnitude <= stochastic_upper_bound(n, lam).log_magnitude


def test_check_doubly_stochastic():
    assert check_doubly_stochastic(np.full((3, 3), 1 / 3), 1e-12).passed
    assert check_doubly_stochastic([[0.6, 0.4], [0.4, 0.6]], 1e-12).passed
    rep = check_doubly_stochastic([[0.7, 0.4], [0.4, 0.6]], 1e-12)
    assert not rep.passed
    assert rep.max_row_deviation == pytest.approx(0.1)
    assert not check_doubly_stochastic([[1.5, -0.5], [-0.5, 1.5]]).passed


def test_count_perfect_matchings_against_bruteforce():
    rng = np.random.default_rng(3)
    for _ in range(30):
        n = rng.integers(1, 8)
        b = (rng.random((n, n)) < 0.6).astype(float)
        assert count_perfect_matchings(b) == round(perm_bruteforce(b).value)
    assert count_perfect_matchings(np.ones((20, 20), dtype=int)) == math.factorial(20)


def test_logvalue():
    assert LogValue.of(0).is_zero and LogValue.of(0).value == 0.0
    assert LogValue.of(2.5).value == pytest.approx(2.5)
    assert LogValue(1000.0).value == math.inf
    assert float(LogValue(0.0)) == 1.0


def test_text_format_roundtrip():
    a = np.random.default_rng(0).random((4, 4))
    assert np.array_equal(parse_matrix(format_matrix(a)), a)
    assert np.array_equal(parse_matrix("2\n1 2\n3 4\n"), [[1, 2], [3, 4]])


@pytest.mark.parametrize(
    "text",
    ["2\n1 2\n3\n", "2\n1 2\n3 4\n5 6\n", "2\n1 -2\n3 4\n", "x\n1\n", "", "2\n1 2 3\n4 5 6\n"],
)
def test_text_format_rejects(text):
    with pytest.raises(PermlawError):
        parse_matrix(text)
