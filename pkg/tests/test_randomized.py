import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from permlaw import rng
from permlaw.environments import iid_environment, product_rotation_environment
from permlaw.errors import HypothesisViolationError, PermlawError, ProbabilityRangeError, SizeExceededError
from permlaw.randomized import (
    bgg_estimate,
    bgg_log_estimate,
    gaussian_det_sample,
    gaussian_log_det2,
    logdet_concentration_experiment,
    matching_count_sample,
    matching_counts,
    matching_expectation_experiment,
)


def test_det_sample_1x1_is_chi_square_draw():
    g = rng.normal(5, 0, 0, 0)
    assert gaussian_det_sample([[1.0]], 5).value == pytest.approx(g * g, rel=1e-14)
    assert gaussian_det_sample([[4.0]], 5).value == pytest.approx(4 * g * g, rel=1e-14)


def test_det_sample_zero_matrix():
    assert gaussian_det_sample(np.zeros((3, 3)), 0).is_zero
    assert bgg_log_estimate(np.zeros((3, 3)), 10, 0).is_zero


def test_det_sample_all_ones_2x2_mean():
    s = bgg_estimate(np.ones((2, 2)), 100_000, seed=1)
    assert s.target == pytest.approx(2.0)
    assert abs(s.z_score) <= 4


def test_row_sign_flip_invariance():
    a = np.random.default_rng(0).uniform(0.1, 2, (5, 5))
    g = rng.normal(9, 0, np.arange(5)[:, None], np.arange(5)[None, :])
    x = np.sqrt(a) * g
    flip = np.array([1, -1, -1, 1, -1])[:, None]
    assert np.linalg.det(flip * x) ** 2 == pytest.approx(np.linalg.det(x) ** 2, rel=1e-12)
    assert math.exp(gaussian_log_det2(a, 9)[0]) == pytest.approx(np.linalg.det(x) ** 2, rel=1e-10)


@pytest.mark.parametrize(
    "a",
    [np.eye(3), np.ones((4, 4)), np.random.default_rng(7).uniform(0, 1, (5, 5))],
    ids=["identity3", "ones4", "random5"],
)
def test_bgg_unbiased(a):
    s = bgg_estimate(a, 100_000, seed=2)
    assert s.samples == 100_000 and s.stderr > 0
    assert abs(s.z_score) <= 4, s


def test_bgg_minimal_and_guards():
    s = bgg_estimate(np.eye(2), 2, seed=0)
    assert math.isfinite(s.stderr) and s.stderr >= 0
    with pytest.raises(PermlawError):
        bgg_estimate(np.eye(2), 1, seed=0)
    with pytest.raises(SizeExceededError):
        bgg_estimate(np.eye(13), 10, seed=0)


def test_bgg_determinism_and_prefix_stability():
    a = np.random.default_rng(1).uniform(0.1, 1, (4, 4))
    assert bgg_estimate(a, 5000, 3) == bgg_estimate(a, 5000, 3)
    long = gaussian_log_det2(a, 3, 0, 10_000)
    assert np.array_equal(long[:5000], gaussian_log_det2(a, 3, 0, 5000))
    assert np.array_equal(long[4100:4200], gaussian_log_det2(a, 3, 4100, 100))


def test_logdet_median_goodman_oracle():
    n = 5
    summ = logdet_concentration_experiment(np.ones((n, n)), 10_000, seed=4)
    # det(G)^2 is a product of independent chi-square(k), k = 1..n
    gen = np.random.default_rng(0)
    ref = sum(np.log(gen.chisquare(k, 200_000)) for k in range(1, n + 1))
    assert abs(summ.median - np.median(ref)) < 0.15
    assert summ.log_n_factorial == pytest.approx(math.log(120))
    assert summ.median_gap < 3.0


def test_logdet_1x1_median():
    summ = logdet_concentration_experiment([[1.0]], 20_000, seed=5)
    assert summ.median == pytest.approx(math.log(stats.chi2.median(1)), abs=0.05)
    assert math.log(stats.chi2.median(1)) == pytest.approx(math.log(0.4549), abs=1e-3)


def test_logdet_small_run_and_hypothesis_check():
    summ = logdet_concentration_experiment(np.ones((3, 3)), 10, seed=0)
    assert summ.samples == 10 and summ.values.shape == (10,)
    with pytest.raises(HypothesisViolationError):
        logdet_concentration_experiment(3 * np.ones((3, 3)), 10, seed=0)
    with pytest.raises(HypothesisViolationError):
        logdet_concentration_experiment(3 * np.eye(3), 10, seed=0)


def test_matching_examples():
    assert matching_count_sample(np.eye(4), 0) == 1
    assert matching_count_sample(np.zeros((4, 4)), 0) == 0
    assert np.all(matching_counts(np.ones((3, 3)), 1, 0, 50) == 6)
    counts = matching_counts(np.full((3, 3), 0.5), 2, 0, 100_000)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    assert abs(counts.mean() - 0.75) <= 4 * se
    bern = matching_counts([[0.3]], 3, 0, 100_000)
    assert abs(bern.mean() - 0.3) <= 4 * math.sqrt(0.21 / 1e5)


def test_matching_experiment_examples():
    env = iid_environment(1, 1, seed=0)
    s = matching_expectation_experiment(env, 3, 100, seed=0)
    assert s.mean == 6 and s.target == pytest.approx(6) and s.z_score == 0
    s = matching_expectation_experiment(iid_environment(0.2, 0.9, seed=1), 6, 100_000, seed=6)
    assert abs(s.z_score) <= 4, s
    assert matching_expectation_experiment(iid_environment(0.2, 0.9, seed=1), 6, 3000, seed=6) == (
        matching_expectation_experiment(iid_environment(0.2, 0.9, seed=1), 6, 3000, seed=6)
    )


def test_matching_probability_range():
    with pytest.raises(ProbabilityRangeError):
        matching_expectation_experiment(iid_environment(0.5, 1.5), 3, 10, 0)
    with pytest.raises(ProbabilityRangeError):
        matching_count_sample([[1.2]], 0)
    env = product_rotation_environment({"form": "exp_sine_sum", "a": 0.2})
    with pytest.raises(ProbabilityRangeError):
        matching_expectation_experiment(env, 3, 10, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7))
def test_matching_count_matches_brute_force(seed, n):
    import itertools

    p = np.random.default_rng(seed).uniform(0, 1, (n, n))
    k = seed % 1000
    u = rng.uniform(seed, k, np.arange(n)[:, None], np.arange(n)[None, :], stream=rng.EDGE)
    adj = u < p
    brute = sum(all(adj[i, s[i]] for i in range(n)) for s in itertools.permutations(range(n)))
    assert matching_count_sample(p, seed, k) == brute
