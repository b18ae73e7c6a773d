import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fraclangevin import ValidationError
from fraclangevin.stable_noise import (StableParams, cf_distance, empirical_cf, positive_stable,
                                       sample_increment)

N = 100_000
U_GRID = np.linspace(-3, 3, 61)


def test_cauchy_median_and_ks(rng):
    x = sample_increment(StableParams(1.0), 1.0, rng, N)[:, 0]
    q75, q25 = np.percentile(x, [75, 25])
    assert abs(np.median(x)) <= 3 * (q75 - q25) / math.sqrt(N)
    D = stats.kstest(x, lambda t: 0.5 + np.arctan(t) / np.pi).statistic
    assert D <= 1.36 / math.sqrt(N)


def test_self_similarity(rng):
    a = 1.5
    big = sample_increment(StableParams(a), 4.0, rng, 20_000)[:, 0]
    small = 4.0 ** (1 / a) * sample_increment(StableParams(a), 1.0, rng, 20_000)[:, 0]
    assert stats.ks_2samp(big, small).pvalue >= 0.05


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.99])
@pytest.mark.parametrize("dim", [1, 2, 3])
def test_cf_distance_bound(alpha, dim, rng):
    assert cf_distance(StableParams(alpha, dim), N, U_GRID, rng) <= 3 / math.sqrt(N)


def test_isotropic_projections(rng):
    # any unit direction of a 2-d isotropic draw has the 1-d law
    X = sample_increment(StableParams(1.2, 2), 1.0, rng, N)
    e = np.array([0.6, 0.8])
    proj = X @ e
    u = np.linspace(-2, 2, 21)
    assert np.max(np.abs(empirical_cf(proj, u) - np.exp(-np.abs(u) ** 1.2))) <= 3 / math.sqrt(N)


def test_positive_stable_laplace_transform(rng):
    a = 0.75
    s = positive_stable(a, 200_000, rng)
    assert np.all(s > 0)
    for lam in (0.5, 1.0, 2.0):
        assert np.mean(np.exp(-lam * s)) == pytest.approx(math.exp(-lam**a), abs=4e-3)


def test_cf_at_zero_is_one(rng):
    s = sample_increment(StableParams(1.5), 1.0, rng, 1000)[:, 0]
    assert empirical_cf(s, np.array([0.0]))[0] == 1.0


def test_reproducibility():
    a = sample_increment(StableParams(1.3, 2), 0.01, np.random.default_rng(7), 500)
    b = sample_increment(StableParams(1.3, 2), 0.01, np.random.default_rng(7), 500)
    assert np.array_equal(a, b)


def test_dt_scaling_exact():
    a = sample_increment(StableParams(1.3), 0.01, np.random.default_rng(3), 50)
    b = sample_increment(StableParams(1.3), 1.0, np.random.default_rng(3), 50)
    np.testing.assert_allclose(a, 0.01 ** (1 / 1.3) * b, rtol=1e-14)


def test_shape():
    rng = np.random.default_rng(0)
    assert sample_increment(StableParams(1.5, 3), 0.1, rng).shape == (3,)
    assert sample_increment(StableParams(1.5, 2), 0.1, rng, (4, 5)).shape == (4, 5, 2)


@pytest.mark.parametrize("alpha", [0.0, 2.0, 2.5])
def test_invalid_alpha(alpha):
    with pytest.raises(ValidationError):
        StableParams(alpha)


def test_cf_distance_needs_large_sample(rng):
    with pytest.raises(ValidationError):
        cf_distance(StableParams(1.5), 100, U_GRID, rng)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.3, 1.95))
def test_cf_distance_sign_flip_invariant(seed, alpha):
    s = sample_increment(StableParams(alpha), 1.0, np.random.default_rng(seed), 10_000)
    p = StableParams(alpha)
    a = cf_distance(p, 10_000, U_GRID, None, samples=s)
    b = cf_distance(p, 10_000, U_GRID, None, samples=-s)
    assert a == pytest.approx(b, abs=1e-15)
