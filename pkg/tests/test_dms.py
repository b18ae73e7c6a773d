import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraclangevin import HypothesisError, ValidationError
from fraclangevin import dms

pos = st.floats(1e-3, 1e3)


def explicit_model():
    return dms.build_matrix_model(2, 1, A=np.array([[1.0]]), J=np.zeros((1, 1)), K=np.array([[-1.0]]))


def test_rate_bound_unit():
    r = dms.rate_bound(1, 1, 1, 1)
    assert (r.eps0, r.lambda0, r.bigC) == (0.25, 0.05, 5 / 3)


def test_rate_bound_lambda_four():
    r = dms.rate_bound(1, 1, 1, 4)
    assert r.eps0 == pytest.approx(0.1, rel=1e-15)
    assert r.lambda0 == pytest.approx(0.1 / (2 * 1.05 * 5), rel=1e-14)
    assert r.bigC == pytest.approx(2.1 / 1.9, rel=1e-14)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_rate_bound_validation(bad):
    with pytest.raises(ValidationError):
        dms.rate_bound(bad, 1, 1, 1)
    with pytest.raises(ValidationError):
        dms.rate_bound(1, 1, 1, bad)


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, pos)
def test_rate_bound_positive(a1, a2, a3, lam):
    r = dms.rate_bound(a1, a2, a3, lam)
    assert r.lambda0 > 0 and r.bigC >= 1
    # C = 1 + O(eps0 / sqrt(lam)) only rounds to 1 below machine resolution
    assert r.bigC > 1 or r.eps0 / np.sqrt(lam) < 1e-15
    assert r.eps0 <= np.sqrt(lam) / 2


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, pos, st.floats(1.0, 100.0))
def test_rate_bound_monotone_in_alpha1(a1, a2, a3, lam, factor):
    assert dms.rate_bound(a1 * factor, a2, a3, lam).lambda0 <= dms.rate_bound(a1, a2, a3, lam).lambda0


def test_optimize_lambda_against_grid():
    lam, r = dms.optimize_lambda(1, 1, 1, (0.01, 100))
    grid = np.geomspace(0.01, 100, 10_000)
    best = max(dms.rate_bound(1, 1, 1, g).lambda0 for g in grid)
    assert r.lambda0 == pytest.approx(best, rel=1e-3)
    assert r.lambda0 >= dms.rate_bound(1, 1, 1, 1).lambda0
    assert dms.optimize_lambda(1, 1, 1, (0.005, 200))[1].lambda0 >= r.lambda0


def test_optimize_lambda_frozen():
    lam, r = dms.optimize_lambda(1, 1, 1)
    assert lam == pytest.approx(0.4656, rel=1e-3) and r.lambda0 == pytest.approx(0.07760, rel=1e-3)


@pytest.mark.parametrize("seed", range(5))
def test_matrix_model_structure(seed):
    m = dms.build_matrix_model(8, 3, seed=seed)
    assert np.linalg.norm(m.L0 + m.L0.T) == 0.0
    assert np.linalg.norm(m.pi @ m.L0 @ m.pi) <= 1e-14
    assert np.linalg.norm(m.L1 @ m.pi) <= 1e-14


def test_matrix_model_reproducible():
    a = dms.build_matrix_model(7, 2, seed=42)
    b = dms.build_matrix_model(7, 2, seed=42)
    assert np.array_equal(a.L0, b.L0) and np.array_equal(a.L1, b.L1)


def test_explicit_model_alphas(rng):
    m = explicit_model()
    a = dms.estimate_alphas(m, 1.0)
    assert a.alpha1 == pytest.approx(1.0, rel=1e-12) and a.alpha2 == pytest.approx(1.0, rel=1e-12)
    # boundedness bound holds with the computed alpha3 on random f
    P = np.eye(2) - m.pi
    M = dms.B_lambda(m, 1.0) @ m.L @ P
    ratios = [np.linalg.norm(M @ f) / np.linalg.norm(P @ f) for f in rng.standard_normal((100, 2))]
    assert max(ratios) <= a.alpha3 * (1 + 1e-12)
    # the complement is one-dimensional, so every f attains the bound
    assert min(ratios) == pytest.approx(a.alpha3, rel=1e-12)
    assert a.alpha3 == pytest.approx(0.5, rel=1e-12)


def test_alpha_scaling():
    m = dms.build_matrix_model(6, 2, seed=3)
    a = dms.estimate_alphas(m, 1.0)
    m2 = dms.MatrixModel(m.n, m.k, m.L0, 2 * m.L1, m.pi)
    assert dms.estimate_alphas(m2, 1.0).alpha1 == pytest.approx(a.alpha1 / 2, rel=1e-10)
    A = np.array([[1.0]])
    m1 = dms.build_matrix_model(2, 1, A=A, J=np.zeros((1, 1)), K=np.array([[-1.0]]))
    m4 = dms.build_matrix_model(2, 1, A=2 * A, J=np.zeros((1, 1)), K=np.array([[-1.0]]))
    assert dms.estimate_alphas(m4, 1.0).alpha2 == pytest.approx(dms.estimate_alphas(m1, 1.0).alpha2 / 4)


def test_no_dissipation_infeasible():
    m = dms.build_matrix_model(4, 2, seed=0)
    m0 = dms.MatrixModel(m.n, m.k, m.L0, np.zeros_like(m.L1), m.pi)
    with pytest.raises(HypothesisError):
        dms.estimate_alphas(m0, 1.0)


def test_decay_t0_and_random_models():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 50, 50)
    for seed in range(20):
        n = int(rng.integers(2, 11))
        k = int(rng.integers(1, n // 2 + 1))
        m = dms.build_matrix_model(n, k, seed=seed)
        rates = dms.rate_bound(*dms.estimate_alphas(m, 1.0), 1.0)
        rep = dms.verify_decay(m, rates, t, rng.standard_normal((20, n)))
        assert rep.passed, seed
        assert rep.table[0][1] <= rates.bigC
        assert rep.expm_eig_discrepancy is None or rep.expm_eig_discrepancy < 1e-8
        assert rep.spectral_rate >= rates.lambda0


def test_entropy_equivalence():
    rng = np.random.default_rng(1)
    for seed in range(5):
        m = dms.build_matrix_model(6, 2, seed=seed)
        r = dms.rate_bound(*dms.estimate_alphas(m, 1.0), 1.0)
        rep = dms.entropy_equivalence_check(m, 1.0, r.eps0, rng.standard_normal((200, 6)))
        assert rep.passed and rep.equivalence_established


def test_entropy_zero_vector():
    m = explicit_model()
    rep = dms.entropy_equivalence_check(m, 1.0, 0.25, np.zeros((1, 2)))
    assert rep.passed and rep.lower_violation <= 0 and rep.upper_violation <= 0


def test_entropy_negative_case():
    rng = np.random.default_rng(2)
    m = dms.build_matrix_model(6, 2, seed=0)
    rep = dms.entropy_equivalence_check(m, 1.0, 2.0, rng.standard_normal((1000, 6)))
    # the lower constant is no longer positive, so equivalence is lost
    assert rep.lower_constant < 0 and not rep.equivalence_established and not rep.passed


def test_B_lambda_properties(rng):
    for seed in range(3):
        m = dms.build_matrix_model(7, 3, seed=seed)
        B = dms.B_lambda(m, 0.7)
        np.testing.assert_allclose(m.pi @ B, B, atol=1e-13)
        res = dms.check_B_bounds(m, 0.7, rng.standard_normal((100, 7)))
        assert res["max_excess"] <= 1e-12 and res["pi_B_minus_B"] <= 1e-13, res


def test_sde_alphas_frozen():
    a1, a2 = dms.sde_alphas(1.0, 0.41703, 5 / 6, 1, 1.5)
    assert a2 == pytest.approx(1.2, rel=1e-12)
    assert a1 > 0
