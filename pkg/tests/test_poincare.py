import numpy as np
import pytest

from fraclangevin import ValidationError, standard_model
from fraclangevin.poincare import (_nonlocal_pencil, poincare_mu1_1d, poincare_mu2_nonlocal_1d,
                                   sinh_grid)


def test_c1_gaussian(pair):
    est = poincare_mu1_1d(pair.U, np.linspace(-10, 10, 2001))
    assert 0.95 <= est.constant <= 1.05
    assert est.constant == pytest.approx(1.0, abs=1e-4)


def test_c1_curvature_scaling():
    c = poincare_mu1_1d(standard_model(k=4.0).U, np.linspace(-5, 5, 2001)).constant
    assert c == pytest.approx(0.25, rel=1e-3)


def test_c1_refinement_stable(pair):
    a = poincare_mu1_1d(pair.U, np.linspace(-10, 10, 1001)).constant
    b = poincare_mu1_1d(pair.U, np.linspace(-10, 10, 2001)).constant
    assert abs(a - b) <= 0.01 * b


def test_c1_grid_validation(pair):
    with pytest.raises(ValidationError):
        poincare_mu1_1d(pair.U, np.geomspace(1, 10, 50))
    with pytest.raises(ValidationError):
        poincare_mu1_1d(pair.U, np.linspace(-2, 2, 101))


def test_c2_positive_finite_stable(pair):
    a = poincare_mu2_nonlocal_1d(pair, n=801)
    b = poincare_mu2_nonlocal_1d(pair, n=1601)
    for e in (a, b):
        assert np.isfinite(e.constant) and e.constant > 0
    assert abs(a.constant - b.constant) <= 0.05 * b.constant
    assert not a.truncation_sensitive
    assert a.constant == pytest.approx(0.41703, rel=1e-3)


@pytest.mark.parametrize("beta", [1.5, 1.9, 2.25, 2.9])
def test_c2_admissible_range(beta):
    c = poincare_mu2_nonlocal_1d(standard_model(beta=beta), n=401).constant
    assert np.isfinite(c) and c > 0


def test_c2_decreases_with_beta():
    cs = [poincare_mu2_nonlocal_1d(standard_model(beta=b), n=401).constant for b in (1.5, 2.0, 2.5)]
    assert cs[0] > cs[1] > cs[2]


def test_constants_are_null_direction(pair):
    grid = sinh_grid(100.0, 101)
    E, V, m = _nonlocal_pencil(pair.Phi.density, 1.5, grid)
    one = np.ones(grid.size)
    assert np.abs(E @ one).max() <= 1e-10 * np.abs(E).max()
    assert np.abs(V @ one).max() <= 1e-12


def test_sinh_grid():
    g = sinh_grid(1000.0, 11)
    assert g[0] == pytest.approx(-1000.0) and g[-1] == pytest.approx(1000.0) and g[5] == 0.0
    with pytest.raises(ValidationError):
        sinh_grid(10.0, 10)


def test_c2_needs_one_dimension():
    with pytest.raises(ValidationError):
        poincare_mu2_nonlocal_1d(standard_model(d=2))
