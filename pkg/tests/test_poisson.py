import numpy as np
import pytest
from scipy.special import beta as B

from fraclangevin import NumericalError, ValidationError, standard_model
from fraclangevin.fields import Field
from fraclangevin.poisson import (c_star, convergence_order, pi_L0sq_pi_residual, solve_poisson_fd_1d,
                                  solve_poisson_fk)
from fraclangevin.quadrature import QuadratureSpec
from fraclangevin.suites import position_suite

h_lin = lambda x: np.asarray(x)[..., 0]  # noqa: E731
h_one = lambda x: np.ones(np.shape(x)[:-1])  # noqa: E731
h_herm2 = lambda x: np.asarray(x)[..., 0] ** 2 - 1  # noqa: E731


def manufactured():
    """f = exp(-x^2) cos 2x and h = f - f'' + x f' for U = x^2/2."""
    def f(x):
        return np.exp(-x**2) * np.cos(2 * x)

    def h(X):
        x = X[..., 0]
        e = np.exp(-x**2)
        fp = e * (-2 * x * np.cos(2 * x) - 2 * np.sin(2 * x))
        fpp = e * ((4 * x * x - 2) * np.cos(2 * x) + 8 * x * np.sin(2 * x) - 4 * np.cos(2 * x))
        return f(x) - fpp + x * fp

    return f, h


def c_star_closed_form(d, beta):
    # (1/d) E|grad Phi|^2 with Beta-function moments of (1+r^2)^{-(d+beta)/2}
    return (d + beta) ** 2 / d * B(d / 2 + 1, beta / 2 + 1) / B(d / 2, beta / 2)


@pytest.mark.parametrize("h,x,ref", [(h_one, 0.3, 1.0), (h_lin, 0.7, 0.35), (h_herm2, 1.0, 0.0)])
def test_fk_examples(pair, h, x, ref):
    est = solve_poisson_fk(pair.U, h, [x], n_paths=40_000, rng=np.random.default_rng(11))
    se = max(est.stderr, 1e-12)
    assert abs(est.estimate - ref) <= 3 * se + (1e-12 if h is h_one else 0)


def test_fk_richardson_attached(pair):
    est = solve_poisson_fk(pair.U, h_lin, [0.7], n_paths=20_000, rng=np.random.default_rng(2),
                           richardson=True)
    assert est.half_step_estimate is not None and est.richardson is not None
    m, s = est
    assert m == est.estimate and s == est.stderr


def test_fk_validation(pair):
    with pytest.raises(ValidationError):
        solve_poisson_fk(pair.U, h_lin, [0.0], horizon=5.0)
    with pytest.raises(ValidationError):
        solve_poisson_fk(pair.U, h_lin, [0.0], dt=0.0)


def test_fd_constant_and_linear(pair):
    grid = np.linspace(-8, 8, 801)
    one = solve_poisson_fd_1d(pair.U, h_one, grid)
    assert np.max(np.abs(one.f - 1)) <= 1e-10
    lin = solve_poisson_fd_1d(pair.U, h_lin, grid)
    inner = np.abs(grid) <= 4
    assert np.max(np.abs(lin.f[inner] - grid[inner] / 2)) <= 1e-6


def test_fd_second_order(pair):
    f, h = manufactured()
    errs, hs = [], []
    for n in (201, 401, 801, 1601):
        g = np.linspace(-8, 8, n)
        sol = solve_poisson_fd_1d(pair.U, h, g)
        m = np.abs(g) <= 4
        errs.append(np.max(np.abs(sol.f[m] - f(g[m]))))
        hs.append(g[1] - g[0])
    assert np.all(np.diff(errs) < 0)
    assert 1.8 <= convergence_order(errs, hs) <= 2.2
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


def test_fd_far_field_boundary(pair):
    sol = solve_poisson_fd_1d(pair.U, h_lin, np.linspace(-8, 8, 801), "far-field-decay")
    assert abs(sol(0.7) - 0.35) <= 1e-6 and sol.boundary == "far-field-decay"


def test_fd_maximum_principle(pair):
    h = lambda x: np.sin(np.asarray(x)[..., 0])  # noqa: E731
    sol = solve_poisson_fd_1d(pair.U, h, np.linspace(-8, 8, 801))
    assert np.max(np.abs(sol.f)) <= np.max(np.abs(sol.h)) + 1e-12


@pytest.mark.parametrize("h", [h_lin, h_herm2, lambda x: np.sin(np.asarray(x)[..., 0])])
def test_fk_agrees_with_fd(pair, h):
    sol = solve_poisson_fd_1d(pair.U, h, np.linspace(-8, 8, 1601))
    rng = np.random.default_rng(5)
    for x in (-1.5, -0.5, 0.0, 0.6, 1.4):
        est = solve_poisson_fk(pair.U, h, [x], n_paths=20_000, rng=rng)
        assert abs(est.estimate - sol(x)) <= 3 * est.stderr


def test_fd_grid_validation(pair):
    with pytest.raises(ValidationError):
        solve_poisson_fd_1d(pair.U, h_lin, np.linspace(-3, 3, 101))
    with pytest.raises(ValidationError):
        solve_poisson_fd_1d(pair.U, h_lin, np.linspace(-8, 8, 101), "dirichlet")
    with pytest.raises(ValidationError):
        solve_poisson_fd_1d(pair.U, h_lin, np.r_[np.linspace(-8, 0, 50), np.linspace(0.5, 8, 80)])


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("beta_factor", [1.0, 1.5])
def test_c_star_cross_check(d, beta_factor):
    beta = 1.5 * beta_factor
    cs = c_star(standard_model(beta=beta, d=d))
    assert cs.rel_diff <= 1e-6 and cs.value > 0
    assert cs.value == pytest.approx(c_star_closed_form(d, beta), rel=1e-6)


def test_c_star_two_dimensional_beta_two():
    assert c_star(standard_model(beta=2.0, d=2)).value == pytest.approx(c_star_closed_form(2, 2.0), rel=1e-6)


def test_c_star_rejects_inconsistent_check(pair):
    with pytest.raises(NumericalError):
        c_star(pair, QuadratureSpec(nodes_tail=4, nodes_shell=4, nodes_inner=4), rtol=1e-15)


def test_transport_square_residuals(pair):
    lin = Field.on_line(lambda x: x, lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    assert pi_L0sq_pi_residual(pair, lin, [0.8]) <= 1e-6
    assert pi_L0sq_pi_residual(pair, Field.constant(1.0), [0.8]) == 0.0
    for name, f, x in position_suite():
        assert pi_L0sq_pi_residual(pair, f, [x]) <= 1e-4, name


def test_transport_square_residual_refinement(pair):
    f = position_suite()[0][1]
    coarse = QuadratureSpec(nodes_inner=4, nodes_shell=4, nodes_tail=4)
    cs = c_star_closed_form(1, 1.5)
    r = [pi_L0sq_pi_residual(pair, f, [0.3], q, cstar=cs)
         for q in (coarse, coarse.refined(), coarse.refined().refined())]
    assert r[2] <= r[1] <= r[0]
