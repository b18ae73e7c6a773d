import math

import numpy as np
import pytest
from scipy.special import gamma, hyp1f1

from fraclangevin.fields import Field, TestFunction
from fraclangevin.fracops import frac_laplacian
from fraclangevin.generator import (apply_L0, apply_L1, apply_L1_star, apply_L_OD,
                                    carre_du_champ_gap, dirichlet_form, invariance_residual)
from fraclangevin.measures import closed_form_C_phi, mu1_rule, mu2_rule
from fraclangevin.quadrature import line_rule
from fraclangevin.suites import bump_field, compact_suite, invariance_suite

from test_fracops import _kernel_free_gradient

CONST = TestFunction(value=lambda x, v: np.ones(np.broadcast_shapes(x.shape, v.shape)[:-1]),
                     grad_x=lambda x, v: np.zeros(np.broadcast_shapes(x.shape, v.shape)),
                     grad_v=lambda x, v: np.zeros(np.broadcast_shapes(x.shape, v.shape)),
                     name="1")


def gauss_v():
    return Field.on_line(lambda v: np.exp(-v * v), lambda v: -2 * v * np.exp(-v * v),
                         lambda v: (4 * v * v - 2) * np.exp(-v * v), decay=None,
                         features=(np.zeros(1),))


# ---------------------------------------------------------------- L0
def test_L0_constant(pair):
    assert apply_L0(pair, CONST, np.array([0.4]), np.array([1.3])) == 0.0


def test_L0_position_and_velocity(pair):
    fx = TestFunction(value=lambda x, v: x[..., 0], grad_x=lambda x, v: np.ones_like(x),
                      grad_v=lambda x, v: np.zeros_like(v))
    fv = TestFunction(value=lambda x, v: v[..., 0], grad_x=lambda x, v: np.zeros_like(x),
                      grad_v=lambda x, v: np.ones_like(v))
    assert apply_L0(pair, fx, np.array([0.0]), np.array([1.0])) == pytest.approx(1.25, rel=1e-14)
    assert apply_L0(pair, fv, np.array([2.0]), np.array([0.3])) == pytest.approx(-2.0, rel=1e-14)


# ---------------------------------------------------------------- L1
def test_L1_constant(pair):
    assert abs(float(apply_L1(pair, Field.constant(2.0), [0.7]))) < 1e-12


def test_L1_even_function_at_origin(pair):
    f = gauss_v()
    assert float(apply_L1(pair, f, [0.0])) == pytest.approx(-float(frac_laplacian(f, [0.0], 1.5)), rel=1e-12)


def test_L1_gaussian_reference(pair):
    a, v = 1.5, 0.5
    lap = 2**a * gamma((1 + a) / 2) / gamma(0.5) * hyp1f1((1 + a) / 2, 0.5, -v * v)
    b = (1 + v * v) ** 1.25 * _kernel_free_gradient(v)
    ref = b * (-2 * v * math.exp(-v * v)) - lap
    assert float(apply_L1(pair, gauss_v(), [v])) == pytest.approx(ref, rel=1e-3)


def test_L1_star_constant(pair):
    # the drift term cancels the Riesz-Laplacian term for constants
    assert abs(float(apply_L1_star(pair, Field.constant(1.0), [0.4]))) < 1e-9


def _mu2_line(pair, f, fn):
    V, w = line_rule(support=f.support, features=[float(np.ravel(c)[0]) for c in f.features])
    w = w * pair.Phi.density(V) / closed_form_C_phi(1, 1.5)
    return sum(wk * float(fn(vk)) for vk, wk in zip(V, w) if wk != 0.0)


def test_L1_adjointness(pair):
    f, g = bump_field(0.0, 2.0), bump_field(0.5, 1.5)
    lhs = _mu2_line(pair, g, lambda v: apply_L1(pair, f, v) * g(v))
    rhs = _mu2_line(pair, f, lambda v: f(v) * apply_L1_star(pair, g, v))
    assert lhs == pytest.approx(rhs, rel=2e-3)


def test_dissipativity(pair):
    for f in compact_suite().values():
        val = _mu2_line(pair, f, lambda v: f(v) * (apply_L1(pair, f, v) + apply_L1_star(pair, f, v)))
        assert val < 0


# ---------------------------------------------------------------- L_OD
def test_L_OD_examples(pair):
    U = pair.U
    assert apply_L_OD(U, Field.constant(1.0), np.array([0.3])) == 0.0
    lin = Field.on_line(lambda x: x, lambda x: np.ones_like(x), lambda x: np.zeros_like(x))
    assert apply_L_OD(U, lin, np.array([3.0])) == pytest.approx(-3.0)
    quad = Field.on_line(lambda x: x * x - 1, lambda x: 2 * x, lambda x: 2 + 0 * x)
    assert apply_L_OD(U, quad, np.array([1.0])) == pytest.approx(0.0, abs=1e-14)
    assert apply_L_OD(U, quad, np.array([2.0])) == pytest.approx(2 - 8.0)


# ---------------------------------------------------------------- invariance
def test_invariance_constant_exact(pair):
    r = invariance_residual(pair, CONST, refine=False)
    assert r.transport == 0.0 and abs(r.residual) <= 1e-15


def test_invariance_position_only(pair):
    a = TestFunction(value=lambda x, v: np.broadcast_to(np.sin(x[..., 0]), np.broadcast_shapes(x.shape, v.shape)[:-1]),
                     grad_x=lambda x, v: np.broadcast_to(np.cos(x), np.broadcast_shapes(x.shape, v.shape)),
                     grad_v=lambda x, v: np.zeros(np.broadcast_shapes(x.shape, v.shape)))
    assert abs(invariance_residual(pair, a, refine=False).residual) < 1e-12


def test_invariance_sin_gauss(pair):
    f = invariance_suite()["sin(x)exp(-v^2)"]
    r = invariance_residual(pair, f)
    assert abs(r.residual) <= 5e-3 and not r.inconclusive


def test_transport_antisymmetry(pair):
    def tf(a, da, b, db):
        return TestFunction(value=lambda x, v: a(x[..., 0]) * b(v[..., 0]),
                            grad_x=lambda x, v: (da(x) * b(v)),
                            grad_v=lambda x, v: (a(x) * db(v)), decay_v=None)

    f = tf(np.sin, np.cos, lambda v: np.exp(-v * v), lambda v: -2 * v * np.exp(-v * v))
    g = tf(lambda x: np.exp(-x * x), lambda x: -2 * x * np.exp(-x * x),
           lambda v: v * np.exp(-v * v / 2), lambda v: (1 - v * v) * np.exp(-v * v / 2))
    X, wx = mu1_rule(pair)
    V, wv = mu2_rule(pair)
    x, v = X[:, None, :], V[None, :, :]
    W = wx[:, None] * wv[None, :]
    s = np.sum(W * (f(x, v) * apply_L0(pair, g, x, v) + g(x, v) * apply_L0(pair, f, x, v)))
    assert abs(s) < 1e-6


def test_pi_annihilation(pair):
    # L0 applied to a function of x alone averages to zero over v for radial Phi
    a = TestFunction(value=lambda x, v: np.broadcast_to(x[..., 0] ** 3, np.broadcast_shapes(x.shape, v.shape)[:-1]),
                     grad_x=lambda x, v: np.broadcast_to(3 * x**2, np.broadcast_shapes(x.shape, v.shape)),
                     grad_v=lambda x, v: np.zeros(np.broadcast_shapes(x.shape, v.shape)))
    V, wv = mu2_rule(pair, growth=1.0)
    for x0 in (0.3, -1.2):
        vals = apply_L0(pair, a, np.array([x0]), V)
        assert abs(np.sum(wv * vals)) < 1e-12


# ---------------------------------------------------------------- Dirichlet form
def test_dirichlet_constant(pair):
    assert dirichlet_form(pair, Field.constant(3.0)) == 0.0


def test_dirichlet_quadratic(pair):
    f = Field.on_line(np.tanh, lambda v: 1 / np.cosh(v) ** 2)
    assert dirichlet_form(pair, f.scaled(2.0)) == pytest.approx(4 * dirichlet_form(pair, f), rel=1e-9)


def test_dirichlet_tanh_reference(pair):
    # independent nested scipy quadrature, frozen
    f = Field.on_line(np.tanh, lambda v: 1 / np.cosh(v) ** 2)
    assert dirichlet_form(pair, f) == pytest.approx(2.7005354942824344, rel=1e-3)


# ---------------------------------------------------------------- carre du champ
def test_carre_gap_constant(pair):
    c = Field.constant(1.0)
    c = Field(c.value, c.grad, c.hess, decay=0.0, support=(-2.0, 2.0), features=(np.zeros(1),))
    g = carre_du_champ_gap(pair, c)
    assert g.rhs == 0.0 and abs(g.lhs) < 1e-10


def test_carre_gap_bump_and_sign(pair):
    f = bump_field(0.0, 2.0)
    g = carre_du_champ_gap(pair, f)
    assert g.gap <= 1e-3
    gm = carre_du_champ_gap(pair, f.scaled(-1.0))
    assert gm.gap == pytest.approx(g.gap, rel=1e-6, abs=1e-12)
