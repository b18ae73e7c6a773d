"""Pointwise generator pieces and the quadratic-form identities built on them.

``L0 f = <grad Phi(v), grad_x f> - <grad U(x), grad_v f>`` is the transport
part, ``L1 g = <b, grad g> - (-Delta)^{alpha/2} g`` the velocity part and

    L1* g = -<grad g, b> - g e^{Phi} Delta I_{2-alpha} e^{-Phi} - e^{Phi} (-Delta)^{alpha/2}(g e^{-Phi})

its adjoint in ``L^2(mu2)``.  ``L_OD f = Delta f - <grad U, grad f>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValidationError
from .fields import Field, TestFunction, fd_hessian
from .fracops import (DriftProfile, drift_b_phi, frac_constant, frac_laplacian,
                      riesz_laplacian)
from .measures import _C_phi, mu1_rule, mu2_rule
from .model import PotentialPair
from .quadrature import DEFAULT_QUAD, QuadratureSpec, line_rule, radial_integral, sphere_rule, space_rule

FORM_FLOOR = 1e-8


def _drift(pair, v, alpha, quad, profile: Optional[DriftProfile]):
    if profile is not None and np.linalg.norm(v) <= profile.validity_radius:
        return profile(v)
    return drift_b_phi(pair, v, alpha, quad)


def apply_L0(pair: PotentialPair, f: TestFunction, x, v):
    """Transport term ``<grad Phi(v), grad_x f> - <grad U(x), grad_v f>``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return (np.sum(pair.Phi.grad(v) * f.gx(x, v), axis=-1)
            - np.sum(pair.U.grad(x) * f.gv(x, v), axis=-1))


def apply_L1(pair: PotentialPair, f: Field, v, alpha: Optional[float] = None,
             quad: QuadratureSpec = DEFAULT_QUAD, profile: Optional[DriftProfile] = None):
    """``<b(v), grad f(v)> - (-Delta)^{alpha/2} f(v)`` at a single velocity."""
    alpha = pair.alpha if alpha is None else alpha
    v = np.atleast_1d(np.asarray(v, dtype=float))
    b = _drift(pair, v, alpha, quad, profile)
    return np.sum(b * f.gradient(v), axis=-1) - frac_laplacian(f, v, alpha, quad)


def apply_L1_star(pair: PotentialPair, f: Field, v, alpha: Optional[float] = None,
                  quad: QuadratureSpec = DEFAULT_QUAD):
    """Adjoint ``L1* f(v)`` with the Riesz Laplacian taken by kernel differentiation."""
    alpha = pair.alpha if alpha is None else alpha
    v = np.atleast_1d(np.asarray(v, dtype=float))
    g = pair.Phi.density_field()
    eP = np.exp(pair.Phi.value(v))
    b = drift_b_phi(pair, v, alpha, quad)
    lap_I = riesz_laplacian(g, v, 2.0 - alpha, quad)
    fg = f.times(g)
    return (-np.sum(f.gradient(v) * b, axis=-1) - np.asarray(f(v)) * eP * lap_I
            - eP * frac_laplacian(fg, v, alpha, quad))


def apply_L_OD(U, f: Field, x):
    """``Delta f(x) - <grad U(x), grad f(x)>``."""
    x = np.asarray(x, dtype=float)
    H = f.hess(x) if f.hess is not None else fd_hessian(f.gradient, x)
    return np.trace(H, axis1=-2, axis2=-1) - np.sum(U.grad(x) * f.gradient(x), axis=-1)


# ---------------------------------------------------------------- invariance
@dataclass
class InvarianceReport:
    """Weak-form invariance residual ``int (L0 + L1) f dmu``."""

    residual: float
    transport: float
    velocity: float
    error_budget: float
    budget: float
    inconclusive: bool
    refined_residual: Optional[float] = None


def _L1_weak(pair, f: TestFunction, X, wx, alpha, quad, profile):
    """``int int L1 f(x, .)(v) mu2(dv) mu1(dx)`` batched over the ``x`` nodes."""
    F = f.velocity_field(X)
    V, wv = mu2_rule(pair, quad, features=f.features_v)
    tot = 0.0
    for vk, wk in zip(V, wv):
        if wk == 0.0:
            continue
        vals = apply_L1(pair, F, vk, alpha, quad, profile)
        tot += wk * float(np.sum(wx * vals))
    return tot


def invariance_residual(pair: PotentialPair, f: TestFunction, alpha: Optional[float] = None,
                        quad: QuadratureSpec = DEFAULT_QUAD, *, budget: float = 5e-3,
                        refine: bool = True, profile: Optional[DriftProfile] = None,
                        n_hermite: int = 40) -> InvarianceReport:
    """Estimate ``int (L0 f + L1 f) dmu`` on a product rule.

    The error budget is the change under one refinement of the velocity
    quadrature; when it exceeds ``budget`` the report is flagged
    inconclusive rather than failed.
    """
    alpha = pair.alpha if alpha is None else alpha

    def run(qs):
        X, wx = mu1_rule(pair, qs, n_hermite=n_hermite)
        V, wv = mu2_rule(pair, qs, growth=f.growth_v, features=f.features_v)
        T = apply_L0(pair, f, X[:, None, :], V[None, :, :])
        transport = float(np.sum(wx[:, None] * wv[None, :] * T))
        velocity = _L1_weak(pair, f, X, wx, alpha, qs, profile)
        return transport, velocity

    t0, v0 = run(quad)
    res = t0 + v0
    if refine:
        t1, v1 = run(quad.refined())
        err = abs((t1 + v1) - res)
        return InvarianceReport(res, t0, v0, err, budget, err > budget, t1 + v1)
    return InvarianceReport(res, t0, v0, float("nan"), budget, False)


# ---------------------------------------------------------------- Dirichlet form
def _inner_energy(f: Field, w, alpha, quad):
    """``int (f(v) - f(w))^2 |v - w|^{-d-alpha} dv`` at one point ``w``."""
    d = w.shape[0]
    dq, wq = sphere_rule(d, quad.nodes_angular, half=True)
    f0 = np.asarray(f(w))

    def S(r):
        pts = r[:, None, None] * dq[None]
        a = np.asarray(f(w + pts)) - f0[..., None, None]
        b = np.asarray(f(w - pts)) - f0[..., None, None]
        return np.sum(wq * (a * a + b * b), axis=-1)

    return radial_integral(S, -1.0 - alpha, 2.0, quad, decay=0.0,
                           features=f.feature_radii(w) if f.features else [])


def dirichlet_form(pair: PotentialPair, f: Field, alpha: Optional[float] = None,
                   quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``E(f) = int int (f(v)-f(w))^2 |v-w|^{-d-alpha} dv mu2(dw)`` for ``d <= 2``."""
    alpha = pair.alpha if alpha is None else alpha
    if pair.d > 2:
        raise ValidationError("dirichlet_form is provided for d <= 2")
    W, ww = mu2_rule(pair, quad, features=f.features)
    tot = 0.0
    for wk, c in zip(W, ww):
        if c == 0.0:
            continue
        tot += c * float(_inner_energy(f, wk, alpha, quad))
    return tot


@dataclass
class CarreDuChampGap:
    gap: float
    lhs: float
    rhs: float
    energy: float


LHS_QUAD = QuadratureSpec()
RHS_QUAD = QuadratureSpec(inner_split=0.2, outer_radius=50.0, nodes_inner=20, nodes_shell=14,
                          nodes_angular=24, nodes_tail=28)


def carre_du_champ_gap(pair: PotentialPair, f: Field, alpha: Optional[float] = None,
                       quads=(LHS_QUAD, RHS_QUAD)) -> CarreDuChampGap:
    """Relative gap in ``-mu2(f (L1 + L1*) f) = c_{d,alpha} E(f)``.

    The left side integrates ``apply_L1 + apply_L1_star`` over the support
    of ``f`` on ``quads[0]``; the right side is :func:`dirichlet_form` on
    ``quads[1]``.  The gap is ``|LHS - RHS| / max(|RHS|, 1e-8)``.
    """
    alpha = pair.alpha if alpha is None else alpha
    if f.support is None:
        raise ValidationError("carre_du_champ_gap needs a compactly supported f")
    ql, qr = quads
    if pair.d == 1:
        V, wv = line_rule(ql, support=f.support, features=[float(np.asarray(c).ravel()[0])
                                                            for c in f.features])
    else:
        V, wv = space_rule(pair.d, ql, support=f.support[1])
    wv = wv * pair.Phi.density(V) / _C_phi(pair, ql)
    lhs = 0.0
    for vk, wk in zip(V, wv):
        fv = float(f(vk))
        if fv == 0.0:
            continue
        s = apply_L1(pair, f, vk, alpha, ql) + apply_L1_star(pair, f, vk, alpha, ql)
        lhs -= wk * fv * float(s)
    energy = dirichlet_form(pair, f, alpha, qr)
    rhs = frac_constant(pair.d, alpha) * energy
    gap = abs(lhs - rhs) / max(abs(rhs), FORM_FLOOR)
    return CarreDuChampGap(gap, lhs, rhs, energy)
