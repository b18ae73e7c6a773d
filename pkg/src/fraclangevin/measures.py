"""Normalizing constants, samplers and expectations under mu = mu1 x mu2.

``mu1(dx) = exp(-U(x)) dx / C_U`` and ``mu2(dv) = exp(-Phi(v)) dv / C_Phi``.
For ``Phi = log_radial(beta)`` the velocity marginal is a multivariate
Student-t law with ``beta`` degrees of freedom and scale ``beta**-1/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import roots_hermitenorm

from .errors import IntegrabilityError, NumericalError, ValidationError
from .fields import TestFunction
from .model import (LogRadialPotential, PotentialPair, QuadraticPlusBumpPotential,
                    QuadraticPotential)
from .quadrature import (DEFAULT_QUAD, QuadratureSpec, gauss_legendre, radial_integral,
                         space_rule, sphere_area)


# ---------------------------------------------------------------- constants
def closed_form_C_phi(d: int, beta: float) -> float:
    """``int (1+|v|^2)^{-(d+beta)/2} dv = pi^{d/2} Gamma(beta/2) / Gamma((d+beta)/2)``."""
    return math.pi ** (d / 2) * math.gamma(beta / 2) / math.gamma((d + beta) / 2)


def _C_U(pair: PotentialPair, quad: QuadratureSpec) -> float:
    U = pair.U
    if isinstance(U, QuadraticPotential):
        return (2 * math.pi / U.k) ** (pair.d / 2)
    pts, w = mu1_rule(pair, quad, normalized=False)
    return float(np.sum(w))


def _C_phi(pair: PotentialPair, quad: QuadratureSpec) -> float:
    Phi = pair.Phi
    d = pair.d

    def S(r):
        return np.exp(-Phi.psi(r * r))

    val = sphere_area(d) * radial_integral(S, d - 1.0, 0.0, quad, decay=Phi.density_decay)
    return float(val)


def normalizations(pair: PotentialPair, quad: QuadratureSpec = DEFAULT_QUAD):
    """``(C_U, C_Phi)`` by quadrature (closed form for quadratic ``U``).

    Raises
    ------
    IntegrabilityError
        If ``exp(-Phi)`` is declared to decay no faster than ``|v|^-d``.
    """
    p = pair.Phi.density_decay
    if p is not None and p <= pair.d:
        raise IntegrabilityError(f"exp(-Phi) ~ |v|^-{p} is not integrable in d={pair.d}")
    return _C_U(pair, quad), _C_phi(pair, quad)


# ---------------------------------------------------------------- rules
def mu1_rule(pair: PotentialPair, quad: QuadratureSpec = DEFAULT_QUAD, *, n_hermite: int = 48,
             normalized: bool = True):
    """Nodes and weights integrating against ``mu1`` (or ``exp(-U)`` if not normalized).

    Quadratic ``U`` uses a tensor Gauss-Hermite rule.  Other families use a
    composite Gauss-Legendre rule on a box that holds all but ``1e-30`` of
    the mass of the confining quadratic part.
    """
    d = pair.d
    U = pair.U
    if isinstance(U, QuadraticPotential):
        z, w = roots_hermitenorm(n_hermite)
        z = z / math.sqrt(U.k)
        w = w / w.sum()
        pts, wt = _tensor(z, w, d)
        if not normalized:
            wt = wt * (2 * math.pi / U.k) ** (d / 2)
        return pts, wt
    k = getattr(U, "k", 1.0)
    L = 12.0 / math.sqrt(k)
    if isinstance(U, QuadraticPlusBumpPotential):
        L += float(np.max(np.abs(U.c)))
    edges = np.linspace(-L, L, int(8 * L) + 1)
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(quad.nodes_shell, a, b)
        xs.append(x)
        ws.append(w)
    pts, wt = _tensor(np.concatenate(xs), np.concatenate(ws), d)
    wt = wt * np.exp(-U.value(pts))
    if normalized:
        wt = wt / wt.sum()
    return pts, wt


def _tensor(z, w, d):
    grids = np.meshgrid(*([z] * d), indexing="ij")
    wgrids = np.meshgrid(*([w] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wt = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, wt


def mu2_rule(pair: PotentialPair, quad: QuadratureSpec = DEFAULT_QUAD, *, growth: float = 0.0,
             features=(), C_phi: Optional[float] = None):
    """Nodes and weights (density included) integrating against ``mu2``.

    ``growth`` is the polynomial growth of the integrand beyond the density;
    the tail rule is built for ``exp(-Phi) |v|^growth``.
    """
    p = pair.Phi.density_decay
    decay = None if p is None else p - growth
    feats = [0.0] + [float(np.linalg.norm(np.asarray(c))) for c in features]
    pts, w = space_rule(pair.d, quad, decay=decay, features=feats)
    C = _C_phi(pair, quad) if C_phi is None else C_phi
    return pts, w * pair.Phi.density(pts) / C


def integrate_mu2(pair: PotentialPair, g: Callable, quad: QuadratureSpec = DEFAULT_QUAD, *,
                  growth: float = 0.0, features=()) -> float:
    """``int g dmu2`` for ``g`` with at most ``|v|^growth`` growth."""
    pts, w = mu2_rule(pair, quad, growth=growth, features=features)
    return float(np.sum(w * np.asarray(g(pts))))


# ---------------------------------------------------------------- measures
@dataclass(frozen=True)
class MarginalMeasure:
    """One factor of ``mu``.

    Parameters
    ----------
    which : {"mu1", "mu2"}
    pair : PotentialPair
    normalizer : float
    envelope : tuple, optional
        ``(sample(rng, n), log_q(x), log_M)`` for rejection sampling custom
        families: proposals from ``q`` are accepted with probability
        ``exp(-V(x) - log_q(x) - log_M)``.
    """

    which: str
    pair: PotentialPair
    normalizer: float
    envelope: Optional[tuple] = None

    @property
    def potential(self):
        return self.pair.U if self.which == "mu1" else self.pair.Phi

    def log_density(self, x):
        return -self.potential.value(x) - math.log(self.normalizer)


def marginal(pair: PotentialPair, which: str, quad: QuadratureSpec = DEFAULT_QUAD,
             envelope=None) -> MarginalMeasure:
    if which not in ("mu1", "mu2"):
        raise ValidationError("which must be 'mu1' or 'mu2'")
    C_U, C_phi = normalizations(pair, quad)
    return MarginalMeasure(which, pair, C_U if which == "mu1" else C_phi, envelope)


def _rejection(sample_q, log_q, log_M, log_target, n, rng):
    out, tried, got = [], 0, 0
    while got < n:
        m = max(2 * (n - got), 1024)
        x = sample_q(rng, m)
        tried += m
        acc = np.log(rng.random(m)) < log_target(x) - log_q(x) - log_M
        out.append(x[acc])
        got += int(acc.sum())
        if tried >= 10_000 and got / tried < 1e-3:
            raise NumericalError(
                f"rejection sampler acceptance rate {got / tried:.2e} below 1e-3")
    return np.concatenate(out)[:n]


def sample_marginal(measure: MarginalMeasure, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. samples of shape ``(n, d)``."""
    pair = measure.pair
    d = pair.d
    n = int(n)
    if measure.which == "mu1":
        U = pair.U
        if isinstance(U, QuadraticPotential):
            return rng.standard_normal((n, d)) / math.sqrt(U.k)
        if isinstance(U, QuadraticPlusBumpPotential):
            # Gaussian envelope; the bump term is >= 0 so exp(-bump) <= 1
            s = 1.0 / math.sqrt(U.k)
            return _rejection(lambda g, m: s * g.standard_normal((m, d)),
                              lambda x: -0.5 * U.k * np.sum(x * x, axis=-1),
                              0.0, lambda x: -U.value(x), n, rng)
    else:
        Phi = pair.Phi
        if isinstance(Phi, LogRadialPotential):
            g = rng.standard_normal((n, d))
            chi2 = rng.chisquare(Phi.beta, size=n)
            return g / np.sqrt(chi2)[:, None]
    if measure.envelope is None:
        raise ValidationError("custom families need a rejection envelope")
    sq, lq, lM = measure.envelope
    return _rejection(sq, lq, lM, lambda x: -measure.potential.value(x), n, rng)


@dataclass
class Expectation:
    mean: float
    variance: Optional[float]
    error: float
    method: str
    n: Optional[int] = None


def _check_integrable(pair: PotentialPair, f: TestFunction, power: int):
    p = pair.Phi.density_decay
    if p is None:
        return
    # int |v|^(power*g) |v|^(d-1) |v|^-p dv < inf  iff  power*g < p - d
    if power * f.growth_v >= p - pair.d:
        what = "mean" if power == 1 else "second moment"
        raise IntegrabilityError(
            f"{what} of {f.name} diverges under mu2: growth {f.growth_v} vs tail exponent {p}")


def expect_under_mu(pair: PotentialPair, f: TestFunction, method: str = "quadrature", *,
                    n: int = 100_000, rng: Optional[np.random.Generator] = None,
                    quad: QuadratureSpec = DEFAULT_QUAD, moments: int = 2) -> Expectation:
    """``mu(f)`` and ``Var_mu(f)`` with an error estimate.

    Parameters
    ----------
    method : {"quadrature", "monte-carlo"}
        Quadrature error is the change under one refinement; Monte-Carlo
        error is the CLT standard error of the mean.
    moments : {1, 2}
        With 1 only the mean is computed (variance is ``None``).

    Raises
    ------
    IntegrabilityError
        When the declared growth of ``f`` makes a requested moment diverge.
    """
    _check_integrable(pair, f, 1)
    if moments >= 2:
        _check_integrable(pair, f, 2)
    if method == "quadrature":
        def run(qs):
            X, wx = mu1_rule(pair, qs)
            V, wv = mu2_rule(pair, qs, growth=moments * f.growth_v, features=f.features_v)
            F = f(X[:, None, :], V[None, :, :])
            W = wx[:, None] * wv[None, :]
            m1 = float(np.sum(W * F))
            m2 = float(np.sum(W * F * F)) if moments >= 2 else None
            return m1, m2

        m1, m2 = run(quad)
        r1, r2 = run(quad.refined())
        err = abs(r1 - m1)
        var = None if m2 is None else max(r2 - r1 * r1, 0.0)
        return Expectation(r1, var, err, "quadrature")
    if method == "monte-carlo":
        rng = np.random.default_rng() if rng is None else rng
        X = sample_marginal(marginal(pair, "mu1", quad), n, rng)
        V = sample_marginal(marginal(pair, "mu2", quad), n, rng)
        F = np.asarray(f(X, V), dtype=float)
        mean = float(F.mean())
        var = float(F.var(ddof=1))
        return Expectation(mean, var if moments >= 2 else None, math.sqrt(var / n),
                           "monte-carlo", n)
    raise ValidationError("method must be 'quadrature' or 'monte-carlo'")
