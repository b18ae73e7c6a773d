"""Kernel constants and quadrature for nonlocal velocity operators.

Conventions (Fourier symbol in brackets)::

    (-Delta)^{a/2} f(v) = c_{d,a} p.v. int (f(v) - f(w)) |v-w|^{-d-a} dw      [|xi|^a]
    I_s f(v)           = C_{d,s} int f(w) |v-w|^{s-d} dw,  0 < s < d        [|xi|^-s]

The friction force is ``b(v) = exp(Phi(v)) grad I_{2-alpha} exp(-Phi)(v)``.
The gradient is taken by differentiating the kernel, never by differencing
the potential.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import NumericalError, ValidationError
from .fields import Field
from .model import PotentialPair, validate_model
from .quadrature import (DEFAULT_QUAD, QuadratureSpec, radial_integral, sphere_area,
                         sphere_rule, verified)


# ---------------------------------------------------------------- constants
@dataclass(frozen=True)
class KernelConstants:
    """``c_frac = c_{d,alpha}``, ``c_riesz = C_{d,2-alpha}`` and ``omega_d``.

    ``c_riesz`` is ``None`` when ``d <= 2 - alpha`` (order ``2-alpha`` is
    not admissible there).
    """

    d: int
    alpha: float
    c_frac: float
    c_riesz: Optional[float]
    omega_d: float


def unit_ball_volume(d: int) -> float:
    """``omega_d = pi^{d/2} / Gamma(d/2 + 1)``."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def frac_constant(d: int, alpha: float) -> float:
    """``c_{d,alpha} = 2^alpha Gamma((d+alpha)/2) / (pi^{d/2} |Gamma(-alpha/2)|)``."""
    if not (0.0 < alpha < 2.0):
        raise ValidationError(f"alpha must lie in (0, 2), got {alpha}")
    return 2.0**alpha * math.gamma((d + alpha) / 2) / (math.pi ** (d / 2) * abs(math.gamma(-alpha / 2)))


def riesz_constant(d: int, s: float) -> float:
    """``C_{d,s} = Gamma((d-s)/2) / (2^s pi^{d/2} Gamma(s/2))`` for ``0 < s < d``."""
    if not (0.0 < s < d):
        raise ValidationError(f"Riesz order must satisfy 0 < s < d, got s={s}, d={d}")
    return math.gamma((d - s) / 2) / (2.0**s * math.pi ** (d / 2) * math.gamma(s / 2))


def special_constants(d: int, alpha: float) -> KernelConstants:
    """Evaluate the kernel constants for ``(d, alpha)``."""
    if int(d) != d or d < 1:
        raise ValidationError(f"d must be an integer >= 1, got {d}")
    if not (0.0 < alpha < 2.0):
        raise ValidationError(f"alpha must lie in (0, 2), got {alpha}")
    cr = riesz_constant(d, 2.0 - alpha) if d > 2.0 - alpha else None
    return KernelConstants(int(d), float(alpha), frac_constant(d, alpha), cr, unit_ball_volume(d))


# ---------------------------------------------------------------- helpers
def _point(v, d=None):
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.ndim != 1:
        raise ValidationError("expected a single point of shape (d,)")
    if d is not None and v.shape[0] != d:
        raise ValidationError(f"point has dimension {v.shape[0]}, expected {d}")
    return v


def _radii(f: Field, v) -> list:
    return f.feature_radii(v) if f.features else []


def _half(d, quad):
    return sphere_rule(d, quad.nodes_angular, half=True)


def _batched(f: Field, pts):
    """Evaluate ``f`` at ``pts`` of shape ``(n_r, n_theta, d)``."""
    return np.asarray(f(pts))


# ---------------------------------------------------------------- operators
def frac_laplacian(f: Field, v, alpha: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """``(-Delta)^{alpha/2} f(v)`` by the symmetrized second-difference form.

    Parameters
    ----------
    f : Field
        Twice differentiable near ``v``; ``f.decay`` is the power-law rate of
        ``f - f_inf`` (``None`` for faster decay).  Batched fields give an
        array of results.
    v : array_like, shape (d,)
    alpha : float in (0, 2)
    """
    v = _point(v)
    d = v.shape[0]
    c = frac_constant(d, alpha)
    f0 = np.asarray(f(v))

    def run(qs):
        dq, wq = _half(d, qs)

        def S(r):
            plus = _batched(f, v + r[:, None, None] * dq[None])
            minus = _batched(f, v - r[:, None, None] * dq[None])
            return np.sum(wq * (2.0 * f0[..., None, None] - plus - minus), axis=-1)

        S_inf = 2.0 * f0 * np.sum(wq)
        return c * radial_integral(S, -1.0 - alpha, 2.0, qs, decay=f.decay,
                                   features=_radii(f, v), S_inf=S_inf)

    return verified(run, quad, "fractional Laplacian")


def riesz_potential(f: Field, v, order: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """``I_s f(v) = C_{d,s} int f(w) |v-w|^{s-d} dw``."""
    v = _point(v)
    d = v.shape[0]
    C = riesz_constant(d, order)
    if f.decay is not None and f.decay <= order:
        raise ValidationError(f"field decay {f.decay} too slow for Riesz order {order}")

    def run(qs):
        dq, wq = _half(d, qs)

        def S(r):
            pts = r[:, None, None] * dq[None]
            return np.sum(wq * (_batched(f, v + pts) + _batched(f, v - pts)), axis=-1)

        return C * radial_integral(S, order - 1.0, 0.0, qs, decay=f.decay,
                                   features=_radii(f, v))

    return verified(run, quad, "Riesz potential")


def riesz_gradient(g: Field, v, order: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """``grad I_s g(v)`` by differentiating the kernel ``|u|^{s-d}``.

    ``grad I_s g(v) = C_{d,s} (s-d) int g(v-u) u |u|^{s-d-2} du``.
    Returns shape ``(d,)`` (or ``(B, d)`` for batched fields).
    """
    v = _point(v)
    d = v.shape[0]
    C = riesz_constant(d, order)

    def run(qs):
        dq, wq = _half(d, qs)

        def S(r):
            pts = r[:, None, None] * dq[None]
            diff = _batched(g, v - pts) - _batched(g, v + pts)  # (..., n_r, n_theta)
            return np.einsum("...rt,t,td->...dr", diff, wq, dq)

        return C * (order - d) * radial_integral(S, order - 2.0, 1.0, qs, decay=g.decay,
                                                 features=_radii(g, v))

    return verified(run, quad, "Riesz gradient")


def riesz_laplacian(g: Field, v, order: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """``Delta I_s g(v)`` by differentiating the kernel twice (``0 < s < 2``).

    Uses ``Delta |u|^{s-d} = (s-d)(s-2)|u|^{s-d-2}`` away from the origin
    with the finite-part (symmetrized second difference) regularization.
    """
    v = _point(v)
    d = v.shape[0]
    if not (0.0 < order < min(2.0, d)):
        raise ValidationError("riesz_laplacian needs 0 < s < min(2, d)")
    C = riesz_constant(d, order)
    g0 = np.asarray(g(v))

    def run(qs):
        dq, wq = _half(d, qs)

        def S(r):
            pts = r[:, None, None] * dq[None]
            return np.sum(wq * (_batched(g, v + pts) + _batched(g, v - pts)
                                - 2.0 * g0[..., None, None]), axis=-1)

        S_inf = -2.0 * g0 * np.sum(wq)
        return C * (order - d) * (order - 2.0) * radial_integral(
            S, order - 3.0, 2.0, qs, decay=g.decay, features=_radii(g, v), S_inf=S_inf)

    return verified(run, quad, "Riesz Laplacian")


def riesz_divergence(G, v, order: float, quad: QuadratureSpec = DEFAULT_QUAD, *,
                     decay=None, features=()):
    """``div grad I_s g(v)`` from the gradient field ``G = grad g``.

    Only one derivative is moved onto the kernel; this is an alternative to
    :func:`riesz_laplacian` with a different integrand.
    """
    v = _point(v)
    d = v.shape[0]
    C = riesz_constant(d, order)
    radii = [float(np.linalg.norm(v - np.asarray(p))) for p in features]

    def run(qs):
        dq, wq = _half(d, qs)

        def S(r):
            pts = r[:, None, None] * dq[None]
            diff = np.asarray(G(v - pts)) - np.asarray(G(v + pts))  # (n_r, n_theta, d)
            return np.einsum("rtd,t,td->r", diff, wq, dq)

        return C * (order - d) * radial_integral(S, order - 2.0, 1.0, qs, decay=decay,
                                                 features=radii)

    return verified(run, quad, "Riesz divergence")


def drift_b_phi(pair: PotentialPair, v, alpha: Optional[float] = None,
                quad: QuadratureSpec = DEFAULT_QUAD):
    """Friction force ``exp(Phi(v)) grad I_{2-alpha} exp(-Phi)(v)``.

    ``v`` may be a single point ``(d,)`` or an array ``(n, d)``.
    """
    alpha = pair.alpha if alpha is None else alpha
    d = pair.d
    validate_model(d, alpha)
    V = np.asarray(v, dtype=float)
    single = V.ndim == 1
    V = np.atleast_2d(V)
    if V.shape[-1] != d:
        raise ValidationError(f"velocity has dimension {V.shape[-1]}, expected {d}")
    g = pair.Phi.density_field()
    out = np.empty_like(V)
    for i, p in enumerate(V):
        out[i] = np.exp(pair.Phi.value(p)) * riesz_gradient(g, p, 2.0 - alpha, quad)
    return out[0] if single else out


def eval_psi_bg(pair: PotentialPair, beta: float, gamma: float, v, y,
                quad: QuadratureSpec = DEFAULT_QUAD, alpha: Optional[float] = None):
    """The bilinear functional ``Psi_{beta,gamma}(v, y)`` for ``Psi = Phi``.

    Evaluates the symmetrized form

        1/2 beta  e^{Psi(v)} int <u, H(v) y> (e^{-Psi(v-u)} - e^{-Psi(v+u)}) |u|^{-d-alpha} du
      - 1/2 gamma e^{Psi(v)} int [<gradPsi(v) - gradPsi(v-u), y> e^{-Psi(v-u)}
                                  + <gradPsi(v) - gradPsi(v+u), y> e^{-Psi(v+u)}] |u|^{-d-alpha} du

    where ``H = Hess Psi``; both integrands are ``O(|u|^2)`` at the origin.
    """
    alpha = pair.alpha if alpha is None else alpha
    Phi = pair.Phi
    v = _point(v, pair.d)
    y = _point(y, pair.d)
    d = v.shape[0]
    Hy = Phi.hess(v) @ y
    gv = Phi.grad(v) @ y
    feats = [float(np.linalg.norm(v))]
    p = Phi.density_decay

    def run(qs):
        dq, wq = _half(d, qs)

        def S1(r):
            pts = r[:, None, None] * dq[None]
            diff = Phi.density(v - pts) - Phi.density(v + pts)
            return 2.0 * np.sum(wq * (dq @ Hy) * diff, axis=-1)

        def S2(r):
            pts = r[:, None, None] * dq[None]
            m, pl = v - pts, v + pts
            t = ((gv - Phi.grad(m) @ y) * Phi.density(m)
                 + (gv - Phi.grad(pl) @ y) * Phi.density(pl))
            return 2.0 * np.sum(wq * t, axis=-1)

        I1 = radial_integral(S1, -alpha, 1.0, qs, decay=p, features=feats)
        I2 = radial_integral(S2, -1.0 - alpha, 2.0, qs, decay=p, features=feats)
        return np.exp(Phi.value(v)) * (0.5 * beta * I1 - 0.5 * gamma * I2)

    return float(verified(run, quad, "Psi functional"))


# ---------------------------------------------------------------- profile
def default_profile_radii(r_max: float = 1e4, n: int = 400, scale: float = 1.0) -> np.ndarray:
    """``r_i = scale * sinh(i h)`` with ``r_n = r_max``: fine near 0, geometric far out."""
    h = math.asinh(r_max / scale) / n
    return scale * np.sinh(h * np.arange(n + 1))


@dataclass(frozen=True)
class DriftProfile:
    """Cached radial profile ``b(v) = rho(|v|) v/|v|``.

    ``rho`` is interpolated by a monotone (PCHIP) cubic on ``radii``;
    ``slopes`` are its derivatives at the nodes, for kernel evaluation.
    """

    radii: np.ndarray
    rho: np.ndarray
    slopes: np.ndarray
    validity_radius: float
    held_out_error: float = float("nan")
    d: int = 1

    @classmethod
    def from_samples(cls, radii, rho, d=1, held_out_error=float("nan")) -> "DriftProfile":
        radii = np.asarray(radii, dtype=float)
        rho = np.asarray(rho, dtype=float).copy()
        if radii[0] != 0.0 or np.any(np.diff(radii) <= 0):
            raise ValidationError("profile radii must start at 0 and increase")
        rho[0] = 0.0
        slopes = PchipInterpolator(radii, rho).derivative()(radii)
        return cls(radii, rho, slopes, float(radii[-1]), float(held_out_error), int(d))

    def rho_at(self, r):
        """Interpolated ``rho(r)`` for ``0 <= r <= validity_radius``."""
        return PchipInterpolator(self.radii, self.rho)(np.asarray(r, dtype=float))

    def __call__(self, v):
        """Drift vectors for velocities ``(..., d)`` inside the validity radius."""
        v = np.asarray(v, dtype=float)
        r = np.linalg.norm(v, axis=-1)
        if np.any(r > self.validity_radius):
            raise ValidationError("velocity outside the profile validity radius")
        rho = self.rho_at(r)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = np.where(r[..., None] > 0, v / r[..., None], 0.0)
        return rho[..., None] * unit

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "rho"])
            for r, p in zip(self.radii, self.rho):
                w.writerow([repr(float(r)), repr(float(p))])

    @classmethod
    def from_csv(cls, path, d=1) -> "DriftProfile":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls.from_samples(data[:, 0], data[:, 1], d=d)


def drift_radial(pair: PotentialPair, r, alpha=None, quad=DEFAULT_QUAD) -> np.ndarray:
    """``rho(r) = <b(r e_1), e_1>`` at the radii ``r``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    V = np.zeros((r.size, pair.d))
    V[:, 0] = r
    return drift_b_phi(pair, V, alpha, quad)[:, 0]


def build_drift_profile(pair: PotentialPair, alpha: Optional[float] = None,
                        quad: QuadratureSpec = DEFAULT_QUAD, radii: Optional[Sequence[float]] = None,
                        tol: float = 1e-3) -> DriftProfile:
    """Tabulate ``rho`` and validate the interpolant at interval midpoints.

    Raises
    ------
    NumericalError
        If the held-out relative error exceeds ``tol``; the message names
        the worst radius.
    """
    radii = default_profile_radii() if radii is None else np.asarray(radii, dtype=float)
    rho = drift_radial(pair, radii, alpha, quad)
    rho[0] = 0.0
    prof = DriftProfile.from_samples(radii, rho, d=pair.d)
    mids = 0.5 * (radii[1:] + radii[:-1])
    direct = drift_radial(pair, mids, alpha, quad)
    rel = np.abs(prof.rho_at(mids) - direct) / np.maximum(np.abs(direct), 1e-300)
    worst = int(np.argmax(rel))
    if rel[worst] > tol:
        raise NumericalError(
            f"drift profile interpolation error {rel[worst]:.3e} at r={mids[worst]:.6g} exceeds {tol}")
    return DriftProfile.from_samples(radii, rho, d=pair.d, held_out_error=float(rel[worst]))
