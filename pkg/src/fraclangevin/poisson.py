"""The resolvent problem ``(I - L_OD) f = h`` and the constant ``c_star``.

Two independent solvers are provided: a Feynman-Kac Monte-Carlo estimator
along Euler paths of ``dX = -grad U(X) dt + sqrt(2) dB`` and a second-order
finite-difference solver on a 1-d grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lapack

from .errors import NumericalError, ValidationError
from .fields import Field
from .measures import _C_phi, mu2_rule
from .model import PotentialPair
from .quadrature import DEFAULT_QUAD, QuadratureSpec, radial_integral, sphere_area


# ---------------------------------------------------------------- Feynman-Kac
@dataclass
class FKEstimate:
    estimate: float
    stderr: float
    n_paths: int
    dt: float
    half_step_estimate: Optional[float] = None
    half_step_stderr: Optional[float] = None

    @property
    def richardson(self) -> Optional[float]:
        """Extrapolated value ``2 f(dt/2) - f(dt)``."""
        if self.half_step_estimate is None:
            return None
        return 2.0 * self.half_step_estimate - self.estimate

    def __iter__(self):
        yield self.estimate
        yield self.stderr


def _fk_once(U, h, x, n_paths, dt, horizon, rng):
    d = x.shape[0]
    tau = rng.exponential(1.0, n_paths)
    tau = np.sort(tau)[::-1]
    live = tau < horizon  # the integral is truncated at the horizon
    tau = np.where(live, tau, horizon)
    X = np.broadcast_to(x, (n_paths, d)).copy()
    n_full = np.floor(tau / dt).astype(np.int64)  # full steps per path, non-increasing
    max_steps = int(n_full[0]) if n_paths else 0
    # paths are sorted by clock, so the ones still running form a prefix
    active = np.searchsorted(-n_full, -np.arange(1, max_steps + 1), side="right")
    sq = math.sqrt(2.0 * dt)
    for m in active:
        Xa = X[:m]
        Xa += -U.grad(Xa) * dt + sq * rng.standard_normal((m, d))
    rem = tau - n_full * dt
    X += -U.grad(X) * rem[:, None] + np.sqrt(2.0 * rem)[:, None] * rng.standard_normal((n_paths, d))
    vals = np.where(live, np.asarray(h(X), dtype=float), 0.0)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_paths))


def solve_poisson_fk(U, h: Callable, x, n_paths: int = 100_000, dt: float = 1e-3,
                     horizon: float = 20.0, rng: Optional[np.random.Generator] = None,
                     richardson: bool = False) -> FKEstimate:
    """Monte-Carlo estimate of ``f(x) = int_0^inf e^{-s} E h(X_s^x) ds``.

    Uses the exponential-clock form ``f(x) = E h(X_tau)`` with
    ``tau ~ Exp(1)`` independent of the path, truncated at ``horizon``.

    Returns
    -------
    FKEstimate
        Unpacks as ``(estimate, stderr)``.  With ``richardson=True`` a
        second run at ``dt/2`` is attached for bias control.
    """
    if horizon < 20.0:
        raise ValidationError("horizon must be >= 20 so the truncation error is below 2e-9*|h|")
    if dt <= 0:
        raise ValidationError("dt must be positive")
    rng = np.random.default_rng() if rng is None else rng
    x = np.atleast_1d(np.asarray(x, dtype=float))
    est, se = _fk_once(U, h, x, int(n_paths), dt, horizon, rng)
    out = FKEstimate(est, se, int(n_paths), dt)
    if richardson:
        e2, s2 = _fk_once(U, h, x, int(n_paths), dt / 2, horizon, rng)
        out.half_step_estimate, out.half_step_stderr = e2, s2
    return out


# ---------------------------------------------------------------- finite differences
@dataclass
class PoissonSolution:
    grid: np.ndarray
    f: np.ndarray
    h: np.ndarray
    boundary: str
    residual: float
    condition: float
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return np.interp(x, self.grid, self.f)


BOUNDARIES = ("reflecting", "far-field-decay")


def _tridiagonal(U, grid, boundary):
    n = grid.size
    dx = grid[1] - grid[0]
    Up = U.grad(grid[:, None])[:, 0]
    main = 1.0 + 2.0 / dx**2 * np.ones(n)
    lower = -1.0 / dx**2 - Up[1:] / (2 * dx)   # coefficient of f_{i-1} in row i
    upper = -1.0 / dx**2 + Up[:-1] / (2 * dx)  # coefficient of f_{i+1} in row i
    if boundary == "reflecting":
        # ghost f_{-1} = f_1, f_n = f_{n-2}
        upper[0] = -2.0 / dx**2
        lower[-1] = -2.0 / dx**2
    else:
        # ghost from f'' = 0: f_{-1} = 2 f_0 - f_1
        main[0] = 1.0 - Up[0] / dx
        upper[0] = Up[0] / dx
        main[-1] = 1.0 + Up[-1] / dx
        lower[-1] = -Up[-1] / dx
    return lower, main, upper


def solve_poisson_fd_1d(U, h: Callable, grid, boundary: str = "reflecting") -> PoissonSolution:
    """Second-order central differences for ``f - f'' + U' f' = h``.

    Parameters
    ----------
    grid : array_like
        Uniform grid; it must cover six standard deviations of ``mu1``
        on both sides of its mean.
    boundary : {"reflecting", "far-field-decay"}
        Homogeneous Neumann, or linear extrapolation (``f'' = 0``) at the ends.
    """
    grid = np.asarray(grid, dtype=float)
    if boundary not in BOUNDARIES:
        raise ValidationError(f"boundary must be one of {BOUNDARIES}")
    if grid.ndim != 1 or grid.size < 5:
        raise ValidationError("grid must be 1-d with at least 5 nodes")
    dx = np.diff(grid)
    if np.max(np.abs(dx - dx[0])) > 1e-9 * abs(dx[0]):
        raise ValidationError("grid must be uniform")
    _check_span(U, grid)
    lower, main, upper = _tridiagonal(U, grid, boundary)
    rhs = np.asarray(h(grid[:, None]), dtype=float).reshape(-1)
    dl, dd, du, du2, ipiv, info = lapack.dgttrf(lower, main, upper)
    if info != 0:
        raise NumericalError("tridiagonal factorization failed")
    anorm = np.max(np.abs(main) + np.concatenate([[0.0], np.abs(upper)]) + np.concatenate([np.abs(lower), [0.0]]))
    rcond, info = lapack.dgtcon(dl, dd, du, du2, ipiv, anorm, norm="1")
    cond = 1.0 / rcond if rcond > 0 else math.inf
    if cond > 1e12:
        raise NumericalError(f"tridiagonal system ill-conditioned (cond ~ {cond:.2e})")
    f, info = lapack.dgttrs(dl, dd, du, du2, ipiv, rhs)
    res = main * f - rhs
    res[1:] += lower * f[:-1]
    res[:-1] += upper * f[1:]
    return PoissonSolution(grid, f, rhs, boundary, float(np.max(np.abs(res[1:-1]))), cond,
                           {"dx": float(dx[0])})


def _check_span(U, grid):
    w = np.exp(-(U.value(grid[:, None]) - np.min(U.value(grid[:, None]))))
    w = w / w.sum()
    mean = float(np.sum(w * grid))
    sd = math.sqrt(float(np.sum(w * (grid - mean) ** 2)))
    if grid[0] > mean - 6 * sd or grid[-1] < mean + 6 * sd:
        raise ValidationError("grid must cover six standard deviations of mu1")


def convergence_order(errors, spacings) -> float:
    """Least-squares slope of ``log error`` versus ``log spacing``."""
    return float(np.polyfit(np.log(spacings), np.log(errors), 1)[0])


# ---------------------------------------------------------------- c_star
@dataclass(frozen=True)
class CStar:
    """``c_star`` from its radial integral and from the alternative expression."""

    value: float
    alternative: float
    rel_diff: float
    C_phi: float


def c_star(pair: PotentialPair, quad: QuadratureSpec = DEFAULT_QUAD, rtol: float = 1e-6) -> CStar:
    """``c_star = (2 omega_d / C_Phi) int_0^inf u^{d/2} psi'(u)^2 e^{-psi(u)} du``.

    The alternative ``2 int ((2/d) psi''(|v|^2)|v|^2 + psi'(|v|^2)) mu2(dv)``
    is always computed and compared.

    Raises
    ------
    NumericalError
        If the two expressions differ by more than ``rtol`` relative.
    """
    from .fracops import unit_ball_volume

    Phi = pair.Phi
    d = pair.d
    p = Phi.density_decay
    decay = None if p is None else p + 2.0
    C = _C_phi(pair, quad)

    def s_main(r):
        u = r * r
        return Phi.dpsi(u) ** 2 * np.exp(-Phi.psi(u))

    # u = r^2 turns u^{d/2} du into 2 r^{d+1} dr
    main = 2.0 * unit_ball_volume(d) / C * 2.0 * radial_integral(s_main, d + 1.0, 0.0, quad,
                                                                 decay=decay)

    def s_alt(r):
        u = r * r
        return ((2.0 / d) * Phi.d2psi(u) * u + Phi.dpsi(u)) * np.exp(-Phi.psi(u))

    alt = 2.0 * sphere_area(d) / C * radial_integral(s_alt, d - 1.0, 0.0, quad, decay=decay)
    rel = abs(main - alt) / abs(main)
    if rel > rtol:
        raise NumericalError(f"c_star cross-check failed: {main!r} vs {alt!r} (rel {rel:.2e})")
    return CStar(float(main), float(alt), float(rel), float(C))


def pi_L0sq_pi_residual(pair: PotentialPair, f: Field, x, quad: QuadratureSpec = DEFAULT_QUAD,
                        cstar: Optional[float] = None) -> float:
    """``|int L0^2(pi f)(x, v) mu2(dv) - c_star L_OD f(x)|`` for a position field ``f``.

    The integrand is ``<grad Phi, Hess f(x) grad Phi> - <grad U(x), Hess Phi(v) grad f(x)>``.
    """
    from .generator import apply_L_OD

    x = np.atleast_1d(np.asarray(x, dtype=float))
    V, w = mu2_rule(pair, quad)
    gP = pair.Phi.grad(V)
    HP = pair.Phi.hess(V)
    from .fields import fd_hessian

    Hf = f.hess(x) if f.hess is not None else fd_hessian(f.gradient, x)
    gf = f.gradient(x)
    gU = pair.U.grad(x)
    integrand = np.einsum("ni,ij,nj->n", gP, Hf, gP) - np.einsum("i,nij,j->n", gU, HP, gf)
    lhs = float(np.sum(w * integrand))
    cs = c_star(pair, quad).value if cstar is None else cstar
    rhs = cs * float(apply_L_OD(pair.U, f, x))
    return abs(lhs - rhs)
