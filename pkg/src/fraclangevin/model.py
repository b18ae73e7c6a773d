"""Model space, potential families and assumption checks.

The system has a confining position potential ``U`` and a radial velocity
potential ``Phi(v) = psi(|v|^2)``.  Built-in families:

* ``U``: ``quadratic`` (``k|x|^2/2``), ``quadratic_plus_bump``
  (``k|x|^2/2 + a exp(-|x-c|^2/(2w^2))``) and ``custom`` closures;
* ``Phi``: ``log_radial`` (``psi(u) = (d+beta)/2 log(1+u)``) and custom
  radial profiles given through ``psi`` and its derivatives.
"""
from __future__ import annotations

from functools import partial
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .errors import ValidationError
from .fields import Field, fd_gradient, fd_hessian


# ---------------------------------------------------------------- potentials
class Potential:
    """A scalar potential on R^d with gradient and Hessian."""

    d: int = 1

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        return fd_gradient(self.value, x)

    def hess(self, x):
        return fd_hessian(self.grad, x)

    def laplacian(self, x):
        return np.trace(self.hess(x), axis1=-2, axis2=-1)

    def __call__(self, x):
        return self.value(np.asarray(x, dtype=float))


class QuadraticPotential(Potential):
    """``U(x) = k |x|^2 / 2``."""

    def __init__(self, d: int, k: float = 1.0):
        if k <= 0:
            raise ValidationError("quadratic stiffness k must be positive")
        self.d, self.k = int(d), float(k)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.k * np.sum(x * x, axis=-1)

    def grad(self, x):
        return self.k * np.asarray(x, dtype=float)

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.k * np.eye(self.d), x.shape + (self.d,)).copy()

    def laplacian(self, x):
        return np.full(np.shape(x)[:-1], self.k * self.d)


class QuadraticPlusBumpPotential(Potential):
    """``U(x) = k|x|^2/2 + a exp(-|x-c|^2/(2 w^2))`` with ``a >= 0``."""

    def __init__(self, d: int, k: float = 1.0, amplitude: float = 1.0,
                 width: float = 1.0, center=None):
        if k <= 0 or width <= 0:
            raise ValidationError("need k > 0 and width > 0")
        if amplitude < 0:
            raise ValidationError("bump amplitude must be >= 0 so that U >= 0")
        self.d, self.k, self.a, self.w = int(d), float(k), float(amplitude), float(width)
        self.c = np.zeros(self.d) if center is None else np.broadcast_to(
            np.asarray(center, dtype=float), (self.d,)).copy()

    def _bump(self, x):
        y = np.asarray(x, dtype=float) - self.c
        return y, self.a * np.exp(-np.sum(y * y, axis=-1) / (2 * self.w**2))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.k * np.sum(x * x, axis=-1) + self._bump(x)[1]

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        y, b = self._bump(x)
        return self.k * x - b[..., None] * y / self.w**2

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        y, b = self._bump(x)
        eye = np.eye(self.d)
        outer = y[..., :, None] * y[..., None, :] / self.w**4
        return self.k * eye + b[..., None, None] * (outer - eye / self.w**2)


class CustomPotential(Potential):
    """Potential from user closures; missing derivatives use differences."""

    def __init__(self, d: int, value: Callable, grad: Optional[Callable] = None,
                 hess: Optional[Callable] = None):
        self.d = int(d)
        self._v, self._g, self._h = value, grad, hess

    def value(self, x):
        return self._v(np.asarray(x, dtype=float))

    def grad(self, x):
        return self._g(x) if self._g is not None else super().grad(x)

    def hess(self, x):
        return self._h(x) if self._h is not None else super().hess(x)


class RadialPotential(Potential):
    """``Phi(v) = psi(|v|^2)`` from a profile and its derivatives.

    Parameters
    ----------
    d : int
    psi, dpsi, d2psi : callable
        ``psi`` and its first two derivatives on ``[0, inf)``.
    d3psi : callable, optional
        Third derivative; differenced from ``d2psi`` when omitted.
    density_decay : float or None
        Exponent ``p`` with ``exp(-Phi(v)) = O(|v|**-p)``; ``None`` for
        faster than any power.
    """

    def __init__(self, d: int, psi, dpsi, d2psi, d3psi=None, density_decay=None,
                 name: str = "custom"):
        self.d = int(d)
        self.psi, self.dpsi, self.d2psi = psi, dpsi, d2psi
        self._d3 = d3psi
        self.density_decay = density_decay
        self.name = name

    def d3psi(self, u):
        if self._d3 is not None:
            return self._d3(u)
        u = np.asarray(u, dtype=float)
        h = 1e-5 * (1.0 + u)
        return (self.d2psi(u + h) - self.d2psi(np.maximum(u - h, 0.0))) / (u + h - np.maximum(u - h, 0.0))

    def value(self, v):
        v = np.asarray(v, dtype=float)
        return self.psi(np.sum(v * v, axis=-1))

    def grad(self, v):
        v = np.asarray(v, dtype=float)
        return 2.0 * self.dpsi(np.sum(v * v, axis=-1))[..., None] * v

    def hess(self, v):
        v = np.asarray(v, dtype=float)
        u = np.sum(v * v, axis=-1)
        eye = np.eye(v.shape[-1])
        return (2.0 * self.dpsi(u)[..., None, None] * eye
                + 4.0 * self.d2psi(u)[..., None, None] * v[..., :, None] * v[..., None, :])

    def third(self, v):
        """Third-derivative tensor ``d^3 Phi / dv_i dv_j dv_k``."""
        v = np.asarray(v, dtype=float)
        u = np.sum(v * v, axis=-1)
        eye = np.eye(v.shape[-1])
        sym = (eye[:, :, None] * v[..., None, None, :]
               + eye[:, None, :] * v[..., None, :, None]
               + eye[None, :, :] * v[..., :, None, None])
        vvv = v[..., :, None, None] * v[..., None, :, None] * v[..., None, None, :]
        return 4.0 * self.d2psi(u)[..., None, None, None] * sym + 8.0 * self.d3psi(u)[..., None, None, None] * vvv

    def laplacian(self, v):
        v = np.asarray(v, dtype=float)
        u = np.sum(v * v, axis=-1)
        return 2.0 * v.shape[-1] * self.dpsi(u) + 4.0 * u * self.d2psi(u)

    # radial profiles as functions of r = |v|
    def grad_radial(self, r):
        """``|grad Phi|`` as a function of ``r = |v|``."""
        r = np.asarray(r, dtype=float)
        return 2.0 * self.dpsi(r * r) * r

    def density(self, v):
        return np.exp(-self.value(v))

    def density_field(self) -> Field:
        """``exp(-Phi)`` as a :class:`Field` with its tail metadata."""
        def grad(v):
            return -self.grad(v) * np.exp(-self.value(v))[..., None]

        return Field(self.density, grad=grad, decay=self.density_decay,
                     features=(np.zeros(self.d),))


# module-level so that models pickle into worker processes
def _log_psi(a, u):
    return a * np.log1p(u)


def _log_dpsi(a, u):
    return a / (1.0 + u)


def _log_d2psi(a, u):
    return -a / (1.0 + u) ** 2


def _log_d3psi(a, u):
    return 2.0 * a / (1.0 + u) ** 3


class LogRadialPotential(RadialPotential):
    """``Phi(v) = (d+beta)/2 * log(1+|v|^2)``; ``exp(-Phi)`` is a Student-t kernel."""

    def __init__(self, d: int, beta: float):
        self.beta = float(beta)
        a = (d + self.beta) / 2.0
        super().__init__(
            d,
            psi=partial(_log_psi, a),
            dpsi=partial(_log_dpsi, a),
            d2psi=partial(_log_d2psi, a),
            d3psi=partial(_log_d3psi, a),
            density_decay=d + self.beta,
            name="log_radial",
        )

    def grad(self, v):
        v = np.asarray(v, dtype=float)
        return (self.d + self.beta) * v / (1.0 + np.sum(v * v, axis=-1))[..., None]

    def density(self, v):
        v = np.asarray(v, dtype=float)
        return (1.0 + np.sum(v * v, axis=-1)) ** (-(self.d + self.beta) / 2.0)


# ---------------------------------------------------------------- model spec
U_FAMILIES = ("quadratic", "quadratic_plus_bump", "custom")
PHI_FAMILIES = ("log_radial", "custom")


@dataclass(frozen=True)
class ModelSpec:
    """Dimension, stability index and potential families.

    ``u_params`` keys: ``k`` (quadratic, bump), ``amplitude``, ``width``,
    ``center`` (bump).  ``phi_params`` keys: ``beta`` (log_radial).
    Custom families take closures through ``u_custom`` (a
    :class:`Potential`) and ``phi_custom`` (a :class:`RadialPotential`).
    """

    d: int = 1
    alpha: float = 1.5
    u_family: str = "quadratic"
    phi_family: str = "log_radial"
    u_params: Dict[str, float] = field(default_factory=dict)
    phi_params: Dict[str, float] = field(default_factory=lambda: {"beta": 1.5})
    u_custom: Optional[Potential] = None
    phi_custom: Optional[RadialPotential] = None

    def __post_init__(self):
        validate_model(self.d, self.alpha)
        if self.u_family not in U_FAMILIES:
            raise ValidationError(f"u_family must be one of {U_FAMILIES}")
        if self.phi_family not in PHI_FAMILIES:
            raise ValidationError(f"phi_family must be one of {PHI_FAMILIES}")
        if self.phi_family == "log_radial":
            beta = self.phi_params.get("beta")
            if beta is None:
                raise ValidationError("log_radial needs phi_params['beta']")
            if not (self.alpha <= beta < 2 * self.alpha):
                raise ValidationError(
                    f"log_radial needs alpha <= beta < 2*alpha, got beta={beta}, alpha={self.alpha}")
        if self.u_family == "custom" and self.u_custom is None:
            raise ValidationError("custom U family needs u_custom")
        if self.phi_family == "custom" and self.phi_custom is None:
            raise ValidationError("custom Phi family needs phi_custom")

    @property
    def beta(self) -> Optional[float]:
        return self.phi_params.get("beta")


def validate_model(d, alpha):
    if int(d) != d or d < 1:
        raise ValidationError(f"d must be an integer >= 1, got {d}")
    if not (0.0 < alpha < 2.0):
        raise ValidationError(f"alpha must lie in (0, 2), got {alpha}")
    if d <= 2.0 - alpha:
        raise ValidationError(f"need d > 2 - alpha, got d={d}, alpha={alpha}")


@dataclass(frozen=True)
class PotentialPair:
    """The pair ``(U, Phi)`` together with its model spec."""

    spec: ModelSpec
    U: Potential
    Phi: RadialPotential

    @property
    def d(self) -> int:
        return self.spec.d

    @property
    def alpha(self) -> float:
        return self.spec.alpha

    @property
    def psi(self):
        return self.Phi.psi


def build_model(spec: ModelSpec) -> PotentialPair:
    """Instantiate the potentials named by ``spec``."""
    d = spec.d
    p = dict(spec.u_params)
    if spec.u_family == "quadratic":
        U = QuadraticPotential(d, p.get("k", 1.0))
    elif spec.u_family == "quadratic_plus_bump":
        U = QuadraticPlusBumpPotential(d, p.get("k", 1.0), p.get("amplitude", 1.0),
                                       p.get("width", 1.0), p.get("center"))
    else:
        U = spec.u_custom
    if spec.phi_family == "log_radial":
        Phi = LogRadialPotential(d, spec.phi_params["beta"])
    else:
        Phi = spec.phi_custom
    if U.d != d or Phi.d != d:
        raise ValidationError("potential dimension does not match spec.d")
    return PotentialPair(spec, U, Phi)


def standard_model(alpha=1.5, beta=1.5, d=1, k=1.0) -> PotentialPair:
    """The benchmark pair ``U = k|x|^2/2``, ``Phi = log_radial(beta)``."""
    return build_model(ModelSpec(d=d, alpha=alpha, u_params={"k": k},
                                 phi_params={"beta": beta}))


# ---------------------------------------------------------------- assumptions
@dataclass(frozen=True)
class AssumptionGrid:
    """Sampling plan for :func:`check_assumptions`.

    A ball of radius ``radius`` sampled with ``n_ball`` points plus rings
    at ``far_radii`` with ``n_dirs`` directions each, and ``n_offsets``
    offsets per ring point for sup-over-unit-ball checks.
    """

    radius: float = 10.0
    n_ball: int = 400
    far_radii: tuple = (20.0, 40.0, 80.0, 160.0, 320.0, 640.0)
    n_dirs: int = 16
    n_offsets: int = 12
    tol: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.radius < 10.0:
            raise ValidationError("assumption grid must cover a ball of radius >= 10")
        if len(self.far_radii) < 2 or min(self.far_radii) <= self.radius:
            raise ValidationError("need >= 2 far-field rings outside the ball")


@dataclass
class Verdict:
    status: str  # "pass" | "fail" | "unknown"
    values: dict
    witness: Optional[list] = None
    note: str = ""

    def to_dict(self):
        return {"status": self.status, "values": self.values,
                "witness": self.witness, "note": self.note}


@dataclass
class AssumptionReport:
    verdicts: Dict[str, Verdict]
    grid: AssumptionGrid

    def status(self, name: str) -> str:
        return self.verdicts[name].status

    def to_dict(self):
        return {"grid": self.grid.__dict__ | {"far_radii": list(self.grid.far_radii)},
                "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()}}


def _directions(d, n, rng):
    if d == 1:
        return np.array([[1.0], [-1.0]])
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _ball_points(d, n, radius, rng):
    dirs = _directions(d, n, rng) if d > 1 else rng.choice([-1.0, 1.0], size=(n, 1))
    r = radius * rng.random(n) ** (1.0 / d)
    return dirs * r[:, None]


def _trend(vals, tol):
    """Classify a sequence of ring sups as bounded, growing or unclear."""
    vals = np.asarray(vals, dtype=float)
    if np.all(vals[1:] <= vals[:-1] * (1 + tol) + 1e-300):
        return "bounded"
    ratios = vals[1:] / np.maximum(vals[:-1], 1e-300)
    if np.all(ratios >= 1.5):
        return "growing"
    return "unclear"


def _tensor_norm(T):
    # Frobenius norm bounds the operator norm of the symmetric 3-tensor
    return np.sqrt(np.sum(T * T, axis=(-3, -2, -1)))


def check_assumptions(pair: PotentialPair, grid: AssumptionGrid = AssumptionGrid()) -> AssumptionReport:
    """Sample the position and velocity assumptions on a ball plus far rings.

    Returns pass/fail/unknown verdicts with the sampled constants.  A
    verdict of ``unknown`` means the samples neither certify nor refute the
    asymptotic condition.
    """
    rng = np.random.default_rng(grid.seed)
    d, alpha = pair.d, pair.alpha
    U, Phi = pair.U, pair.Phi
    ball = _ball_points(d, grid.n_ball, grid.radius, rng)
    dirs = _directions(d, grid.n_dirs, rng)
    rings = [R * dirs for R in grid.far_radii]
    tol = grid.tol
    out: Dict[str, Verdict] = {}

    # A_U1: ||Hess U|| <= c1 |grad U| + c2
    ring_ratio = []
    for P in rings:
        H = np.linalg.norm(U.hess(P), ord=2, axis=(-2, -1))
        G = np.linalg.norm(U.grad(P), axis=-1)
        ring_ratio.append(float(np.max(H / np.maximum(G, 1e-300))))
    c1 = max(ring_ratio)
    allp = np.concatenate([ball] + rings)
    H = np.linalg.norm(U.hess(allp), ord=2, axis=(-2, -1))
    G = np.linalg.norm(U.grad(allp), axis=-1)
    c2 = float(max(0.0, np.max(H - c1 * G)))
    umin = float(np.min(U.value(allp)))
    trend = _trend(ring_ratio, tol)
    status = {"bounded": "pass", "growing": "fail"}.get(trend, "unknown")
    if umin < -1e-12:
        status = "fail"
    out["A_U1"] = Verdict(status, {"c1": c1, "c2": c2, "ring_ratio": ring_ratio, "min_U": umin},
                          note="c1 from far rings, c2 from the full sample")

    # A_U2: liminf <grad U(x), x>/|x| > 0
    mins = []
    wit = None
    for R, P in zip(grid.far_radii, rings):
        s = np.sum(U.grad(P) * P, axis=-1) / R
        mins.append(float(np.min(s)))
        if wit is None or mins[-1] <= 0:
            wit = P[int(np.argmin(s))].tolist()
    if min(mins) > tol:
        status = "pass"
    elif mins[-1] <= 0:
        status = "fail"
    else:
        status = "unknown"
    out["A_U2"] = Verdict(status, {"ring_min": mins, "radii": list(grid.far_radii)}, witness=wit)

    # A_Phi1: radial structure, monotone profile, Phi >= 0, integrable density
    pts = np.concatenate([ball] + rings)
    rad_err = float(np.max(np.abs(Phi.value(pts) - Phi.psi(np.sum(pts * pts, axis=-1)))))
    r = np.concatenate([np.linspace(0.0, grid.radius, 2001), np.asarray(grid.far_radii)])
    e1 = np.zeros((r.size, d))
    e1[:, 0] = r
    prof = Phi.value(e1)
    mono = bool(np.all(np.diff(prof) >= -1e-12 * (1 + np.abs(prof[1:]))))
    pmin = float(np.min(Phi.value(pts)))
    p = Phi.density_decay
    integrable = p is None or p > d
    ok = rad_err <= 1e-12 * (1 + np.max(np.abs(prof))) and mono and pmin >= -1e-12 and integrable
    out["A_Phi1"] = Verdict("pass" if ok else "fail",
                            {"radial_error": rad_err, "monotone": mono, "min_Phi": pmin,
                             "density_decay": p})

    # A_Phi2: sup norms, sup ||Hess|| |v|, sup |Phi(v)-Phi(v/2)|, local comparability
    def sups(P):
        g = np.linalg.norm(Phi.grad(P), axis=-1)
        h = np.linalg.norm(Phi.hess(P), ord=2, axis=(-2, -1))
        t = _tensor_norm(Phi.third(P))
        nv = np.linalg.norm(P, axis=-1)
        half = np.abs(Phi.value(P) - Phi.value(P / 2))
        return np.array([g.max(), t.max(), (h * nv).max(), half.max()])

    names = ["grad", "third", "hess_times_r", "half_shift"]
    ball_s = sups(ball)
    ring_s = np.array([sups(P) for P in rings])
    checks = {}
    for j, nm in enumerate(names):
        seq = np.concatenate([[ball_s[j]], ring_s[:, j]])
        checks[nm] = _trend(seq, tol)
    offs = _ball_points(d, grid.n_offsets, 1.0, rng)
    cstar = []
    for P in rings:
        rat = []
        for i, op in ((1, lambda Q: np.linalg.norm(Phi.grad(Q), axis=-1)),
                      (2, lambda Q: np.linalg.norm(Phi.hess(Q), ord=2, axis=(-2, -1))),
                      (3, lambda Q: _tensor_norm(Phi.third(Q)))):
            base = op(P)
            near = np.max(op(P[:, None, :] + offs[None, :, :]), axis=1)
            rat.append(float(np.max(near / np.maximum(base, 1e-300))))
        cstar.append(max(rat))
    checks["local_comparability"] = _trend(cstar, tol)
    st = list(checks.values())
    if all(s == "bounded" for s in st):
        status = "pass"
    elif any(s == "growing" for s in st):
        status = "fail"
    else:
        status = "unknown"
    out["A_Phi2"] = Verdict(status, {"ball_sups": dict(zip(names, ball_s.tolist())),
                                     "ring_sups": {nm: ring_s[:, j].tolist() for j, nm in enumerate(names)},
                                     "c_star_rings": cstar, "trends": checks},
                            note="sup over unit balls checked on a finite offset set")

    # A_Phi3: int exp(Phi)/(1+|v|)^(2(d+alpha)) dv, truncated plus tail estimate
    from .quadrature import gauss_legendre, sphere_area

    Rt = grid.far_radii[-1]
    rr, ww = [], []
    edges = np.concatenate([[0.0], np.geomspace(0.25, Rt, 40)])
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = gauss_legendre(16, a, b)
        rr.append(x)
        ww.append(w)
    rr, ww = np.concatenate(rr), np.concatenate(ww)
    vv = np.zeros((rr.size, d))
    vv[:, 0] = rr

    def integrand(rv, V):
        return np.exp(Phi.value(V) - 2 * (d + alpha) * np.log1p(rv)) * rv ** (d - 1)

    trunc = float(sphere_area(d) * np.sum(ww * integrand(rr, vv)))
    R1, R2 = grid.far_radii[-2], grid.far_radii[-1]
    v1, v2 = np.zeros((1, d)), np.zeros((1, d))
    v1[0, 0], v2[0, 0] = R1, R2
    i1, i2 = integrand(np.array([R1]), v1)[0], integrand(np.array([R2]), v2)[0]
    slope = float(np.log(i2 / i1) / np.log(R2 / R1))
    if slope < -1 - tol:
        tail = float(sphere_area(d) * i2 * R2 / (-slope - 1))
        status = "pass"
    elif slope > -1 + tol:
        tail = float("inf")
        status = "fail"
    else:
        tail = float("nan")
        status = "unknown"
    out["A_Phi3"] = Verdict(status, {"truncated": trunc, "tail_bound": tail,
                                     "tail_exponent": slope, "truncation_radius": Rt})

    # A_Phi4: liminf exp(Phi(v))/|v|^(d+alpha) > 0
    mins = []
    for R, P in zip(grid.far_radii, rings):
        mins.append(float(np.min(np.exp(Phi.value(P) - (d + alpha) * np.log(R)))))
    mins_a = np.asarray(mins)
    if np.all(mins_a[1:] >= mins_a[:-1] * (1 - tol)):
        status = "pass"
    elif np.all(mins_a[1:] <= 0.7 * mins_a[:-1]):
        status = "fail"
    else:
        status = "unknown"
    out["A_Phi4"] = Verdict(status, {"ring_min": mins, "radii": list(grid.far_radii)})
    return AssumptionReport(out, grid)
