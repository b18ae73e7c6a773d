"""Hypocoercive decay rates and their certification on matrix models.

For constants ``alpha1, alpha2, alpha3`` and a tuning parameter ``lambda``:

    eps0    = 1/2 min(sqrt(lam), (1 + lam a2)/a1, 1/(a1 (1 + lam a2) a3^2))
    lambda0 = eps0 / (2 (1 + eps0/sqrt(lam)) (1 + lam a2))
    C       = (sqrt(lam) + eps0) / (sqrt(lam) - eps0)

and ``|P_t f|^2 <= C exp(-lambda0 t) |f|^2``.  A :class:`MatrixModel` is a
finite-dimensional instance with ``H0`` the first ``k`` coordinates.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize_scalar

from .errors import HypothesisError, NumericalError, ValidationError
from .poincare import poincare_mu1_1d, poincare_mu2_nonlocal_1d  # noqa: F401  (re-export)


# ---------------------------------------------------------------- rates
@dataclass(frozen=True)
class DmsRates:
    alpha1: float
    alpha2: float
    alpha3: float
    lam: float
    eps0: float
    lambda0: float
    bigC: float

    def to_dict(self):
        return asdict(self)


def rate_bound(alpha1: float, alpha2: float, alpha3: float, lam: float) -> DmsRates:
    """Closed-form ``eps0``, ``lambda0`` and ``C``."""
    for name, val in (("alpha1", alpha1), ("alpha2", alpha2), ("alpha3", alpha3), ("lambda", lam)):
        if not (np.isfinite(val) and val > 0):
            raise ValidationError(f"{name} must be a finite positive number, got {val}")
    s = math.sqrt(lam)
    q = 1.0 + lam * alpha2
    eps0 = 0.5 * min(s, q / alpha1, 1.0 / (alpha1 * q * alpha3**2))
    lambda0 = eps0 / (2.0 * (1.0 + eps0 / s) * q)
    bigC = (s + eps0) / (s - eps0)
    return DmsRates(float(alpha1), float(alpha2), float(alpha3), float(lam), eps0, lambda0, bigC)


def optimize_lambda(alpha1: float, alpha2: float, alpha3: float,
                    lam_range: Sequence[float] = (0.01, 100.0), n_grid: int = 201):
    """Maximize ``lambda0`` over ``lam_range``.

    A log-spaced grid brackets the maximum; golden-section search in
    ``log lambda`` refines it.  Returns ``(lam_star, rates)``.
    """
    lo, hi = map(float, lam_range)
    if not (0 < lo < hi):
        raise ValidationError("lambda range must satisfy 0 < lo < hi")

    def neg(t):
        return -rate_bound(alpha1, alpha2, alpha3, math.exp(min(max(t, math.log(lo)), math.log(hi)))).lambda0

    ts = np.linspace(math.log(lo), math.log(hi), n_grid)
    vals = np.array([-neg(t) for t in ts])
    i = int(np.argmax(vals))
    best_t, best = ts[i], vals[i]
    if 0 < i < n_grid - 1:
        res = minimize_scalar(neg, bracket=(ts[i - 1], ts[i], ts[i + 1]), method="golden",
                              options={"xtol": 1e-10})
        t = min(max(res.x, ts[i - 1]), ts[i + 1])
        if -neg(t) >= best:
            best_t, best = t, -neg(t)
    lam = math.exp(best_t)
    return lam, rate_bound(alpha1, alpha2, alpha3, lam)


# ---------------------------------------------------------------- matrix models
@dataclass(frozen=True)
class MatrixModel:
    n: int
    k: int
    L0: np.ndarray
    L1: np.ndarray
    pi: np.ndarray
    seed: Optional[int] = None

    @property
    def L(self) -> np.ndarray:
        return self.L0 + self.L1

    def invariant_errors(self) -> dict:
        pi, L0, L1 = self.pi, self.L0, self.L1
        return {
            "antisymmetry": float(np.linalg.norm(L0 + L0.T)),
            "projection": float(np.linalg.norm(pi @ pi - pi) + np.linalg.norm(pi - pi.T)),
            "pi_L0_pi": float(np.linalg.norm(pi @ L0 @ pi)),
            "L1_pi": float(np.linalg.norm(L1 @ pi) + np.linalg.norm(L1.T @ pi)),
        }


def _projection(n, k):
    pi = np.zeros((n, n))
    pi[:k, :k] = np.eye(k)
    return pi


def build_matrix_model(n: int, k: int, seed: Optional[int] = None, *, A=None, J=None, K=None,
                       max_retries: int = 20) -> MatrixModel:
    """Block model ``L0 = [[0, A], [-A^T, J]]``, ``L1 = [[0, 0], [0, K]]``.

    Explicit blocks take precedence; missing blocks are drawn from a seeded
    stream.  ``sym(-K)`` is positive definite and ``A`` (``k x (n-k)``) has
    rank ``k``, which needs ``n - k >= k``.
    """
    n, k = int(n), int(k)
    if not (1 <= k < n):
        raise ValidationError("need 1 <= k < n")
    m = n - k
    if A is None and m < k:
        raise ValidationError("a rank-k block A needs n - k >= k")
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        A_ = rng.standard_normal((k, m)) if A is None else np.asarray(A, dtype=float).reshape(k, m)
        if J is None:
            B = rng.standard_normal((m, m))
            J_ = (B - B.T) / 2
        else:
            J_ = np.asarray(J, dtype=float).reshape(m, m)
        if K is None:
            M = rng.standard_normal((m, m))
            S = rng.standard_normal((m, m))
            K_ = -(M @ M.T / m + 0.2 * np.eye(m)) + (S - S.T) / 4
        else:
            K_ = np.asarray(K, dtype=float).reshape(m, m)
        if np.linalg.svd(A_, compute_uv=False).min() > 1e-8 or A is not None:
            break
    else:
        raise NumericalError("could not draw a full-rank coupling block A")
    L0 = np.zeros((n, n))
    L0[:k, k:] = A_
    L0[k:, :k] = -A_.T
    L0[k:, k:] = J_
    L1 = np.zeros((n, n))
    L1[k:, k:] = K_
    model = MatrixModel(n, k, L0, L1, _projection(n, k), seed)
    err = model.invariant_errors()
    if err["antisymmetry"] > 1e-12:
        raise ValidationError("J must be antisymmetric")
    return model


def B_lambda(model: MatrixModel, lam: float) -> np.ndarray:
    """``(lam I + G)^{-1} (L0 pi)^T`` with ``G = (L0 pi)^T L0 pi``."""
    L0pi = model.L0 @ model.pi
    G = L0pi.T @ L0pi
    return np.linalg.solve(lam * np.eye(model.n) + G, L0pi.T)


@dataclass(frozen=True)
class Alphas:
    alpha1: float
    alpha2: float
    alpha3: float

    def __iter__(self):
        return iter((self.alpha1, self.alpha2, self.alpha3))


def estimate_alphas(model: MatrixModel, lam: float) -> Alphas:
    """Sharp constants of the coercivity and boundedness hypotheses.

    Raises
    ------
    HypothesisError
        If ``sym(-L1)`` is singular on the complement of ``H0`` or the
        coupling block is rank deficient.
    """
    k = model.k
    K = model.L1[k:, k:]
    symK = -(K + K.T) / 2
    lmin = float(np.linalg.eigvalsh(symK).min())
    if lmin <= 1e-12 * max(1.0, float(np.abs(symK).max())):
        raise HypothesisError("microscopic coercivity infeasible: sym(-L1) is singular off H0")
    A = model.L0[:k, k:]
    smin = float(np.linalg.svd(A.T, compute_uv=False).min()) if A.size else 0.0
    if smin <= 1e-12:
        raise HypothesisError("macroscopic coercivity infeasible: L0 pi has a kernel on H0")
    B = B_lambda(model, lam)
    I_pi = np.eye(model.n) - model.pi
    M = B @ model.L @ I_pi
    alpha3 = float(np.linalg.norm(M[:k, k:], ord=2))
    return Alphas(1.0 / lmin, 1.0 / smin**2, alpha3)


# ---------------------------------------------------------------- certification
@dataclass
class DecayReport:
    passed: bool
    max_violation: float
    slack: float
    t_grid: list
    table: list  # rows (t, max |e^{tL}f|^2/|f|^2, bound)
    expm_eig_discrepancy: Optional[float]
    spectral_rate: float
    rates: dict

    def to_dict(self):
        return asdict(self)


def verify_decay(model: MatrixModel, rates: DmsRates, t_grid, f_samples, slack: float = 1e-9) -> DecayReport:
    """Check ``|e^{tL} f|^2 <= C e^{-lambda0 t} |f|^2`` on a grid of times.

    ``scipy.linalg.expm`` (scaling and squaring) is primary; when ``L`` is
    diagonalizable with a well-conditioned eigenbasis the semigroup is also
    formed from the eigendecomposition and the discrepancy is reported.
    """
    L = model.L
    F = np.atleast_2d(np.asarray(f_samples, dtype=float))
    norms = np.sum(F * F, axis=1)
    w, V = np.linalg.eig(L)
    condV = np.linalg.cond(V)
    Vinv = np.linalg.inv(V) if condV < 1e8 else None
    worst, table, disc = -math.inf, [], 0.0
    for t in np.asarray(t_grid, dtype=float):
        P = expm(t * L)
        if not np.all(np.isfinite(P)):
            raise NumericalError(f"matrix exponential not finite at t={t}")
        if Vinv is not None:
            Pe = np.real(V @ np.diag(np.exp(t * w)) @ Vinv)
            disc = max(disc, float(np.max(np.abs(Pe - P))))
        out = F @ P.T
        ratio = np.sum(out * out, axis=1) / np.where(norms > 0, norms, 1.0)
        bound = rates.bigC * math.exp(-rates.lambda0 * t)
        viol = float(np.max(ratio - bound))
        worst = max(worst, viol)
        table.append((float(t), float(np.max(ratio)), bound))
    return DecayReport(worst <= slack, worst, slack, [float(t) for t in t_grid], table,
                       disc if Vinv is not None else None, float(-2.0 * np.max(w.real)),
                       rates.to_dict())


@dataclass
class EntropyReport:
    lower_violation: float
    upper_violation: float
    equivalence_established: bool
    lower_constant: float
    upper_constant: float
    n: int
    witness: Optional[list] = None

    @property
    def passed(self) -> bool:
        return self.equivalence_established and self.lower_violation <= 0 and self.upper_violation <= 0


def entropy_equivalence_check(model: MatrixModel, lam: float, eps0: float, f_samples,
                              tol: float = 1e-12) -> EntropyReport:
    """Compare ``I(f) = |f|^2/2 + eps0 <B f, f>`` with ``(1 -+ eps0/sqrt(lam))|f|^2/2``.

    Violations are reported in units of ``|f|^2`` beyond ``tol``.  The
    equivalence is only established when the lower constant is positive
    (``eps0 < sqrt(lam)``).
    """
    B = B_lambda(model, lam)
    F = np.atleast_2d(np.asarray(f_samples, dtype=float))
    nf = np.sum(F * F, axis=1)
    I = 0.5 * nf + eps0 * np.einsum("ni,ij,nj->n", F, B, F)
    lo_c = 0.5 * (1.0 - eps0 / math.sqrt(lam))
    hi_c = 0.5 * (1.0 + eps0 / math.sqrt(lam))
    scale = np.where(nf > 0, nf, 1.0)
    lo = (lo_c * nf - I) / scale - tol
    hi = (I - hi_c * nf) / scale - tol
    worst = int(np.argmax(np.maximum(lo, hi))) if F.shape[0] else 0
    lv, hv = float(np.max(lo, initial=-math.inf)), float(np.max(hi, initial=-math.inf))
    wit = F[worst].tolist() if max(lv, hv) > 0 else None
    return EntropyReport(lv, hv, lo_c > 0, lo_c, hi_c, int(F.shape[0]), wit)


def check_B_bounds(model: MatrixModel, lam: float, f_samples) -> dict:
    """``|<B f, f>| <= |f| |(I-pi) f| / (2 sqrt(lam))`` and ``pi B = B``."""
    B = B_lambda(model, lam)
    F = np.atleast_2d(np.asarray(f_samples, dtype=float))
    lhs = np.abs(np.einsum("ni,ij,nj->n", F, B, F))
    f1 = F @ (np.eye(model.n) - model.pi).T
    rhs = np.linalg.norm(F, axis=1) * np.linalg.norm(f1, axis=1) / (2 * math.sqrt(lam))
    return {"max_excess": float(np.max(lhs - rhs)),
            "pi_B_minus_B": float(np.linalg.norm(model.pi @ B - B))}


# ---------------------------------------------------------------- SDE constants
def sde_alphas(c1: float, c2: float, cstar: float, d: int, alpha: float) -> tuple:
    """``(alpha1, alpha2)`` of the kinetic system from Poincare constants.

    ``alpha1 = 2 c2 / c_{d,alpha}`` since ``<-L1 f, f> = c_{d,alpha} E(f)/2``;
    ``alpha2 = c1 / c_star`` since ``|L0 pi f|^2 = c_star mu1(|grad f|^2)``.
    """
    from .fracops import frac_constant

    return 2.0 * c2 / frac_constant(d, alpha), c1 / cstar


@dataclass
class SdeRates:
    """Rate certificate of the kinetic system from its Poincare constants."""

    c1: float
    c2: float
    cstar: float
    alpha3: float
    lam: float
    rates: DmsRates
    c2_truncation_sensitive: bool

    @property
    def half_lambda0(self) -> float:
        return 0.5 * self.rates.lambda0

    def to_dict(self):
        d = asdict(self)
        d["half_lambda0"] = self.half_lambda0
        return d


def sde_rates(pair, alpha3: float = 1.0, lam_range=(0.01, 100.0), *, mu1_grid=None,
              mu2_kwargs=None) -> SdeRates:
    """``(alpha1, alpha2)`` from ``c1``, ``c2`` and ``c_star``; ``alpha3`` is supplied.

    Only one-dimensional models are supported since both Poincare
    estimators are 1-d.  ``alpha3`` has no computable value for the
    continuum system, so it is an input.
    """
    from .poisson import c_star

    if pair.d != 1:
        raise ValidationError("sde_rates supports d = 1")
    if mu1_grid is None:
        s = 1.0 / math.sqrt(getattr(pair.U, "k", 1.0))
        L = 10.0 * s + float(np.max(np.abs(getattr(pair.U, "c", [0.0]))))
        mu1_grid = np.linspace(-L, L, 2001)
    c1 = poincare_mu1_1d(pair.U, mu1_grid).constant
    p2 = poincare_mu2_nonlocal_1d(pair, **(mu2_kwargs or {}))
    cs = c_star(pair).value
    a1, a2 = sde_alphas(c1, p2.constant, cs, pair.d, pair.alpha)
    lam, rates = optimize_lambda(a1, a2, alpha3, lam_range)
    return SdeRates(c1, p2.constant, cs, float(alpha3), lam, rates, p2.truncation_sensitive)
