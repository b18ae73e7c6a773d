"""Euler-Maruyama ensembles of the kinetic system and their statistics.

    x' = x + grad Phi(v) dt
    v' = v + (-grad U(x) + b(v)) dt + dL,   dL ~ alpha-stable at time dt

Particles are split into fixed blocks, each with its own ``SeedSequence``
child, so the output does not depend on how blocks are scheduled.
Observables are recorded every ``stride`` steps.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import kolmogorov

from . import kernels
from .errors import NumericalError, ValidationError
from .fracops import DriftProfile, build_drift_profile, drift_b_phi
from .measures import marginal, sample_marginal
from .model import (LogRadialPotential, PotentialPair, QuadraticPlusBumpPotential,
                    QuadraticPotential)
from .stable_noise import StableParams, sample_increment

log = logging.getLogger(__name__)

NONFINITE_LIMIT = 1e-3

OBSERVABLES = {
    "x": lambda x, v: x[..., 0],
    "v": lambda x, v: v[..., 0],
    "tanh_v": lambda x, v: np.tanh(v[..., 0]),
    "sin_x": lambda x, v: np.sin(x[..., 0]),
    "x_tanh_v": lambda x, v: x[..., 0] * np.tanh(v[..., 0]),
}


# ---------------------------------------------------------------- single step
@dataclass
class PhaseState:
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.v = np.atleast_1d(np.asarray(self.v, dtype=float))
        if self.x.shape != self.v.shape:
            raise ValidationError("x and v must have the same shape")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise NumericalError(f"non-finite phase state x={self.x}, v={self.v}")


def _drift_at(pair, profile, v, alpha):
    """Profile drift inside its validity radius, direct quadrature outside."""
    r = np.linalg.norm(v, axis=-1)
    if profile is None:
        return drift_b_phi(pair, v, alpha)
    inside = r <= profile.validity_radius
    if np.all(inside):
        return profile(v)
    out = np.empty_like(v)
    out[inside] = profile(v[inside])
    out[~inside] = drift_b_phi(pair, v[~inside], alpha)
    log.info("drift fallback to quadrature for %d velocities (max |v| = %.3g)",
             int((~inside).sum()), float(r.max()))
    return out


def step(state: PhaseState, pair: PotentialPair, profile: Optional[DriftProfile], dt: float,
         alpha: Optional[float], rng: Optional[np.random.Generator], noise=None) -> PhaseState:
    """One Euler-Maruyama step; ``noise`` overrides the stable increment (e.g. zero)."""
    alpha = pair.alpha if alpha is None else alpha
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if noise is None:
        noise = sample_increment(StableParams(alpha, pair.d), dt, rng)
    x, v = state.x, state.v
    b = _drift_at(pair, profile, v[None, :], alpha)[0]
    xn = x + pair.Phi.grad(v) * dt
    vn = v + (-pair.U.grad(x) + b) * dt + np.asarray(noise, dtype=float)
    return PhaseState(xn, vn)


# ---------------------------------------------------------------- ensembles
INITIAL_LAWS = ("stationary", "point", "perturbed")


@dataclass
class EnsembleConfig:
    """Ensemble settings.

    ``initial`` is ``"stationary"`` (draws from mu), ``"point"`` (all
    particles at ``(x0, v0)``) or ``"perturbed"`` (mu shifted by ``(x0, v0)``).
    """

    n_particles: int = 2000
    dt: float = 1e-3
    t_end: float = 50.0
    stride: int = 100
    initial: str = "stationary"
    x0: Sequence[float] = (0.0,)
    v0: Sequence[float] = (0.0,)
    observables: Sequence[str] = ("x", "v", "tanh_v")
    seed: int = 0
    burn_in_fraction: float = 0.1
    block_size: int = 250
    backend: Optional[str] = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.n_particles < 1 or self.stride < 1 or self.block_size < 1:
            raise ValidationError("n_particles, stride and block_size must be >= 1")
        if self.t_end <= 0:
            raise ValidationError("t_end must be positive")
        if self.initial not in INITIAL_LAWS:
            raise ValidationError(f"initial must be one of {INITIAL_LAWS}")
        if not 0 <= self.burn_in_fraction < 1:
            raise ValidationError("burn_in_fraction must lie in [0, 1)")
        unknown = [o for o in self.observables if o not in OBSERVABLES]
        if unknown:
            raise ValidationError(f"unknown observables {unknown}; known: {sorted(OBSERVABLES)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def n_records(self) -> int:
        return self.n_steps // self.stride + 1

    def to_dict(self):
        d = asdict(self)
        d["x0"], d["v0"], d["observables"] = list(self.x0), list(self.v0), list(self.observables)
        return d


@dataclass
class EnsembleResult:
    times: np.ndarray
    x: np.ndarray                 # (n, T, d)
    v: np.ndarray                 # (n, T, d)
    series: Dict[str, np.ndarray]  # name -> (n, T)
    alive: np.ndarray
    fallback_steps: int
    backend: str
    wall_time: float
    config: EnsembleConfig
    manifest: dict = field(default_factory=dict)

    @property
    def burn_in_index(self) -> int:
        return int(math.ceil(self.config.burn_in_fraction * (self.times.size - 1)))

    def slice_stats(self, name: str):
        """Per-record mean and standard error across particles."""
        s = self.series[name][self.alive]
        return s.mean(axis=0), s.std(axis=0, ddof=1) / math.sqrt(s.shape[0])

    def write_statistics_csv(self, path):
        names = list(self.series)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"{n}_{k}" for n in names for k in ("mean", "se")])
            stats_ = [self.slice_stats(n) for n in names]
            for i, t in enumerate(self.times):
                row = [repr(float(t))]
                for m, se in stats_:
                    row += [repr(float(m[i])), repr(float(se[i]))]
                w.writerow(row)

    def write_trajectories_csv(self, path):
        n, T, d = self.x.shape
        names = [k for k in self.series if k not in ("x", "v")]
        header = (["particle", "t"] + [f"x{j + 1}" for j in range(d)] + [f"v{j + 1}" for j in range(d)]
                  + names)
        cols = [np.repeat(np.arange(n), T), np.tile(self.times, n),
                *[self.x[:, :, j].ravel() for j in range(d)],
                *[self.v[:, :, j].ravel() for j in range(d)],
                *[self.series[k].ravel() for k in names]]
        data = np.column_stack(cols)
        fmt = ["%d", "%.6g"] + ["%.17g"] * (data.shape[1] - 2)
        np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt=fmt)


def _kernel_arrays(pair: PotentialPair, profile: DriftProfile):
    """Parameters of the compiled kernel, or ``None`` if the families are not built in."""
    U, Phi, d = pair.U, pair.Phi, pair.d
    if not isinstance(Phi, LogRadialPotential):
        return None
    if isinstance(U, QuadraticPlusBumpPotential):
        kind, params = kernels.U_BUMP, np.concatenate([[U.k, U.a, U.w], U.c])
    elif isinstance(U, QuadraticPotential):
        kind, params = kernels.U_QUADRATIC, np.concatenate([[U.k, 0.0, 1.0], np.zeros(d)])
    else:
        return None
    return dict(u_kind=kind, u_params=np.ascontiguousarray(params, dtype=float),
                phi_coef=float(d + Phi.beta),
                radii=np.ascontiguousarray(profile.radii), rho=np.ascontiguousarray(profile.rho),
                slopes=np.ascontiguousarray(profile.slopes))


def _initial(config: EnsembleConfig, pair: PotentialPair, n: int, rng):
    d = pair.d
    x0 = np.broadcast_to(np.asarray(config.x0, dtype=float), (d,))
    v0 = np.broadcast_to(np.asarray(config.v0, dtype=float), (d,))
    if config.initial == "point":
        return np.tile(x0, (n, 1)), np.tile(v0, (n, 1))
    x = sample_marginal(marginal(pair, "mu1"), n, rng)
    v = sample_marginal(marginal(pair, "mu2"), n, rng)
    if config.initial == "perturbed":
        x, v = x + x0, v + v0
    return np.ascontiguousarray(x), np.ascontiguousarray(v)


def _generic_steps(x, v, noise, dt, pair, profile, alpha, alive):
    for s in range(noise.shape[0]):
        live = alive.astype(bool)
        b = _drift_at(pair, profile, v[live], alpha)
        xn = x[live] + pair.Phi.grad(v[live]) * dt
        vn = v[live] + (-pair.U.grad(x[live]) + b) * dt + noise[s][live]
        ok = np.all(np.isfinite(xn), axis=1) & np.all(np.isfinite(vn), axis=1)
        idx = np.flatnonzero(live)
        x[idx[ok]], v[idx[ok]] = xn[ok], vn[ok]
        alive[idx[~ok]] = 0


def _run_block(args):
    config, pair, alpha, profile, seed_seq, n = args
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    d = pair.d
    x, v = _initial(config, pair, n, rng)
    alive = np.ones(n, dtype=np.uint8)
    T = config.n_records
    X = np.empty((n, T, d))
    V = np.empty((n, T, d))
    X[:, 0], V[:, 0] = x, v
    karr = _kernel_arrays(pair, profile)
    advance = kernels.get_advance(config.backend)
    params = StableParams(alpha, d)
    fallbacks = 0
    for rec in range(1, T):
        noise = np.ascontiguousarray(sample_increment(params, config.dt, rng, (config.stride, n)))
        if karr is None:
            _generic_steps(x, v, noise, config.dt, pair, profile, alpha, alive)
        else:
            s = 0
            while s < config.stride:
                done = advance(x, v, noise[s:], config.dt, karr["u_kind"], karr["u_params"],
                               karr["phi_coef"], karr["radii"], karr["rho"], karr["slopes"], alive)
                s += done
                if s < config.stride:
                    # a velocity left the profile range: one step with the quadrature drift
                    _generic_steps(x, v, noise[s:s + 1], config.dt, pair, profile, alpha, alive)
                    fallbacks += 1
                    s += 1
        X[:, rec], V[:, rec] = x, v
        if (n - int(alive.sum())) > NONFINITE_LIMIT * config.n_particles:
            raise NumericalError(
                f"{n - int(alive.sum())} non-finite trajectories exceed {NONFINITE_LIMIT:.1%} "
                f"of the ensemble at t={rec * config.stride * config.dt:g}")
    return X, V, alive.astype(bool), fallbacks


def run_ensemble(config: EnsembleConfig, pair: PotentialPair, alpha: Optional[float] = None, *,
                 profile: Optional[DriftProfile] = None, workers: int = 1,
                 out_dir=None) -> EnsembleResult:
    """Simulate ``config.n_particles`` independent particles.

    Blocks of ``config.block_size`` particles run on up to ``workers``
    processes; results are concatenated in block order so output is
    identical for any ``workers``.  More than 0.1% non-finite trajectories
    raises :class:`NumericalError`.
    """
    alpha = pair.alpha if alpha is None else float(alpha)
    t0 = time.perf_counter()
    if profile is None:
        profile = build_drift_profile(pair, alpha)
    sizes = [config.block_size] * (config.n_particles // config.block_size)
    if config.n_particles % config.block_size:
        sizes.append(config.n_particles % config.block_size)
    children = np.random.SeedSequence(int(config.seed)).spawn(len(sizes))
    jobs = [(config, pair, alpha, profile, c, n) for c, n in zip(children, sizes)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_run_block, jobs))
    else:
        parts = [_run_block(j) for j in jobs]
    X = np.concatenate([p[0] for p in parts])
    V = np.concatenate([p[1] for p in parts])
    alive = np.concatenate([p[2] for p in parts])
    fallbacks = sum(p[3] for p in parts)
    if (~alive).sum() > NONFINITE_LIMIT * config.n_particles:
        raise NumericalError(f"{int((~alive).sum())} non-finite trajectories exceed 0.1%")
    times = np.arange(config.n_records) * config.stride * config.dt
    series = {name: OBSERVABLES[name](X, V) for name in config.observables}
    backend = config.backend or kernels.BACKEND
    if _kernel_arrays(pair, profile) is None:
        backend = "numpy-generic"
    res = EnsembleResult(times, X, V, series, alive, fallbacks, backend,
                         time.perf_counter() - t0, config)
    res.manifest = {"config": config.to_dict(), "seed": int(config.seed), "alpha": alpha,
                    "backend": backend, "fallback_steps": fallbacks,
                    "nonfinite": int((~alive).sum()), "wall_time": res.wall_time,
                    "versions": _versions()}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        res.write_statistics_csv(out / "statistics.csv")
        res.write_trajectories_csv(out / "trajectories.csv")
        (out / "run_manifest.json").write_text(json.dumps(res.manifest, indent=2))
    return res


def _versions():
    import scipy

    from . import __version__

    return {"fraclangevin": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


# ---------------------------------------------------------------- decay fit
@dataclass
class DecayFit:
    lags: np.ndarray
    acov: np.ndarray
    stderr: np.ndarray
    rate: float
    ci: tuple
    intercept: float
    window: int
    noise_floor: float
    variance: float
    degenerate: bool = False
    message: str = ""

    def to_dict(self):
        return {"rate": self.rate, "ci": list(self.ci), "intercept": self.intercept,
                "window": self.window, "noise_floor": self.noise_floor,
                "variance": self.variance, "degenerate": self.degenerate,
                "message": self.message}


def particle_autocov(series: np.ndarray, max_lag: int):
    """Per-particle autocovariances about the pooled mean, shape ``(n, max_lag + 1)``."""
    s = np.asarray(series, dtype=float)
    n, T = s.shape
    c = s - s.mean()
    m = 1 << int(math.ceil(math.log2(2 * T)))
    F = np.fft.rfft(c, n=m, axis=1)
    raw = np.fft.irfft(F * np.conj(F), n=m, axis=1)[:, : max_lag + 1]
    return raw / (T - np.arange(max_lag + 1))


def _loglin(lags, c):
    A = np.column_stack([np.ones_like(lags), lags])
    coef, *_ = np.linalg.lstsq(A, np.log(c), rcond=None)
    return -coef[1], coef[0]


def autocov_fit(series: np.ndarray, dt_sample: float, max_lag: Optional[int] = None,
                n_boot: int = 400, rng: Optional[np.random.Generator] = None,
                level: float = 0.95) -> DecayFit:
    """Log-linear fit of the ensemble autocovariance of a stationary series.

    The fit window runs from lag 0 up to (excluding) the first lag whose
    estimate is below 3 standard errors (the noise floor).  The confidence
    interval comes from a bootstrap over particles with the window fixed.
    An empty window is reported through ``degenerate``, not raised.
    """
    s = np.asarray(series, dtype=float)
    if s.ndim != 2:
        raise ValidationError("series must be (particles, times)")
    n, T = s.shape
    max_lag = T // 2 if max_lag is None else min(int(max_lag), T - 1)
    C = particle_autocov(s, max_lag)
    if np.ptp(s) <= 1e-12 * max(1.0, float(np.max(np.abs(s)))):
        C = np.zeros_like(C)  # constant up to round-off
    c = C.mean(axis=0)
    se = C.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full_like(c, np.inf)
    lags = np.arange(max_lag + 1) * dt_sample
    var = float(c[0])
    below = np.flatnonzero(~(c > 3 * se))
    window = int(below[0]) if below.size else max_lag + 1
    floor = float(3 * se[min(window, max_lag)])
    if var <= 1e-300 or window < 2:
        return DecayFit(lags, c, se, float("nan"), (float("nan"), float("nan")), float("nan"),
                        window, floor, var, True,
                        "degenerate: constant observable" if var <= 1e-300
                        else "fit window empty: autocovariance at the noise floor")
    rate, icpt = _loglin(lags[:window], c[:window])
    rng = np.random.default_rng(0) if rng is None else rng
    boots = []
    for _ in range(n_boot):
        cb = C[rng.integers(0, n, n)].mean(axis=0)[:window]
        if np.all(cb > 0):
            boots.append(_loglin(lags[:window], cb)[0])
    q = (1 - level) / 2
    ci = (float(np.quantile(boots, q)), float(np.quantile(boots, 1 - q))) if boots else (
        float("nan"), float("nan"))
    return DecayFit(lags, c, se, float(rate), ci, float(icpt), window, floor, var)


# ---------------------------------------------------------------- stationarity
@dataclass
class KSResult:
    statistic: float
    n: int
    n_eff: float
    tau: float
    pvalue: float
    passed: bool
    bootstrap_pvalue: float = float("nan")


@dataclass
class StationarityReport:
    x: KSResult
    v: KSResult
    level: float

    @property
    def passed(self) -> bool:
        return self.x.passed and self.v.passed

    def to_dict(self):
        return {"x": asdict(self.x), "v": asdict(self.v), "level": self.level,
                "passed": self.passed}


def _numeric_cdf(potential, lo, hi, n=20001):
    g = np.linspace(lo, hi, n)
    val = potential.value(g[:, None])
    w = np.exp(-(val - val.min()))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]) * np.diff(g))])
    cum /= cum[-1]
    return lambda x: np.interp(x, g, cum)


def marginal_cdfs(pair: PotentialPair):
    """CDFs of the first coordinate under ``mu1`` and ``mu2``."""
    U, Phi = pair.U, pair.Phi
    if isinstance(U, QuadraticPotential):
        Fx = stats.norm(scale=1.0 / math.sqrt(U.k)).cdf
    elif pair.d == 1:
        L = 14.0 / math.sqrt(getattr(U, "k", 1.0))
        Fx = _numeric_cdf(U, -L, L)
    else:
        raise ValidationError("x-marginal CDF needs quadratic U when d > 1")
    if isinstance(Phi, LogRadialPotential):
        Fv = stats.t(df=Phi.beta, scale=1.0 / math.sqrt(Phi.beta)).cdf
    else:
        raise ValidationError("v-marginal CDF is available for log_radial Phi")
    return Fx, Fv


def integrated_time(u: np.ndarray, max_lag: Optional[int] = None) -> float:
    """``1 + 2 sum rho(l)`` summed while the ensemble autocorrelation stays positive."""
    n, T = u.shape
    max_lag = min(T - 1, T // 2 if max_lag is None else max_lag)
    c = particle_autocov(u, max_lag).mean(axis=0)
    if c[0] <= 0:
        return 1.0
    rho = c / c[0]
    neg = np.flatnonzero(rho[1:] <= 0)
    stop = int(neg[0]) + 1 if neg.size else rho.size
    return float(max(1.0, 1.0 + 2.0 * rho[1:stop].sum()))


def particle_n_eff(u: np.ndarray, probes=(0.1, 0.25, 0.5, 0.75, 0.9)) -> float:
    """Effective sample size of pooled ``(particles, times)`` CDF values ``u``.

    Particles are independent, so the variance of the pooled empirical CDF
    at ``q`` is the across-particle variance of the per-particle empirical
    CDFs over ``n``; comparing with the i.i.d. value ``q(1-q)/N`` gives the
    effective size.  The median over the probe levels is returned.
    """
    n, T = u.shape
    ratios = []
    for q in probes:
        G = np.mean(u <= q, axis=1)
        var = G.var(ddof=1)
        if var > 0:
            ratios.append(q * (1 - q) / var)
    if not ratios:
        return float(n * T)
    return float(min(n * T, n * np.median(ratios)))


def bootstrap_ks_pvalue(u: np.ndarray, D: float, n_boot: int = 999, n_levels: int = 999,
                        rng: Optional[np.random.Generator] = None) -> float:
    """KS p-value from resampling whole particles.

    The per-particle empirical CDFs on ``n_levels`` probe levels keep the
    serial dependence intact; the null law of ``sup |G - F|`` is
    approximated by ``sup |G* - G|`` over particle resamples.
    """
    n, T = u.shape
    q = np.arange(1, n_levels + 1) / (n_levels + 1)
    srt = np.sort(u, axis=1)
    G = np.stack([np.searchsorted(row, q, side="right") for row in srt]) / T
    Gbar = G.mean(axis=0)
    rng = np.random.default_rng(0) if rng is None else rng
    count = 0
    for _ in range(n_boot):
        Gs = G[rng.integers(0, n, n)].mean(axis=0)
        count += np.max(np.abs(Gs - Gbar)) >= D
    return (1 + count) / (n_boot + 1)


def _ks(samples, cdf, level):
    u = cdf(samples)
    flat = np.sort(u.ravel())
    N = flat.size
    i = np.arange(1, N + 1)
    D = float(max(np.max(i / N - flat), np.max(flat - (i - 1) / N)))
    if u.shape[0] >= 20:
        n_eff = particle_n_eff(u)
        tau = N / n_eff
        pb = float(bootstrap_ks_pvalue(u, D))
    else:
        tau = integrated_time(u)
        n_eff = N / tau
        pb = float("nan")
    p = float(kolmogorov(math.sqrt(n_eff) * D))
    passed = p >= level and (math.isnan(pb) or pb >= level)
    return KSResult(D, int(N), float(n_eff), float(tau), p, passed, pb)


def stationarity_test(x, v, pair: PotentialPair, *, burn_in: int = 0, level: float = 0.01) -> StationarityReport:
    """KS tests of the pooled first-coordinate marginals against ``mu1`` and ``mu2``.

    ``x`` and ``v`` are ``(particles, times[, d])`` arrays.  Serial
    correlation is handled by an effective sample size: from the spread of
    per-particle empirical CDFs (:func:`particle_n_eff`) when there are at
    least 20 particles, else ``N / tau`` with ``tau`` the integrated
    autocorrelation time of the CDF-transformed series.  The p-value is the
    asymptotic Kolmogorov tail at ``sqrt(n_eff) D``.  It is conservative when
    the pooled empirical CDF is smoother in the level than a Brownian
    bridge, so a particle-bootstrap p-value is also computed; a marginal
    passes only when both are at least ``level``.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.ndim == 3:
        x, v = x[..., 0], v[..., 0]
    if x.ndim == 1:
        x, v = x[:, None], v[:, None]
    x, v = x[:, burn_in:], v[:, burn_in:]
    Fx, Fv = marginal_cdfs(pair)
    return StationarityReport(_ks(x, Fx, level), _ks(v, Fv, level), level)
