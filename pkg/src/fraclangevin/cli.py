"""Command-line entry point.

Every run validates a :class:`~fraclangevin.config.RunConfig` (JSON file
plus flag overrides, flags win), writes its outputs under ``--out`` and a
``manifest.json`` echoing the config, prints a one-line summary and exits
with 0 (success), 1 (validation error), 2 (numerical failure) or
3 (a statistical or tolerance check failed).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
import traceback
from pathlib import Path

import numpy as np
import pydantic

from . import __version__
from .config import COMMANDS, RunConfig, deep_update, load_config
from .errors import NumericalError, StatisticalTestError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_STATISTICAL = 0, 1, 2, 3

log = logging.getLogger("fraclangevin")

# flag dest -> config path
_MODEL_FLAGS = {"d": ("model", "d"), "alpha": ("model", "alpha"), "beta": ("model", "phi_params", "beta"),
                "k": ("model", "u_params", "k"), "u_family": ("model", "u_family")}
_FLAG_PATHS = {
    **_MODEL_FLAGS,
    "op": ("args", "op"), "order": ("args", "order"), "points": ("args", "points"),
    "x": ("args", "x"), "method": ("args", "method"), "n_paths": ("args", "n_paths"),
    "fk_dt": ("args", "fk_dt"), "grid_half_width": ("args", "grid_half_width"),
    "grid_nodes": ("args", "grid_nodes"), "boundary": ("args", "boundary"),
    "budget": ("args", "budget"), "gap_tol": ("args", "gap_tol"), "input": ("args", "input"),
    "observable": ("args", "observable"),
    "alpha1": ("dms", "alpha1"), "alpha2": ("dms", "alpha2"), "alpha3": ("dms", "alpha3"),
    "lam": ("dms", "lam"), "optimize": ("dms", "optimize"), "n_models": ("dms", "n_models"),
    "n_max": ("dms", "n_max"), "t_max": ("dms", "t_max"),
    "n_particles": ("simulation", "n_particles"), "dt": ("simulation", "dt"),
    "t_end": ("simulation", "t_end"), "stride": ("simulation", "stride"),
    "initial": ("simulation", "initial"), "backend": ("simulation", "backend"),
    "seed": ("seed",), "out": ("out",), "workers": ("workers",),
}


class _Result:
    def __init__(self, summary, payload, code=EXIT_OK, outputs=()):
        self.summary, self.payload, self.code, self.outputs = summary, payload, code, list(outputs)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, data) -> Path:
    path.write_text(json.dumps(_jsonable(data), indent=2))
    return path


# ---------------------------------------------------------------- commands
def cmd_constants(cfg: RunConfig, out: Path) -> _Result:
    from .fracops import frac_constant, riesz_constant, unit_ball_volume
    from .model import validate_model

    d, alpha = cfg.model.d, cfg.model.alpha
    if not 0 < alpha < 2 or d < 1:
        raise ValidationError("need d >= 1 and 0 < alpha < 2")
    order = 2.0 - alpha if cfg.args.order is None else cfg.args.order
    data = {"d": d, "alpha": alpha, "c_frac": frac_constant(d, alpha),
            "omega_d": unit_ball_volume(d), "riesz_order": order,
            "c_riesz": riesz_constant(d, order) if 0 < order < d else None}
    try:
        validate_model(d, alpha)
        data["model_admissible"] = True
    except ValidationError:
        data["model_admissible"] = False
    p = _write_json(out / "constants.json", data)
    cr = "n/a" if data["c_riesz"] is None else f"{data['c_riesz']:.10g}"
    return _Result(f"c_{{d,alpha}}={data['c_frac']:.10f} C_riesz={cr} omega_d={data['omega_d']:.10g}",
                   data, outputs=[p])


def _gaussian_reference(op, d, s, r):
    from scipy.special import gamma, hyp1f1

    # (-Delta)^{s/2} exp(-|v|^2), with s < 0 for Riesz potentials
    return 2.0**s * gamma((d + s) / 2) / gamma(d / 2) * hyp1f1((d + s) / 2, d / 2, -r * r)


def cmd_fracop(cfg: RunConfig, out: Path) -> _Result:
    from .fields import Field
    from .fracops import frac_laplacian, riesz_potential

    d, a = cfg.model.d, cfg.args
    g = Field(lambda v: np.exp(-np.sum(v * v, axis=-1)),
              grad=lambda v: -2 * v * np.exp(-np.sum(v * v, axis=-1))[..., None], decay=None,
              features=(np.zeros(d),))
    quad = cfg.quadrature.build()
    rows = []
    for r in a.points:
        v = np.zeros(d)
        v[0] = r
        if a.op == "frac-laplacian":
            alpha = cfg.model.alpha
            if not 0 < alpha < 2:
                raise ValidationError("alpha must lie in (0, 2)")
            val, s = float(frac_laplacian(g, v, alpha, quad)), alpha
        else:
            order = a.order if a.order is not None else 2.0 - cfg.model.alpha
            if not 0 < order < d:
                raise ValidationError(f"Riesz order must lie in (0, d), got {order}")
            val, s = float(riesz_potential(g, v, order, quad)), -order
        rows.append((r, val, float(_gaussian_reference(a.op, d, s, abs(r)))))
    p = out / "fracop.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v1", "value", "gaussian_reference"])
        w.writerows(rows)
    rel = max(abs(v - ref) / abs(ref) for _, v, ref in rows)
    return _Result(f"{a.op} of exp(-|v|^2) at {len(rows)} points; max rel. deviation {rel:.2e}",
                   {"rows": rows, "max_rel_deviation": rel}, outputs=[p])


def cmd_drift_profile(cfg: RunConfig, out: Path) -> _Result:
    from .fracops import build_drift_profile

    pair = cfg.model.build()
    prof = build_drift_profile(pair, quad=cfg.quadrature.build())
    p = out / "profile.csv"
    prof.to_csv(p)
    data = {"validity_radius": prof.validity_radius, "held_out_error": prof.held_out_error,
            "n_radii": int(prof.radii.size)}
    return _Result(f"drift profile on {prof.radii.size} radii up to {prof.validity_radius:g}; "
                   f"held-out rel. error {prof.held_out_error:.2e}", data, outputs=[p])


def cmd_check_invariance(cfg: RunConfig, out: Path) -> _Result:
    from .generator import invariance_residual
    from .suites import invariance_suite

    pair = cfg.model.build()
    if pair.d != 1:
        raise ValidationError("the built-in invariance suite is one-dimensional")
    rows, worst, inconclusive = {}, 0.0, False
    for name, f in invariance_suite().items():
        r = invariance_residual(pair, f, quad=cfg.quadrature.build(), budget=cfg.args.budget)
        rows[name] = {"residual": r.residual, "error_budget": r.error_budget,
                      "inconclusive": r.inconclusive}
        worst = max(worst, abs(r.residual))
        inconclusive |= bool(r.inconclusive)
    p = _write_json(out / "invariance.json", rows)
    code = EXIT_OK
    if inconclusive:
        code = EXIT_NUMERICAL
    elif worst > cfg.args.budget:
        code = EXIT_STATISTICAL
    return _Result(f"max |int L f dmu| = {worst:.2e} over {len(rows)} functions "
                   f"(budget {cfg.args.budget:g})", rows, code, [p])


def cmd_carre_gap(cfg: RunConfig, out: Path) -> _Result:
    from .generator import carre_du_champ_gap
    from .suites import compact_suite

    pair = cfg.model.build()
    if pair.d != 1:
        raise ValidationError("the built-in compact suite is one-dimensional")
    rows = {}
    for name, f in compact_suite().items():
        g = carre_du_champ_gap(pair, f)
        rows[name] = {"gap": g.gap, "lhs": g.lhs, "rhs": g.rhs}
    worst = max(r["gap"] for r in rows.values())
    p = _write_json(out / "carre_gap.json", rows)
    code = EXIT_OK if worst <= cfg.args.gap_tol else EXIT_STATISTICAL
    return _Result(f"max carre-du-champ gap {worst:.2e} (tol {cfg.args.gap_tol:g})", rows, code, [p])


def cmd_c_star(cfg: RunConfig, out: Path) -> _Result:
    from .poisson import c_star

    cs = c_star(cfg.model.build(), cfg.quadrature.build())
    data = {"c_star": cs.value, "alternative": cs.alternative, "rel_diff": cs.rel_diff,
            "C_phi": cs.C_phi}
    p = _write_json(out / "c_star.json", data)
    return _Result(f"c_star={cs.value:.12g} (cross-check rel. diff {cs.rel_diff:.1e})", data,
                   outputs=[p])


def cmd_poisson(cfg: RunConfig, out: Path) -> _Result:
    from .poisson import solve_poisson_fd_1d, solve_poisson_fk

    pair, a = cfg.model.build(), cfg.args
    h = lambda x: np.asarray(x)[..., 0]  # noqa: E731  h(x) = x_1
    data, outputs, parts = {"x": a.x, "h": "x"}, [], []
    if a.method in ("fk", "both"):
        x = np.zeros(pair.d)
        x[0] = a.x
        fk = solve_poisson_fk(pair.U, h, x, n_paths=a.n_paths, dt=a.fk_dt,
                              rng=np.random.default_rng(cfg.seed))
        data["fk"] = {"estimate": fk.estimate, "stderr": fk.stderr, "n_paths": fk.n_paths,
                      "dt": fk.dt}
        parts.append(f"FK {fk.estimate:.5f} +- {fk.stderr:.5f}")
    if a.method in ("fd", "both"):
        if pair.d != 1:
            raise ValidationError("the finite-difference solver is one-dimensional")
        grid = np.linspace(-a.grid_half_width, a.grid_half_width, a.grid_nodes)
        sol = solve_poisson_fd_1d(pair.U, h, grid, a.boundary)
        p = out / "poisson_fd.csv"
        np.savetxt(p, np.column_stack([sol.grid, sol.f]), delimiter=",", header="x,f",
                   comments="", fmt="%.17g")
        outputs.append(p)
        data["fd"] = {"value": float(sol(a.x)), "condition": sol.condition,
                      "residual": sol.residual, "boundary": sol.boundary}
        parts.append(f"FD {float(sol(a.x)):.8f}")
    outputs.append(_write_json(out / "poisson.json", data))
    return _Result(f"f_h({a.x:g}): " + ", ".join(parts), data, outputs=outputs)


def cmd_poincare(cfg: RunConfig, out: Path) -> _Result:
    from .poincare import poincare_mu1_1d, poincare_mu2_nonlocal_1d

    pair = cfg.model.build()
    if pair.d != 1:
        raise ValidationError("Poincare estimators are one-dimensional")
    s = 1.0 / math.sqrt(getattr(pair.U, "k", 1.0))
    grid = np.linspace(-10 * s, 10 * s, 2001)
    c1 = poincare_mu1_1d(pair.U, grid)
    c2 = poincare_mu2_nonlocal_1d(pair)
    data = {"c1": c1.constant, "c2": c2.constant, "c2_truncation_sensitive": c2.truncation_sensitive,
            "c2_small_box": c2.coarse_constant, "c2_box": c2.box}
    p = _write_json(out / "poincare.json", data)
    return _Result(f"c1={c1.constant:.6g} c2={c2.constant:.6g}", data, outputs=[p])


def cmd_dms_certify(cfg: RunConfig, out: Path) -> _Result:
    from . import dms

    b = cfg.dms
    rng = np.random.default_rng(cfg.seed)
    t_grid = np.linspace(0.0, b.t_max, b.n_times)
    reports, table = [], []
    violations = 0
    for i in range(b.n_models):
        seed = cfg.seed + i
        n = int(rng.integers(2, b.n_max + 1))
        k = int(rng.integers(1, n // 2 + 1))
        m = dms.build_matrix_model(n, k, seed=seed)
        a = dms.estimate_alphas(m, b.lam)
        if b.optimize:
            lam, _ = dms.optimize_lambda(*a, (b.lam_min, b.lam_max))
            a = dms.estimate_alphas(m, lam)
        else:
            lam = b.lam
        rates = dms.rate_bound(*a, lam)
        F = rng.standard_normal((b.n_vectors, n))
        rep = dms.verify_decay(m, rates, t_grid, F, slack=b.slack)
        ent = dms.entropy_equivalence_check(m, lam, rates.eps0, rng.standard_normal((b.n_entropy_vectors, n)))
        violations += (not rep.passed) + (not ent.passed)
        reports.append({"seed": seed, "n": n, "k": k, "alphas": list(a), "lambda": lam,
                        "rates": rates.to_dict(), "max_violation": rep.max_violation,
                        "spectral_rate": rep.spectral_rate,
                        "expm_eig_discrepancy": rep.expm_eig_discrepancy,
                        "entropy_equivalence": ent.passed, "passed": rep.passed and ent.passed})
        table += [(seed,) + row for row in rep.table]
    p = out / "dms_table.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "t", "max_norm_ratio", "bound"])
        w.writerows(table)
    data = {"models": reports, "t_grid": t_grid, "violations": violations}
    pj = _write_json(out / "dms_certify.json", data)
    code = EXIT_OK if violations == 0 else EXIT_STATISTICAL
    return _Result(f"{b.n_models} matrix models certified, {violations} violations", data, code, [p, pj])


def cmd_rate(cfg: RunConfig, out: Path) -> _Result:
    from . import dms

    b = cfg.dms
    if b.optimize:
        lam, r = dms.optimize_lambda(b.alpha1, b.alpha2, b.alpha3, (b.lam_min, b.lam_max))
    else:
        r = dms.rate_bound(b.alpha1, b.alpha2, b.alpha3, b.lam)
    p = _write_json(out / "rate.json", r.to_dict())
    return _Result(f"eps0={r.eps0:.6g} lambda0={r.lambda0:.6g} C={r.bigC:.4f} (lambda={r.lam:.6g})",
                   r.to_dict(), outputs=[p])


def _ensemble_config(cfg: RunConfig):
    from .simulate import EnsembleConfig

    s = cfg.simulation
    return EnsembleConfig(n_particles=s.n_particles, dt=s.dt, t_end=s.t_end, stride=s.stride,
                          initial=s.initial, x0=tuple(s.x0), v0=tuple(s.v0),
                          observables=tuple(s.observables), seed=cfg.seed,
                          burn_in_fraction=s.burn_in_fraction, block_size=s.block_size,
                          backend=s.backend)


def cmd_simulate(cfg: RunConfig, out: Path) -> _Result:
    from .simulate import run_ensemble, stationarity_test

    pair = cfg.model.build()
    ec = _ensemble_config(cfg)
    res = run_ensemble(ec, pair, workers=cfg.workers)
    outputs = [out / "statistics.csv"]
    res.write_statistics_csv(outputs[0])
    if cfg.simulation.write_trajectories:
        outputs.append(out / "trajectories.csv")
        res.write_trajectories_csv(outputs[1])
    data = {"run": res.manifest}
    code = EXIT_OK
    summary = f"{ec.n_particles} particles to t={ec.t_end:g} in {res.wall_time:.1f}s ({res.backend})"
    if ec.initial == "stationary":
        st = stationarity_test(res.x, res.v, pair, burn_in=res.burn_in_index,
                               level=cfg.simulation.ks_level)
        data["stationarity"] = st.to_dict()
        summary += f"; KS p(x)={st.x.pvalue:.3f} p(v)={st.v.pvalue:.3f}"
        if not st.passed:
            code = EXIT_STATISTICAL
    outputs.append(_write_json(out / "simulation.json", data))
    return _Result(summary, data, code, outputs)


def _read_trajectories(path, observable):
    from .simulate import OBSERVABLES

    if observable not in OBSERVABLES:
        raise ValidationError(f"unknown observable {observable!r}")
    path = Path(path)
    if path.is_dir():
        path = path / "trajectories.csv"
    if not path.is_file():
        raise ValidationError(f"no trajectory file at {path}")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    pid = data[:, header.index("particle")].astype(int)
    n = int(pid.max()) + 1
    T = data.shape[0] // n
    if n * T != data.shape[0]:
        raise ValidationError("trajectory file is not a full particle x time table")
    t = data[:T, header.index("t")]
    xs = [i for i, h in enumerate(header) if h.startswith("x") and h[1:].isdigit()]
    vs = [i for i, h in enumerate(header) if h.startswith("v") and h[1:].isdigit()]
    X = data[:, xs].reshape(n, T, len(xs))
    V = data[:, vs].reshape(n, T, len(vs))
    return t, OBSERVABLES[observable](X, V)


def cmd_decay_fit(cfg: RunConfig, out: Path) -> _Result:
    from .dms import sde_rates
    from .simulate import OBSERVABLES, autocov_fit, run_ensemble

    pair = cfg.model.build()
    obs = cfg.args.observable
    if cfg.args.input:
        t, series = _read_trajectories(cfg.args.input, obs)
    else:
        if obs not in OBSERVABLES:
            raise ValidationError(f"unknown observable {obs!r}")
        res = run_ensemble(_ensemble_config(cfg), pair, workers=cfg.workers)
        t, series = res.times, OBSERVABLES[obs](res.x, res.v)
    if t.size < 3:
        raise ValidationError("need at least 3 recorded times")
    burn = int(math.ceil(cfg.simulation.burn_in_fraction * (t.size - 1)))
    fit = autocov_fit(series[:, burn:], float(t[1] - t[0]), rng=np.random.default_rng(cfg.seed))
    data = {"observable": obs, "fit": fit.to_dict(),
            "lags": fit.lags[: fit.window + 1], "acov": fit.acov[: fit.window + 1]}
    try:
        if pair.d == 1:
            th = sde_rates(pair, alpha3=cfg.dms.alpha3)
            data["theory"] = th.to_dict()
    except (ValidationError, NumericalError) as exc:
        data["theory_error"] = str(exc)
    p = _write_json(out / "decay_fit.json", data)
    ok = not fit.degenerate and fit.ci[0] > 0
    half = data.get("theory", {}).get("half_lambda0")
    summary = (f"fitted rate {fit.rate:.4g} (95% CI {fit.ci[0]:.4g}..{fit.ci[1]:.4g})"
               + (f"; lambda0/2 = {half:.4g} (alpha3={cfg.dms.alpha3:g}, informational)"
                  if half is not None else ""))
    if fit.degenerate:
        summary = fit.message
    return _Result(summary, data, EXIT_OK if ok else EXIT_STATISTICAL, [p])


HANDLERS = {
    "constants": cmd_constants, "fracop": cmd_fracop, "drift-profile": cmd_drift_profile,
    "check-invariance": cmd_check_invariance, "carre-gap": cmd_carre_gap, "c-star": cmd_c_star,
    "poisson": cmd_poisson, "poincare": cmd_poincare, "dms-certify": cmd_dms_certify,
    "rate": cmd_rate, "simulate": cmd_simulate, "decay-fit": cmd_decay_fit,
}


# ---------------------------------------------------------------- parsing
def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run config; flags override its keys")
    common.add_argument("--seed", type=int, help="64-bit unsigned seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="maximum worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--d", type=int)
    model.add_argument("--alpha", type=float)
    model.add_argument("--beta", type=float)
    model.add_argument("--k", type=float, help="stiffness of the quadratic confinement")
    model.add_argument("--u-family", dest="u_family", choices=["quadratic", "quadratic_plus_bump"])

    p = argparse.ArgumentParser(prog="fraclangevin", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    par = [common, model]
    sp = sub.add_parser("constants", parents=par, help="kernel constants")
    sp.add_argument("--order", type=float, help="Riesz order (default 2 - alpha)")
    sp = sub.add_parser("fracop", parents=par, help="apply an operator to exp(-|v|^2)")
    sp.add_argument("--op", choices=["frac-laplacian", "riesz-potential"])
    sp.add_argument("--order", type=float)
    sp.add_argument("--points", type=float, nargs="+")
    sub.add_parser("drift-profile", parents=par, help="tabulate the friction force")
    sp = sub.add_parser("check-invariance", parents=par, help="weak-form invariance residuals")
    sp.add_argument("--budget", type=float)
    sp = sub.add_parser("carre-gap", parents=par, help="carre-du-champ identity gaps")
    sp.add_argument("--gap-tol", dest="gap_tol", type=float)
    sub.add_parser("c-star", parents=par, help="constant of the averaged transport")
    sp = sub.add_parser("poisson", parents=par, help="solve (I - L_OD) f = x")
    sp.add_argument("--x", type=float)
    sp.add_argument("--method", choices=["fk", "fd", "both"])
    sp.add_argument("--n-paths", dest="n_paths", type=int)
    sp.add_argument("--fk-dt", dest="fk_dt", type=float)
    sp.add_argument("--grid-half-width", dest="grid_half_width", type=float)
    sp.add_argument("--grid-nodes", dest="grid_nodes", type=int)
    sp.add_argument("--boundary", choices=["reflecting", "far-field-decay"])
    sub.add_parser("poincare", parents=par, help="Poincare constants c1, c2")
    sp = sub.add_parser("dms-certify", parents=par, help="certify decay on random matrix models")
    sp.add_argument("--n-models", dest="n_models", type=int)
    sp.add_argument("--n-max", dest="n_max", type=int)
    sp.add_argument("--t-max", dest="t_max", type=float)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--optimize", action="store_true", default=None)
    sp = sub.add_parser("rate", parents=[common], help="closed-form decay rate")
    for name in ("alpha1", "alpha2", "alpha3"):
        sp.add_argument(f"--{name}", type=float)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--optimize", action="store_true", default=None)
    for name in ("simulate", "decay-fit"):
        sp = sub.add_parser(name, parents=par, help="Euler-Maruyama ensemble" if name == "simulate"
                            else "autocovariance decay fit")
        sp.add_argument("--n-particles", dest="n_particles", type=int)
        sp.add_argument("--dt", type=float)
        sp.add_argument("--t-end", dest="t_end", type=float)
        sp.add_argument("--stride", type=int)
        sp.add_argument("--initial", choices=["stationary", "point", "perturbed"])
        sp.add_argument("--backend", choices=["cython", "python"])
        if name == "decay-fit":
            sp.add_argument("--input", help="simulate output directory or its trajectories.csv")
            sp.add_argument("--observable")
            sp.add_argument("--alpha3", type=float, help="assumed boundedness constant")
    return p


def build_config(ns: argparse.Namespace) -> RunConfig:
    raw = load_config(ns.config) if getattr(ns, "config", None) else {}
    raw = deep_update(raw, {"command": ns.command})
    for dest, path in _FLAG_PATHS.items():
        val = getattr(ns, dest, None)
        if val is None:
            continue
        patch = val
        for key in reversed(path):
            patch = {key: patch}
        raw = deep_update(raw, patch)
    return RunConfig.model_validate(raw)


def run(argv=None) -> int:
    """Parse ``argv``, run the command and return its exit code."""
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_VALIDATION if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    manifest = {"command": ns.command, "version": __version__, "argv": list(argv or sys.argv[1:])}
    out = Path(ns.out or "out")
    code = EXIT_OK
    try:
        cfg = build_config(ns)
        out = Path(cfg.out)
        manifest["config"] = cfg.model_dump(mode="json")
        manifest["seed"] = cfg.seed
        out.mkdir(parents=True, exist_ok=True)
        res = HANDLERS[cfg.command](cfg, out)
        code = res.code
        manifest.update(status="ok" if code == EXIT_OK else "check-failed", summary=res.summary,
                        result=res.payload, outputs=[str(o) for o in res.outputs])
        print(res.summary)
    except (ValidationError, pydantic.ValidationError, FileNotFoundError, json.JSONDecodeError) as exc:
        code = EXIT_VALIDATION
        manifest.update(status="validation-error", error=str(exc))
        print(f"validation error: {exc}", file=sys.stderr)
    except NumericalError as exc:
        code = EXIT_NUMERICAL
        manifest.update(status="numerical-error", error=str(exc))
        print(f"numerical error: {exc}", file=sys.stderr)
    except StatisticalTestError as exc:
        code = EXIT_STATISTICAL
        manifest.update(status="statistical-failure", error=str(exc))
        print(f"statistical test failed: {exc}", file=sys.stderr)
    except Exception as exc:  # unexpected failures are reported as numerical
        code = EXIT_NUMERICAL
        manifest.update(status="internal-error", error=repr(exc), traceback=traceback.format_exc())
        print(f"internal error: {exc!r}", file=sys.stderr)
    manifest["exit_code"] = code
    manifest["wall_time"] = time.perf_counter() - t0
    try:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "manifest.json", manifest)
    except OSError as exc:
        print(f"could not write manifest: {exc}", file=sys.stderr)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
