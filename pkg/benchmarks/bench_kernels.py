"""Compare the compiled and NumPy ensemble kernels.

Usage: python3 benchmarks/bench_kernels.py [--particles 2000] [--steps 2000] [--repeat 3]
"""
import argparse
import json
import time

import numpy as np

from fraclangevin import kernels
from fraclangevin.fracops import build_drift_profile
from fraclangevin.model import standard_model
from fraclangevin.simulate import _kernel_arrays
from fraclangevin.stable_noise import StableParams, sample_increment


def bench(backend, x0, v0, noise, ka, repeat):
    advance = kernels.get_advance(backend)
    best = np.inf
    for _ in range(repeat):
        x, v = x0.copy(), v0.copy()
        alive = np.ones(x.shape[0], dtype=np.uint8)
        t = time.perf_counter()
        advance(x, v, noise, 1e-3, ka["u_kind"], ka["u_params"], ka["phi_coef"],
                ka["radii"], ka["rho"], ka["slopes"], alive)
        best = min(best, time.perf_counter() - t)
    return best, x, v


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--particles", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", help="write results to this file")
    a = ap.parse_args()

    pair = standard_model()
    ka = _kernel_arrays(pair, build_drift_profile(pair))
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal((a.particles, 1))
    v0 = rng.standard_t(1.5, (a.particles, 1)) / np.sqrt(1.5)
    noise = np.ascontiguousarray(sample_increment(StableParams(1.5), 1e-3, rng, (a.steps, a.particles)))
    work = a.particles * a.steps
    out = {"particles": a.particles, "steps": a.steps}
    states = {}
    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    for b in backends:
        t, x, v = bench(b, x0, v0, noise, ka, a.repeat)
        states[b] = (x, v)
        out[b] = {"seconds": t, "particle_steps_per_s": work / t}
        print(f"{b:>7}: {t:8.3f} s  {work / t:12.3e} particle-steps/s")
    if len(states) == 2:
        (xp, vp), (xc, vc) = states["python"], states["cython"]
        out["speedup"] = out["python"]["seconds"] / out["cython"]["seconds"]
        out["max_abs_diff"] = float(max(np.abs(xp - xc).max(), np.abs(vp - vc).max()))
        print(f"speedup {out['speedup']:.1f}x, max |python - cython| = {out['max_abs_diff']:.2e}")
    else:
        print("compiled kernel not built; only the NumPy fallback was timed")
    if a.json:
        with open(a.json, "w") as fh:
            json.dump(out, fh, indent=2)


if __name__ == "__main__":
    main()
