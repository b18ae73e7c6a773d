"""Pure NumPy reference for the ensemble Euler-Maruyama kernel.

Semantics match ``_ckernels.advance`` exactly; see :mod:`fraclangevin.kernels`.
"""
import numpy as np

U_QUADRATIC = 0
U_BUMP = 1


def hermite_eval(radii, rho, slopes, r):
    """Cubic Hermite interpolant through ``(radii, rho)`` with node ``slopes``."""
    j = np.clip(np.searchsorted(radii, r, side="right") - 1, 0, radii.size - 2)
    h = radii[j + 1] - radii[j]
    t = (r - radii[j]) / h
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * rho[j] + (t3 - 2 * t2 + t) * h * slopes[j]
            + (-2 * t3 + 3 * t2) * rho[j + 1] + (t3 - t2) * h * slopes[j + 1])


def grad_u(x, u_kind, u_params):
    k = u_params[0]
    if u_kind == U_QUADRATIC:
        return k * x
    a, w = u_params[1], u_params[2]
    y = x - u_params[3:3 + x.shape[1]]
    e = a * np.exp(-np.sum(y * y, axis=1) / (2 * w * w))
    return k * x - e[:, None] * y / (w * w)


def drift(v, radii, rho, slopes):
    r = np.sqrt(np.sum(v * v, axis=1))
    p = hermite_eval(radii, rho, slopes, r)
    safe = np.where(r > 0, r, 1.0)
    return np.where(r[:, None] > 0, (p / safe)[:, None] * v, 0.0)


def advance(x, v, noise, dt, u_kind, u_params, phi_coef, radii, rho, slopes, alive):
    """Advance ``x, v`` in place by ``noise.shape[0]`` steps.

    Returns the number of steps completed.  Stops early, before the step,
    when a live particle has ``|v|`` beyond ``radii[-1]``.  Particles whose
    state turns non-finite are frozen and their ``alive`` flag cleared.
    """
    rmax = radii[-1]
    steps = noise.shape[0]
    live = alive.astype(bool)
    for s in range(steps):
        vv = v[live]
        if vv.size and np.max(np.sum(vv * vv, axis=1)) > rmax * rmax:
            return s
        xl = x[live]
        q = 1.0 + np.sum(vv * vv, axis=1)
        gphi = (phi_coef / q)[:, None] * vv
        b = drift(vv, radii, rho, slopes)
        gu = grad_u(xl, u_kind, u_params)
        xn = xl + gphi * dt
        vn = vv + (b - gu) * dt + noise[s][live]
        ok = np.all(np.isfinite(xn), axis=1) & np.all(np.isfinite(vn), axis=1)
        idx = np.flatnonzero(live)
        x[idx[ok]] = xn[ok]
        v[idx[ok]] = vn[ok]
        if not np.all(ok):
            alive[idx[~ok]] = 0
            live[idx[~ok]] = False
    return steps
