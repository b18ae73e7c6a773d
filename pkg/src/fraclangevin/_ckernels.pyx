# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ensemble Euler-Maruyama kernel; mirrors ``_pykernels``."""
import numpy as np
from libc.math cimport sqrt, exp, isfinite

cdef enum:
    U_QUADRATIC = 0


cdef inline double _hermite(const double[::1] radii, const double[::1] rho,
                            const double[::1] slopes, double r) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = radii.shape[0] - 1, mid
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if radii[mid] <= r:
            lo = mid
        else:
            hi = mid
    cdef double h = radii[lo + 1] - radii[lo]
    cdef double t = (r - radii[lo]) / h
    cdef double t2 = t * t
    cdef double t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * rho[lo] + (t3 - 2 * t2 + t) * h * slopes[lo]
            + (-2 * t3 + 3 * t2) * rho[lo + 1] + (t3 - t2) * h * slopes[lo + 1])


cdef Py_ssize_t _advance(double[:, ::1] x, double[:, ::1] v, const double[:, :, ::1] noise,
                         double dt, int u_kind, const double[::1] u_params, double phi_coef,
                         const double[::1] radii, const double[::1] rho, const double[::1] slopes,
                         unsigned char[::1] alive, double[::1] xn, double[::1] vn) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], steps = noise.shape[0]
    cdef Py_ssize_t s, i, j
    cdef double rmax = radii[radii.shape[0] - 1]
    cdef double rmax2 = rmax * rmax
    cdef double k = u_params[0], a = u_params[1], w = u_params[2]
    cdef double r2, q, rr, p, e, y2, fac
    cdef bint ok
    for s in range(steps):
        for i in range(n):
            if alive[i]:
                r2 = 0.0
                for j in range(d):
                    r2 = r2 + v[i, j] * v[i, j]
                if r2 > rmax2:
                    return s
        for i in range(n):
            if not alive[i]:
                continue
            r2 = 0.0
            for j in range(d):
                r2 = r2 + v[i, j] * v[i, j]
            q = 1.0 + r2
            rr = sqrt(r2)
            if rr > 0:
                p = _hermite(radii, rho, slopes, rr) / rr
            else:
                p = 0.0
            e = 0.0
            if u_kind != U_QUADRATIC:
                y2 = 0.0
                for j in range(d):
                    y2 = y2 + (x[i, j] - u_params[3 + j]) * (x[i, j] - u_params[3 + j])
                e = a * exp(-y2 / (2 * w * w))
            ok = True
            for j in range(d):
                fac = k * x[i, j]
                if u_kind != U_QUADRATIC:
                    fac = fac - e * (x[i, j] - u_params[3 + j]) / (w * w)
                xn[j] = x[i, j] + (phi_coef / q) * v[i, j] * dt
                vn[j] = v[i, j] + (p * v[i, j] - fac) * dt + noise[s, i, j]
                if not (isfinite(xn[j]) and isfinite(vn[j])):
                    ok = False
            if ok:
                for j in range(d):
                    x[i, j] = xn[j]
                    v[i, j] = vn[j]
            else:
                alive[i] = 0
    return steps


def advance(double[:, ::1] x, double[:, ::1] v, const double[:, :, ::1] noise, double dt,
            int u_kind, const double[::1] u_params, double phi_coef,
            const double[::1] radii, const double[::1] rho, const double[::1] slopes,
            unsigned char[::1] alive):
    """Advance ``x, v`` in place; see ``_pykernels.advance``."""
    cdef double[::1] xn = np.empty(x.shape[1]), vn = np.empty(x.shape[1])
    cdef Py_ssize_t done
    with nogil:
        done = _advance(x, v, noise, dt, u_kind, u_params, phi_coef, radii, rho, slopes,
                        alive, xn, vn)
    return done
