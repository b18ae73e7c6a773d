"""Quadrature rules for singular radial integrals with heavy tails.

Every nonlocal operator in the package reduces to a one-dimensional radial
integral

    I = int_0^inf r**q * S(r) dr,     S(r) = O(r**m) as r -> 0,

where ``S`` is an angular average whose small-``r`` behaviour is fixed by
symmetrization and whose large-``r`` behaviour is a declared power law
``O(r**-p)``.  The rule is:

* ``[0, delta]``: Gauss-Jacobi with weight ``r**(q+m)`` applied to ``S/r**m``,
* ``[delta, R]``: Gauss-Legendre on dyadic panels, refined around feature
  radii where the integrand changes character (e.g. where ``v - r*theta``
  crosses the origin),
* ``[R, inf)``: inversion ``r = R/t`` with Gauss-Jacobi weight
  ``t**(p-q-2)`` so the power-law tail is integrated exactly to leading
  order, or a logarithmic map ``r = R*exp(tau)`` when no power law is
  declared.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import IntegrabilityError, QuadratureError, ValidationError

TAIL_RULES = ("power-law", "exponential-map")


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization parameters for principal-value and tail quadrature.

    Parameters
    ----------
    inner_split : float
        Radius ``delta`` of the near-singular Gauss-Jacobi panel.
    outer_radius : float
        Radius ``R`` where the tail map takes over.
    nodes_inner, nodes_shell, nodes_angular, nodes_tail : int
        Node counts for the inner panel, each dyadic shell panel, the
        angular rule (per half turn) and the tail panel.
    tail_rule : {"power-law", "exponential-map"}
        How to integrate beyond ``R``.
    rtol, atol : float
        Tolerance used by refinement checks.
    verify : bool
        When true, operations evaluate at this level and at
        :meth:`refined` and raise :class:`QuadratureError` on disagreement.
    """

    inner_split: float = 0.25
    outer_radius: float = 64.0
    nodes_inner: int = 24
    nodes_shell: int = 16
    nodes_angular: int = 32
    nodes_tail: int = 32
    tail_rule: str = "power-law"
    rtol: float = 1e-3
    atol: float = 1e-12
    verify: bool = False

    def __post_init__(self):
        if not (0.0 < self.inner_split < 1.0 <= self.outer_radius):
            raise ValidationError("need 0 < inner_split < 1 <= outer_radius")
        for name in ("nodes_inner", "nodes_shell", "nodes_angular", "nodes_tail"):
            if int(getattr(self, name)) < 4:
                raise ValidationError(f"{name} must be >= 4")
        if self.tail_rule not in TAIL_RULES:
            raise ValidationError(f"tail_rule must be one of {TAIL_RULES}")

    def refined(self) -> "QuadratureSpec":
        """Halve ``delta`` and double every node count."""
        return replace(
            self,
            inner_split=self.inner_split / 2,
            nodes_inner=2 * self.nodes_inner,
            nodes_shell=2 * self.nodes_shell,
            nodes_angular=2 * self.nodes_angular,
            nodes_tail=2 * self.nodes_tail,
            verify=False,
        )

    def unverified(self) -> "QuadratureSpec":
        return replace(self, verify=False)


DEFAULT_QUAD = QuadratureSpec()


@lru_cache(maxsize=256)
def _jacobi01(n: int, c: float):
    """Gauss-Jacobi rule on [0, 1] for the weight ``t**c``."""
    x, w = roots_jacobi(n, 0.0, c)
    return (1.0 + x) / 2.0, w / 2.0 ** (c + 1.0)


@lru_cache(maxsize=64)
def _legendre01(n: int):
    x, w = roots_legendre(n)
    return (1.0 + x) / 2.0, w / 2.0


def gauss_legendre(n: int, a: float, b: float):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    t, w = _legendre01(int(n))
    return a + (b - a) * t, w * (b - a)


def panel_edges(delta: float, R: float, features: Sequence[float] = ()) -> np.ndarray:
    """Dyadic breakpoints on ``[delta, R]`` graded toward each feature radius."""
    edges = [delta * 2.0**k for k in range(64) if delta * 2.0**k < R]
    edges.append(R)
    for c in features:
        if not (delta < c < R):
            continue
        edges.append(c)
        for k in range(16):
            h = delta * 2.0**k
            if h > c and c + h > R:
                break
            edges.extend((c - h, c + h))
    e = np.unique(np.asarray(edges, dtype=float))
    e = e[(e >= delta) & (e <= R)]
    # drop slivers produced by coincident breakpoints
    keep = np.concatenate([[True], np.diff(e) > 1e-9 * R])
    return e[keep]


def radial_rule_parts(q: float, m: float, quad: QuadratureSpec = DEFAULT_QUAD, *,
                      decay: Optional[float] = None, features: Sequence[float] = ()):
    """Body and tail pieces of :func:`radial_rule`.

    Returns
    -------
    r_body, w_body, r_tail, w_tail : ndarray
    R : float
        Radius where the tail rule starts.
    """
    if q + m <= -1.0:
        raise IntegrabilityError(f"inner weight r^{q + m} is not integrable")
    feats = tuple(float(abs(c)) for c in features if np.isfinite(c) and abs(c) > 0)
    R = max([quad.outer_radius] + [4.0 * c for c in feats])
    delta = quad.inner_split
    rs, ws = [], []

    t, w = _jacobi01(quad.nodes_inner, float(q + m))
    r = delta * t
    rs.append(r)
    ws.append(w * delta ** (q + m + 1.0) / r**m)

    edges = panel_edges(delta, R, feats)
    for a, b in zip(edges[:-1], edges[1:]):
        r, w = gauss_legendre(quad.nodes_shell, a, b)
        rs.append(r)
        ws.append(w * r**q)

    finite = decay is not None and np.isfinite(decay)
    if finite and decay <= q + 1.0:
        raise IntegrabilityError(f"tail r^{q}*r^-{decay} is not integrable at infinity")
    if finite and quad.tail_rule == "power-law":
        e = float(-q - 2.0 + decay)
        t, w = _jacobi01(quad.nodes_tail, e)
        rt, wt = R / t, R ** (q + 1.0) * w * t ** (-decay)
    else:
        # r = R exp(tau), tau in [0, log 1e4] on four panels
        cuts = np.linspace(0.0, np.log(1e4), 5)
        rt, wt = [], []
        for a, b in zip(cuts[:-1], cuts[1:]):
            tau, w = gauss_legendre(quad.nodes_tail, a, b)
            r = R * np.exp(tau)
            rt.append(r)
            wt.append(w * r ** (q + 1.0))
        rt, wt = np.concatenate(rt), np.concatenate(wt)
    return np.concatenate(rs), np.concatenate(ws), rt, wt, R


def radial_rule(q: float, m: float, quad: QuadratureSpec = DEFAULT_QUAD, *,
                decay: Optional[float] = None, features: Sequence[float] = ()):
    """Nodes and weights for ``int_0^inf r**q S(r) dr``.

    Parameters
    ----------
    q : float
        Power of the radial weight.
    m : float
        Order of vanishing of ``S`` at zero; the inner weight is
        ``r**(q+m)`` and must be integrable (``q + m > -1``).
    decay : float or None
        Declared exponent ``p`` with ``S(r) = O(r**-p)``; requires
        ``p > q + 1``.  ``None`` (or ``inf``) means faster than any power.
    features : sequence of float
        Radii where the integrand has structure on the unit scale.

    Returns
    -------
    r, w : ndarray
        ``sum(w * S(r))`` approximates the integral.  The weights already
        contain ``r**q``.
    """
    rb, wb, rt, wt, _ = radial_rule_parts(q, m, quad, decay=decay, features=features)
    return np.concatenate([rb, rt]), np.concatenate([wb, wt])


def radial_integral(S: Callable, q: float, m: float, quad: QuadratureSpec = DEFAULT_QUAD, *,
                    decay: Optional[float] = None, features: Sequence[float] = (),
                    S_inf=None):
    """Evaluate ``int_0^inf r**q S(r) dr``.

    ``S`` maps an array of radii of shape ``(n,)`` to ``(..., n)``.  When
    ``S`` tends to a nonzero constant ``S_inf`` (shape ``(...)``), pass it
    and declare ``decay`` for ``S - S_inf``; the constant's tail is then
    integrated in closed form, which requires ``q < -1``.
    """
    rb, wb, rt, wt, R = radial_rule_parts(q, m, quad, decay=decay, features=features)
    body = np.sum(wb * S(rb), axis=-1)
    if S_inf is None:
        return body + np.sum(wt * S(rt), axis=-1)
    if q >= -1.0:
        raise IntegrabilityError("a constant asymptote needs q < -1")
    S_inf = np.asarray(S_inf, dtype=float)
    tail = np.sum(wt * (S(rt) - S_inf[..., None]), axis=-1)
    return body + tail + S_inf * R ** (q + 1.0) / (-q - 1.0)


def sphere_rule(d: int, n: int, half: bool = False):
    """Directions and weights on the unit sphere ``S^{d-1}``.

    The weights sum to the surface measure (``2`` for ``d=1``, ``2*pi``
    for ``d=2``, ``4*pi`` for ``d=3``), or to half of it when ``half`` is
    true, in which case only one direction of each antipodal pair is kept.
    """
    if d == 1:
        if half:
            return np.array([[1.0]]), np.array([1.0])
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        k = n if half else 2 * n
        th = (np.arange(k) + 0.5) * np.pi / n
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        return dirs, np.full(k, np.pi / n)
    if d == 3:
        if half:
            z, wz = gauss_legendre(n, 0.0, 1.0)
        else:
            z, wz = gauss_legendre(2 * n, -1.0, 1.0)
        k = 2 * n
        ph = (np.arange(k) + 0.5) * 2 * np.pi / k
        s = np.sqrt(1.0 - z**2)
        dirs = np.stack([np.outer(s, np.cos(ph)), np.outer(s, np.sin(ph)),
                         np.outer(z, np.ones(k))], axis=-1).reshape(-1, 3)
        return dirs, np.outer(wz, np.full(k, 2 * np.pi / k)).ravel()
    raise ValidationError("angular rules are provided for d <= 3")


def sphere_area(d: int) -> float:
    """Surface measure of ``S^{d-1}``."""
    from math import gamma, pi

    return 2.0 * pi ** (d / 2) / gamma(d / 2)


def line_rule(quad: QuadratureSpec = DEFAULT_QUAD, *, decay: Optional[float] = None,
              features: Sequence[float] = (), support=None):
    """Rule for ``int_R F(v) dv`` (1-d).

    With ``support=(lo, hi)`` a composite Gauss-Legendre rule on the
    interval is returned; otherwise a symmetric radial rule about the
    origin with the declared tail ``decay``.
    """
    if support is not None:
        lo, hi = map(float, support)
        n_pan = max(8, int(np.ceil((hi - lo) / quad.inner_split)))
        edges = np.linspace(lo, hi, n_pan + 1)
        extra = [c for c in features if lo < c < hi]
        edges = np.unique(np.concatenate([edges, extra]))
        xs, ws = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            x, w = gauss_legendre(quad.nodes_shell, a, b)
            xs.append(x)
            ws.append(w)
        return np.concatenate(xs)[:, None], np.concatenate(ws)
    r, w = radial_rule(0.0, 0.0, quad, decay=decay, features=features)
    return np.concatenate([r, -r])[:, None], np.concatenate([w, w])


def space_rule(d: int, quad: QuadratureSpec = DEFAULT_QUAD, *,
               decay: Optional[float] = None, features: Sequence[float] = (),
               support=None):
    """Rule for ``int_{R^d} F(v) dv``.

    ``decay`` is the power-law exponent of ``F`` itself.  For ``d >= 2``
    a polar product rule is used and ``support`` is a radius.
    """
    if d == 1:
        return line_rule(quad, decay=decay, features=features, support=support)
    dirs, wd = sphere_rule(d, quad.nodes_angular)
    if support is not None:
        r, w = gauss_legendre(quad.nodes_shell * 4, 0.0, float(support))
        w = w * r ** (d - 1)
    else:
        r, w = radial_rule(d - 1.0, 0.0, quad, decay=decay, features=features)
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, d)
    return pts, (w[:, None] * wd[None, :]).ravel()


def verified(fn: Callable[[QuadratureSpec], np.ndarray], quad: QuadratureSpec, what: str = "integral"):
    """Evaluate ``fn(quad)``; with ``quad.verify`` also at the refined level.

    Raises
    ------
    QuadratureError
        If the two levels differ by more than ``rtol*|fine| + atol``.
    """
    if not quad.verify:
        return fn(quad)
    coarse = np.asarray(fn(quad.unverified()))
    fine = np.asarray(fn(quad.refined()))
    gap = np.max(np.abs(coarse - fine) - (quad.rtol * np.abs(fine) + quad.atol))
    if gap > 0:
        raise QuadratureError(
            f"{what}: refinement changed the estimate from {coarse} to {fine}",
            coarse=coarse, fine=fine)
    return fine
