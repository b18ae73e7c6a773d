"""Rotationally invariant alpha-stable increments.

The convention is ``E exp(i <u, L_t>) = exp(-t |u|^alpha)`` so the
generator of ``L`` is ``-(-Delta)^{alpha/2}``.  In one dimension samples
come from the Chambers-Mallows-Stuck formula; for ``d >= 2`` a Gaussian
vector is scaled by a positive ``(alpha/2)``-stable subordinator drawn with
Kanter's representation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class StableParams:
    alpha: float
    dim: int = 1

    def __post_init__(self):
        if not (0.0 < float(self.alpha) < 2.0):
            raise ValidationError(f"alpha must lie in (0, 2), got {self.alpha}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"dim must be a positive integer, got {self.dim}")


def symmetric_stable_1d(alpha: float, size, rng: np.random.Generator) -> np.ndarray:
    """Standard symmetric stable draws with CF ``exp(-|u|^alpha)``.

    Chambers-Mallows-Stuck with ``beta = 0``; at ``alpha = 1`` it reduces to
    ``tan(V)``, the standard Cauchy law.
    """
    V = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    W = rng.exponential(1.0, size)
    if alpha == 1.0:
        return np.tan(V)
    return (np.sin(alpha * V) / np.cos(V) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * V) / W) ** ((1.0 - alpha) / alpha))


def positive_stable(a: float, size, rng: np.random.Generator) -> np.ndarray:
    """Positive ``a``-stable draws (``0 < a < 1``) with ``E exp(-s A) = exp(-s^a)``.

    Kanter's representation ``A = (K(U)/W)^{(1-a)/a}`` with ``U`` uniform on
    ``(0, pi)`` and ``W`` standard exponential.
    """
    U = rng.uniform(0.0, math.pi, size)
    W = rng.exponential(1.0, size)
    # log form; the powers 1/(1-a) under- and overflow as a -> 1
    r = (1.0 - a) / a
    logA = (np.log(np.sin(a * U)) + r * np.log(np.sin((1.0 - a) * U))
            - np.log(np.sin(U)) / a - r * np.log(W))
    return np.exp(logA)


def sample_increment(params: StableParams, dt: float, rng: np.random.Generator, size=None) -> np.ndarray:
    """Draw ``L_{t+dt} - L_t``.

    Parameters
    ----------
    size : int or tuple, optional
        Leading batch shape; the result has shape ``(*size, dim)``.

    Notes
    -----
    For ``dim >= 2``, ``sqrt(A) G`` with ``G ~ N(0, 2 I)`` and ``A`` positive
    ``(alpha/2)``-stable has CF ``E exp(-|u|^2 A) = exp(-|u|^alpha)``.
    """
    if not dt > 0:
        raise ValidationError("dt must be positive")
    batch = () if size is None else ((size,) if np.isscalar(size) else tuple(size))
    alpha, d = float(params.alpha), int(params.dim)
    scale = dt ** (1.0 / alpha)
    if d == 1:
        return scale * symmetric_stable_1d(alpha, batch + (1,), rng)
    A = positive_stable(0.5 * alpha, batch, rng)
    G = rng.standard_normal(batch + (d,))
    return scale * math.sqrt(2.0) * np.sqrt(A)[..., None] * G


def empirical_cf(samples, u_grid) -> np.ndarray:
    """``mean(cos(u x))`` for scalar samples, real since the law is symmetric."""
    x = np.asarray(samples, dtype=float).reshape(-1)
    u = np.asarray(u_grid, dtype=float).reshape(-1)
    return np.array([np.mean(np.cos(ui * x)) for ui in u])


def cf_distance(params: StableParams, n: int, u_grid, rng: np.random.Generator,
                samples: Optional[np.ndarray] = None) -> float:
    """``max_u |empirical CF - exp(-|u|^alpha)|`` over ``u_grid`` for unit time.

    The first coordinate is used when ``dim >= 2`` (its CF is the same).
    """
    if n < 10_000 and samples is None:
        raise ValidationError("cf_distance needs n >= 1e4")
    if samples is None:
        samples = sample_increment(params, 1.0, rng, n)[..., 0]
    u = np.asarray(u_grid, dtype=float).reshape(-1)
    emp = empirical_cf(samples, u)
    return float(np.max(np.abs(emp - np.exp(-np.abs(u) ** params.alpha))))
