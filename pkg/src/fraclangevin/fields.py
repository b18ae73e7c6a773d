"""Scalar fields on R^d and phase-space test functions on R^d x R^d.

Points are arrays of shape ``(..., d)``.  A field's ``value`` maps them to
shape ``(...)``; it may also return a leading batch axis, shape
``(B, ...)``, in which case the operators in :mod:`fraclangevin.fracops`
return ``B`` results at once.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


def _fd_grad(fun, p, h=None):
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    h = 1e-5 * (1.0 + np.linalg.norm(p, axis=-1, keepdims=True)) if h is None else h
    g = []
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        g.append((fun(p + h * e) - fun(p - h * e)) / (2 * h[..., 0]))
    return np.stack(g, axis=-1)


@dataclass(frozen=True)
class Field:
    """A scalar field with optional derivatives and tail metadata.

    Parameters
    ----------
    value : callable
        ``f(v)`` for ``v`` of shape ``(..., d)``.
    grad, hess : callable, optional
        Gradient ``(..., d)`` and Hessian ``(..., d, d)``.
    decay : float or None
        ``f(v) - f_inf = O(|v|**-decay)`` at infinity.  ``None`` means
        faster than any power; ``0.0`` means merely bounded.
    growth : float
        Polynomial growth exponent (``|f| <= C(1+|v|)**growth``).
    features : tuple of arrays
        Points near which ``f`` varies on the unit scale.
    support : tuple, optional
        ``(lo, hi)`` for fields supported in an interval (1-d) or
        ``(0, radius)`` for a ball.
    """

    value: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    decay: Optional[float] = 0.0
    growth: float = 0.0
    features: tuple = ()
    support: Optional[tuple] = None

    def __call__(self, v):
        return self.value(np.asarray(v, dtype=float))

    def gradient(self, v):
        v = np.asarray(v, dtype=float)
        if self.grad is not None:
            return self.grad(v)
        return _fd_grad(self.value, v)

    def feature_radii(self, v) -> list:
        v = np.asarray(v, dtype=float)
        return [float(np.linalg.norm(v - np.asarray(p, dtype=float))) for p in self.features]

    def scaled(self, c: float) -> "Field":
        """Return ``c * f``."""
        return Field(
            value=lambda v: c * self.value(v),
            grad=None if self.grad is None else (lambda v: c * self.grad(v)),
            hess=None if self.hess is None else (lambda v: c * self.hess(v)),
            decay=self.decay, growth=self.growth, features=self.features,
            support=self.support)

    def times(self, other: "Field") -> "Field":
        """Pointwise product; metadata is combined conservatively."""
        def grad(v):
            return (self.gradient(v) * other(v)[..., None]
                    + self(v)[..., None] * other.gradient(v))

        decay = _sum_decay(self.decay, other.decay)
        support = self.support if self.support is not None else other.support
        return Field(lambda v: self.value(v) * other.value(v), grad=grad,
                     decay=decay, growth=self.growth + other.growth,
                     features=tuple(self.features) + tuple(other.features),
                     support=support)

    @staticmethod
    def on_line(f, df=None, d2f=None, **meta) -> "Field":
        """Lift scalar functions of one variable to a 1-d field."""
        return Field(
            value=lambda v: f(v[..., 0]),
            grad=None if df is None else (lambda v: df(v[..., 0])[..., None]),
            hess=None if d2f is None else (lambda v: d2f(v[..., 0])[..., None, None]),
            **meta)

    @staticmethod
    def constant(c: float, d: int = 1) -> "Field":
        return Field(lambda v: np.full(np.shape(v)[:-1], float(c)),
                     grad=lambda v: np.zeros(np.shape(v)),
                     hess=lambda v: np.zeros(np.shape(v) + (np.shape(v)[-1],)),
                     decay=0.0)


def _sum_decay(a, b):
    if a is None or b is None:
        return None
    return a + b


@dataclass(frozen=True)
class TestFunction:
    """A function ``f(x, v)`` on phase space with derivative evaluators.

    All callables take ``x`` and ``v`` of shape ``(..., d)`` with
    broadcasting.  Missing derivatives fall back to central differences
    with step ``1e-5*(1+|p|)``.
    """

    __test__ = False  # not a pytest class

    value: Callable
    grad_x: Optional[Callable] = None
    grad_v: Optional[Callable] = None
    hess_x: Optional[Callable] = None
    hess_v: Optional[Callable] = None
    decay_v: Optional[float] = 0.0
    growth_x: float = 0.0
    growth_v: float = 0.0
    features_v: tuple = ()
    support_v: Optional[tuple] = None
    name: str = "f"

    def __call__(self, x, v):
        return self.value(np.asarray(x, dtype=float), np.asarray(v, dtype=float))

    def gx(self, x, v):
        x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
        if self.grad_x is not None:
            return self.grad_x(x, v)
        return _fd_grad(lambda y: self.value(y, v), x)

    def gv(self, x, v):
        x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
        if self.grad_v is not None:
            return self.grad_v(x, v)
        return _fd_grad(lambda w: self.value(x, w), v)

    def hx(self, x, v):
        x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
        if self.hess_x is not None:
            return self.hess_x(x, v)
        return fd_hessian(lambda y: self.gx(y, v), x)

    def velocity_field(self, x_nodes) -> Field:
        """Batched velocity field ``v -> f(x_i, v)`` over the rows of ``x_nodes``.

        The returned field's ``value`` has a leading axis of length
        ``len(x_nodes)``.
        """
        X = np.asarray(x_nodes, dtype=float)
        B, d = X.shape

        def bx(v):
            return X.reshape((B,) + (1,) * (v.ndim - 1) + (d,))

        def value(v):
            return np.broadcast_to(self.value(bx(v), v), (B,) + v.shape[:-1])

        def grad(v):
            return np.broadcast_to(self.gv(bx(v), v), (B,) + v.shape)

        return Field(value, grad=grad, decay=self.decay_v, growth=self.growth_v,
                     features=self.features_v, support=self.support_v)

    @staticmethod
    def of_v(f: Field, name: str = "f") -> "TestFunction":
        """Velocity-only test function from a :class:`Field`."""
        return TestFunction(
            value=lambda x, v: np.broadcast_to(
                f.value(v), np.broadcast_shapes(x.shape, v.shape)[:-1]),
            grad_x=lambda x, v: np.zeros(np.broadcast_shapes(x.shape, v.shape)),
            grad_v=lambda x, v: np.broadcast_to(
                f.gradient(v), np.broadcast_shapes(x.shape, v.shape)),
            decay_v=f.decay, growth_v=f.growth, features_v=f.features,
            support_v=f.support, name=name)


def fd_gradient(fun, p):
    """Central-difference gradient with step ``1e-5*(1+|p|)``."""
    return _fd_grad(fun, p)


def fd_hessian(grad, p):
    """Central-difference Hessian from a gradient evaluator."""
    p = np.asarray(p, dtype=float)
    return np.stack([_fd_grad(lambda y, i=i: grad(y)[..., i], p)
                     for i in range(p.shape[-1])], axis=-2)
