"""Named test-function suites used by the CLI checks and the test-suite.

All suites are one-dimensional.
"""
from __future__ import annotations

import numpy as np

from .fields import Field, TestFunction


def _bump(c: float, a: float):
    """``exp(-1/(1-s^2))`` with ``s = (v-c)/a`` on ``|s| < 1``, and its derivative."""
    def f(v):
        s = (np.asarray(v, dtype=float) - c) / a
        inside = np.abs(s) < 1
        out = np.zeros_like(s)
        out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
        return out

    def df(v):
        s = (np.asarray(v, dtype=float) - c) / a
        inside = np.abs(s) < 1
        out = np.zeros_like(s)
        si = s[inside]
        out[inside] = np.exp(-1.0 / (1.0 - si**2)) * (-2.0 * si / (1.0 - si**2) ** 2) / a
        return out

    return f, df


def bump_field(c: float = 0.0, a: float = 2.0) -> Field:
    f, df = _bump(c, a)
    return Field.on_line(f, df, decay=None, features=(np.array([c]),), support=(c - a, c + a))


def v_bump_field(c: float = 0.0, a: float = 2.0) -> Field:
    f, df = _bump(c, a)
    return Field.on_line(lambda v: v * f(v), lambda v: f(v) + v * df(v), decay=None,
                         features=(np.array([c]),), support=(c - a, c + a))


def compact_suite():
    """Three compactly supported velocity fields: ``{name: Field}``."""
    return {
        "bump[-2,2]": bump_field(0.0, 2.0),
        "bump[-1,2]": bump_field(0.5, 1.5),
        "v*bump[-2,2]": v_bump_field(0.0, 2.0),
    }


def _sech2(v):
    e = np.exp(-2.0 * np.abs(v))
    return 4.0 * e / (1.0 + e) ** 2


def _tf(name, value, gx, gv, decay_v, growth_x=0.0):
    return TestFunction(value=value, grad_x=gx, grad_v=gv, decay_v=decay_v, growth_x=growth_x,
                        features_v=(np.zeros(1),), name=name)


def invariance_suite():
    """Five phase-space test functions ``{name: TestFunction}``.

    The x-dependence exercises the transport part and the non-odd
    v-dependence the velocity part.
    """
    g = lambda v: np.exp(-v[..., :1] ** 2)  # noqa: E731
    suite = [
        _tf("sin(x)exp(-v^2)",
            lambda x, v: np.sin(x[..., 0]) * np.exp(-v[..., 0] ** 2),
            lambda x, v: np.cos(x) * g(v),
            lambda x, v: np.sin(x) * (-2 * v) * g(v), None),
        _tf("cos(x)exp(-v^2)",
            lambda x, v: np.cos(x[..., 0]) * np.exp(-v[..., 0] ** 2),
            lambda x, v: -np.sin(x) * g(v),
            lambda x, v: np.cos(x) * (-2 * v) * g(v), None),
        _tf("x v/(1+v^2)",
            lambda x, v: x[..., 0] * v[..., 0] / (1 + v[..., 0] ** 2),
            lambda x, v: np.broadcast_to(v / (1 + v**2), np.broadcast_shapes(x.shape, v.shape)),
            lambda x, v: x * (1 - v**2) / (1 + v**2) ** 2, 1.0, growth_x=1.0),
        _tf("x tanh(v)",
            lambda x, v: x[..., 0] * np.tanh(v[..., 0]),
            lambda x, v: np.broadcast_to(np.tanh(v), np.broadcast_shapes(x.shape, v.shape)),
            lambda x, v: x * _sech2(v), 0.0, growth_x=1.0),
        _tf("exp(-(x-1/2)^2)(1+v)/(1+v^2)",
            lambda x, v: np.exp(-(x[..., 0] - 0.5) ** 2) * (1 + v[..., 0]) / (1 + v[..., 0] ** 2),
            lambda x, v: -2 * (x - 0.5) * np.exp(-(x - 0.5) ** 2) * (1 + v) / (1 + v**2),
            lambda x, v: np.exp(-(x - 0.5) ** 2) * (1 - 2 * v - v**2) / (1 + v**2) ** 2, 1.0),
    ]
    return {t.name: t for t in suite}


def position_suite():
    """``(name, Field, x)`` triples for checking the averaged second-order transport."""
    return [
        ("sin", Field.on_line(np.sin, np.cos, lambda x: -np.sin(x)), 0.3),
        ("cos", Field.on_line(np.cos, lambda x: -np.sin(x), lambda x: -np.cos(x)), 1.1),
        ("x^3", Field.on_line(lambda x: x**3, lambda x: 3 * x**2, lambda x: 6 * x), 0.5),
        ("exp(-x^2)", Field.on_line(lambda x: np.exp(-x**2), lambda x: -2 * x * np.exp(-x**2),
                                    lambda x: (4 * x**2 - 2) * np.exp(-x**2)), -0.7),
        ("tanh", Field.on_line(np.tanh, _sech2,
                               lambda x: -2 * np.tanh(x) * _sech2(x)), 2.0),
    ]
