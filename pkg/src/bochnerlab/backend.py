"""Pointwise scalar chart functions with interchangeable differentiation backends.

Every chart-dependent quantity (metric components, tensor components, frame
coefficients, residual fields) is represented as a scalar function of the chart
coordinates.  Two representations implement the same arithmetic protocol:

* :class:`SymScalar` keeps an exact sympy expression; derivatives are symbolic
  and evaluation goes through a cached lambdify.
* :class:`NumScalar` keeps a plain numeric callable; derivatives are 4th-order
  central finite differences, with a wider step for nested (second) differences.

Geometry code is written once against the protocol and never branches on the
backend.  Evaluation is vectorized: the last axis of the input array holds the
coordinates, so ``f(points)`` with ``points.shape == (m, n)`` returns ``(m,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
import sympy as sp

FD_STEP_FIRST = 1e-4
FD_STEP_NESTED = 1e-3


def _shape_out(out, x: np.ndarray) -> np.ndarray:
    out = np.asarray(out, dtype=float)
    base = x.shape[:-1]
    if out.shape != base:
        out = np.broadcast_to(out, base).copy()
    return out


class SymScalar:
    """Scalar function backed by an exact sympy expression."""

    __slots__ = ("expr", "coords", "_fn")

    def __init__(self, expr, coords: Sequence[sp.Symbol]):
        self.expr = sp.sympify(expr)
        self.coords = tuple(coords)
        self._fn = None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self._fn is None:
            self._fn = sp.lambdify(self.coords, self.expr, modules="numpy", cse=True)
        out = self._fn(*(x[..., i] for i in range(len(self.coords))))
        return _shape_out(out, x)

    def diff(self, i: int) -> "SymScalar":
        return SymScalar(sp.diff(self.expr, self.coords[i]), self.coords)

    def _coerce(self, other):
        if isinstance(other, SymScalar):
            return other.expr
        if isinstance(other, (int, float, sp.Expr)):
            return sp.sympify(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return SymScalar(self.expr + o, self.coords)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return SymScalar(self.expr - o, self.coords)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return SymScalar(o - self.expr, self.coords)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return SymScalar(self.expr * o, self.coords)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return SymScalar(self.expr / o, self.coords)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return SymScalar(o / self.expr, self.coords)

    def __neg__(self):
        return SymScalar(-self.expr, self.coords)

    def __repr__(self):
        return f"SymScalar({self.expr})"


class NumScalar:
    """Scalar function backed by a numeric callable; derivatives by central differences."""

    __slots__ = ("fn", "level", "step_first", "step_nested")

    def __init__(self, fn: Callable, level: int = 0,
                 step_first: float = FD_STEP_FIRST, step_nested: float = FD_STEP_NESTED):
        self.fn = fn
        self.level = level
        self.step_first = step_first
        self.step_nested = step_nested

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return _shape_out(self.fn(x), x)

    def diff(self, i: int) -> "NumScalar":
        h = self.step_first if self.level == 0 else self.step_nested
        fn = self.fn

        def d(x, _fn=fn, _i=i, _h=h):
            def at(s):
                xs = np.array(x, dtype=float)
                xs[..., _i] += s
                return np.asarray(_fn(xs), dtype=float)

            # 5-point stencil: O(h^4) truncation, base evaluations stay exact
            return (at(-2.0 * _h) - 8.0 * at(-_h) + 8.0 * at(_h) - at(2.0 * _h)) / (12.0 * _h)

        return NumScalar(d, self.level + 1, self.step_first, self.step_nested)

    def _coerce(self, other):
        if isinstance(other, NumScalar):
            return other.fn, other.level
        if isinstance(other, (int, float)):
            c = float(other)
            return (lambda x: c), 0
        return None

    def _combine(self, other, op):
        co = self._coerce(other)
        if co is None:
            return NotImplemented
        ofn, olevel = co
        sfn = self.fn
        return NumScalar(lambda x: op(np.asarray(sfn(x), dtype=float),
                                      np.asarray(ofn(x), dtype=float)),
                         max(self.level, olevel), self.step_first, self.step_nested)

    def __add__(self, other):
        return self._combine(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._combine(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._combine(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._combine(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._combine(other, lambda a, b: b / a)

    def __neg__(self):
        sfn = self.fn
        return NumScalar(lambda x: -np.asarray(sfn(x), dtype=float),
                         self.level, self.step_first, self.step_nested)

    def __repr__(self):
        return f"NumScalar(level={self.level})"


Scalar = Union[SymScalar, NumScalar]
ScalarLike = Union[SymScalar, NumScalar, float, int]


def is_scalar(f) -> bool:
    return isinstance(f, (SymScalar, NumScalar))


def value(f: ScalarLike, x) -> np.ndarray:
    """Evaluate a scalar-like at points ``x`` of shape ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    if is_scalar(f):
        return f(x)
    return np.full(x.shape[:-1], float(f))


def diff(f: ScalarLike, i: int) -> ScalarLike:
    if is_scalar(f):
        return f.diff(i)
    return 0.0


def sqrt(f: ScalarLike) -> ScalarLike:
    if isinstance(f, SymScalar):
        return SymScalar(sp.sqrt(f.expr), f.coords)
    if isinstance(f, NumScalar):
        fn = f.fn
        return NumScalar(lambda x: np.sqrt(np.asarray(fn(x), dtype=float)),
                         f.level, f.step_first, f.step_nested)
    return math.sqrt(float(f))


@dataclass(frozen=True)
class Backend:
    """Factory turning sympy expressions into backend scalars for one chart."""

    kind: str  # "analytic" | "fd"
    coords: tuple
    fd_step: float = FD_STEP_FIRST
    fd_step_nested: float = FD_STEP_NESTED

    def scalar(self, expr) -> Scalar:
        expr = sp.sympify(expr)
        if self.kind == "analytic":
            return SymScalar(expr, self.coords)
        if self.kind == "fd":
            base = SymScalar(expr, self.coords)
            return NumScalar(base.__call__, 0, self.fd_step, self.fd_step_nested)
        raise ValueError(f"unknown backend kind: {self.kind!r}")

    def array(self, exprs) -> np.ndarray:
        """Object array of scalars from a nested sequence / sympy matrix of exprs."""
        arr = np.asarray(sp.Array(exprs) if not isinstance(exprs, np.ndarray) else exprs,
                         dtype=object)
        out = np.empty(arr.shape, dtype=object)
        for idx in np.ndindex(*arr.shape) if arr.shape else [()]:
            out[idx] = self.scalar(arr[idx])
        return out
