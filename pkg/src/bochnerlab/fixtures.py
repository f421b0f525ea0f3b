"""Built-in model manifolds.

All fixtures are closed.  The sphere chart keeps its pointwise sample band
away from the poles; quadrature covers the full domain through the smooth
integrand f * sqrt(det g).
"""

from __future__ import annotations

import numpy as np
import sympy as sp

from .chart import ChartManifold, CoordSpec

TWO_PI = 2 * np.pi
POLE_GAP = 0.1


def _t2_flat() -> ChartManifold:
    x, y = sp.symbols("x y", real=True)
    return ChartManifold(
        "T2-flat", (x, y), sp.eye(2),
        (CoordSpec("x", 0.0, TWO_PI), CoordSpec("y", 0.0, TWO_PI)),
    )


def _t3_flat() -> ChartManifold:
    x, y, z = sp.symbols("x y z", real=True)
    return ChartManifold(
        "T3-flat", (x, y, z), sp.eye(3),
        (CoordSpec("x", 0.0, TWO_PI), CoordSpec("y", 0.0, TWO_PI),
         CoordSpec("z", 0.0, TWO_PI)),
    )


def _s2_round() -> ChartManifold:
    th, ph = sp.symbols("theta phi", real=True)
    g = sp.diag(1, sp.sin(th) ** 2)
    return ChartManifold(
        "S2-round", (th, ph), g,
        (CoordSpec("theta", 0.0, float(np.pi), periodic=False, quad="cos-gauss2",
                   sample_lo=POLE_GAP, sample_hi=float(np.pi) - POLE_GAP),
         CoordSpec("phi", 0.0, TWO_PI)),
    )


_BUILDERS = {
    "T2-flat": _t2_flat,
    "T3-flat": _t3_flat,
    "S2-round": _s2_round,
}

_CACHE = {}


def fixture_names():
    return sorted(_BUILDERS)


def get_manifold(name: str) -> ChartManifold:
    if name not in _BUILDERS:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(fixture_names())}")
    if name not in _CACHE:
        _CACHE[name] = _BUILDERS[name]()
    return _CACHE[name]
