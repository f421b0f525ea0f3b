"""Tensor fields as object arrays of backend scalars, plus test-field builders.

Component layout: an (s,k) field with s in {0,1} is stored as an object array
of shape (n,)*(s+k).  The contravariant axis (if any) comes first, then the
covariant slots left to right; covariant derivatives prepend their slot in
front of the existing covariant slots.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from . import backend as bk
from .chart import ChartManifold


@dataclass
class TensorField:
    s: int
    k: int
    comps: np.ndarray  # object array, shape (n,)*(s+k)

    def __post_init__(self):
        self.comps = np.asarray(self.comps, dtype=object)
        if self.comps.ndim != self.s + self.k:
            raise ValueError("component array rank does not match valence")


def evaluate(comps: np.ndarray, x) -> np.ndarray:
    """Evaluate an object array of scalars; result shape comps.shape + points."""
    x = np.asarray(x, dtype=float)
    comps = np.asarray(comps, dtype=object)
    base = x.shape[:-1]
    out = np.empty(comps.shape + base, dtype=float)
    for idx in np.ndindex(*comps.shape):
        out[idx] = bk.value(comps[idx], x)
    return out


def max_abs(comps: np.ndarray, x):
    """Max |component| over the grid; returns (value, witness dict)."""
    vals = np.abs(evaluate(comps, x))
    flat = vals.reshape(-1)
    pos = int(np.argmax(flat))
    full_idx = np.unravel_index(pos, vals.shape)
    ncomp = np.asarray(comps, dtype=object).ndim
    comp_idx = full_idx[:ncomp]
    pt_idx = full_idx[ncomp:]
    witness = {
        "point": [float(c) for c in np.asarray(x)[pt_idx]],
        "slots": [int(i) for i in comp_idx],
    }
    return float(flat[pos]), witness


def antisymmetrize(comps: np.ndarray) -> np.ndarray:
    """Full antisymmetrization of a (0,k) component array (with 1/k!)."""
    from itertools import permutations
    from math import factorial

    k = comps.ndim
    if k <= 1:
        return comps
    out = np.empty(comps.shape, dtype=object)
    perms = list(permutations(range(k)))
    fact = float(factorial(k))
    for idx in np.ndindex(*comps.shape):
        acc = 0.0
        for p in perms:
            sgn = sp.combinatorics.Permutation(p).signature()
            acc = acc + float(sgn) * comps[tuple(idx[i] for i in p)]
        out[idx] = acc / fact
    return out


def sharp(geom, omega: np.ndarray) -> np.ndarray:
    """1-form components -> vector components."""
    n = geom.n
    out = np.empty(n, dtype=object)
    for i in range(n):
        acc = 0.0
        for a in range(n):
            acc = acc + geom.g_inv[i, a] * omega[a]
        out[i] = acc
    return out


def flat(geom, X: np.ndarray) -> np.ndarray:
    """Vector components -> 1-form components."""
    n = geom.n
    out = np.empty(n, dtype=object)
    for a in range(n):
        acc = 0.0
        for i in range(n):
            acc = acc + geom.g[a, i] * X[i]
        out[a] = acc
    return out


# ---------------------------------------------------------------------------
# random test fields (sympy level; realize with a Backend)


def _trig_poly(coords, rng, nterms=3, dc=True):
    expr = sp.Float(rng.uniform(-1, 1)) if dc else sp.Integer(0)
    for _ in range(nterms):
        ks = [int(rng.integers(-2, 3)) for _ in coords]
        phase = float(rng.uniform(0, 2 * np.pi))
        amp = float(rng.uniform(-1, 1))
        arg = sum(k * c for k, c in zip(ks, coords)) + phase
        expr = expr + amp * sp.cos(arg)
    return sp.expand_trig(sp.sympify(expr))


def _s2_ambient(coords):
    th, ph = coords
    return [sp.sin(th) * sp.cos(ph), sp.sin(th) * sp.sin(ph), sp.cos(th)]


def _s2_poly(coords, rng, deg=2, dc=True):
    u = _s2_ambient(coords)
    expr = sp.Float(rng.uniform(-1, 1)) if dc else sp.Integer(0)
    for _ in range(3):
        term = sp.Float(rng.uniform(-1, 1))
        for _ in range(int(rng.integers(1, deg + 1))):
            term = term * u[int(rng.integers(0, 3))]
        expr = expr + term
    return expr


def _s2_covector(coords, a):
    """Components of the 1-form dual to the tangential projection of a constant
    ambient vector a; smooth on the whole sphere."""
    th, ph = coords
    w_th = a[0] * sp.cos(th) * sp.cos(ph) + a[1] * sp.cos(th) * sp.sin(ph) - a[2] * sp.sin(th)
    w_ph = sp.sin(th) * (-a[0] * sp.sin(ph) + a[1] * sp.cos(ph))
    return [w_th, w_ph]


def random_scalar(man: ChartManifold, rng, dc=True):
    if man.name.startswith("S2"):
        return _s2_poly(man.coords, rng, dc=dc)
    return _trig_poly(man.coords, rng, dc=dc)


def random_form_exprs(man: ChartManifold, k: int, rng):
    """Sympy component expressions of a random smooth k-form, full (0,k) array."""
    n = man.dim
    if k == 0:
        arr = np.empty((), dtype=object)
        arr[()] = random_scalar(man, rng)
        return arr
    if man.name.startswith("S2"):
        th, ph = man.coords
        if k == 1:
            comps = [sp.Integer(0), sp.Integer(0)]
            for _ in range(2):
                a = [float(rng.uniform(-1, 1)) for _ in range(3)]
                f = _s2_poly(man.coords, rng)
                w = _s2_covector(man.coords, a)
                comps = [c + f * wi for c, wi in zip(comps, w)]
            arr = np.empty(2, dtype=object)
            arr[0], arr[1] = comps
            return arr
        if k == 2:
            f = _s2_poly(man.coords, rng)
            arr = np.empty((2, 2), dtype=object)
            arr[0, 0] = sp.Integer(0)
            arr[1, 1] = sp.Integer(0)
            arr[0, 1] = f * sp.sin(th)
            arr[1, 0] = -f * sp.sin(th)
            return arr
        raise ValueError("k > 2 not supported on S2 fixtures")
    arr = np.empty((n,) * k, dtype=object)
    for idx in np.ndindex(*arr.shape):
        arr[idx] = _trig_poly(man.coords, rng)
    if k >= 2:
        arr = antisymmetrize(arr)
    return arr


def random_vector_exprs(man: ChartManifold, rng, dc=True):
    n = man.dim
    if man.name.startswith("S2"):
        th, ph = man.coords
        comps = [sp.Integer(0), sp.Integer(0)]
        for _ in range(2):
            a = [float(rng.uniform(-1, 1)) for _ in range(3)]
            f = _s2_poly(man.coords, rng, dc=dc)
            x_th = a[0] * sp.cos(th) * sp.cos(ph) + a[1] * sp.cos(th) * sp.sin(ph) - a[2] * sp.sin(th)
            x_ph = (-a[0] * sp.sin(ph) + a[1] * sp.cos(ph)) / sp.sin(th)
            comps = [comps[0] + f * x_th, comps[1] + f * x_ph]
        arr = np.empty(2, dtype=object)
        arr[0], arr[1] = comps
        return arr
    arr = np.empty(n, dtype=object)
    for i in range(n):
        arr[i] = _trig_poly(man.coords, rng, dc=dc)
    return arr


def realize(backend: bk.Backend, exprs) -> np.ndarray:
    """Turn sympy component expressions into backend scalars."""
    return backend.array(exprs)
