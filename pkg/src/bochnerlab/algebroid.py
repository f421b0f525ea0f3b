"""Anchored brackets on the tangent bundle: axiom checks, Jacobiator, the
anchored exterior differential and anchored connections with torsion.

The bundle is fixed to TM; the structures of interest arise from a PStructure
(anchor P, bracket from the modified connection), but the checks only use the
anchor/bracket interface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend as bk
from .diffops import covd_vec, p_bracket_fields
from .structure import PStructure


class InvalidConnectionError(Exception):
    """Raised when a claimed anchored connection fails the Koszul spot check."""


@dataclass
class AnchoredBracket:
    """Anchor (1,1) components, coordinate bracket coefficients and a bracket
    callable on vector fields."""
    anchor: np.ndarray           # rho[i, j]
    coord_bracket: np.ndarray    # Br[p, a, b] = comps of [d_a, d_b]
    bracket: object              # callable (X, Y) -> vector comps
    n: int

    @classmethod
    def from_structure(cls, ps: PStructure) -> "AnchoredBracket":
        return cls(anchor=ps.P, coord_bracket=ps.bracket,
                   bracket=lambda X, Y: p_bracket_fields(ps, X, Y), n=ps.n)

    def anchor_apply(self, X) -> np.ndarray:
        out = np.empty(self.n, dtype=object)
        for i in range(self.n):
            acc = 0.0
            for j in range(self.n):
                acc = acc + self.anchor[i, j] * X[j]
            out[i] = acc
        return out


def lie_bracket(X, Y) -> np.ndarray:
    """Ordinary Lie bracket of coordinate vector fields."""
    n = len(X)
    out = np.empty(n, dtype=object)
    for i in range(n):
        acc = 0.0
        for m in range(n):
            acc = acc + X[m] * bk.diff(Y[i], m) - Y[m] * bk.diff(X[i], m)
        out[i] = acc
    return out


def check_axioms(ab: AnchoredBracket, X, Y, f) -> dict:
    """Residual fields for antisymmetry, the Leibniz rule (with the scalar f)
    and anchor compatibility."""
    n = ab.n
    antisym = np.empty(n, dtype=object)
    bxy = ab.bracket(X, Y)
    byx = ab.bracket(Y, X)
    for i in range(n):
        antisym[i] = bxy[i] + byx[i]

    fY = np.empty(n, dtype=object)
    for i in range(n):
        fY[i] = f * Y[i]
    lhs = ab.bracket(X, fY)
    rhoX = ab.anchor_apply(X)
    rhoXf = 0.0
    for m in range(n):
        rhoXf = rhoXf + rhoX[m] * bk.diff(f, m)
    leibniz = np.empty(n, dtype=object)
    for i in range(n):
        leibniz[i] = lhs[i] - rhoXf * Y[i] - f * bxy[i]

    compat = np.empty(n, dtype=object)
    lie = lie_bracket(ab.anchor_apply(X), ab.anchor_apply(Y))
    rho_br = ab.anchor_apply(bxy)
    for i in range(n):
        compat[i] = lie[i] - rho_br[i]
    return {"antisymmetry": antisym, "leibniz": leibniz, "anchor": compat}


def jacobiator(ab: AnchoredBracket, X, Y, Z) -> np.ndarray:
    n = ab.n
    out = np.empty(n, dtype=object)
    out[...] = 0.0
    for (U, V, W) in ((X, Y, Z), (Y, Z, X), (Z, X, Y)):
        j = ab.bracket(U, ab.bracket(V, W))
        for i in range(n):
            out[i] = out[i] + j[i]
    return out


def d_anchor(anchor: np.ndarray, coord_bracket: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Anchored exterior differential on (0,k) components, evaluated on
    coordinate fields."""
    omega = np.asarray(omega, dtype=object)
    k = omega.ndim
    n = anchor.shape[0]
    out = np.empty((n,) * (k + 1), dtype=object)
    for idx in np.ndindex(*out.shape):
        acc = 0.0
        for i in range(k + 1):
            rest = idx[:i] + idx[i + 1:]
            term = 0.0
            for m in range(n):
                term = term + anchor[m, idx[i]] * bk.diff(omega[rest], m)
            acc = acc + term if i % 2 == 0 else acc - term
        for i in range(k + 1):
            for j in range(i + 1, k + 1):
                rest = tuple(idx[s] for s in range(k + 1) if s not in (i, j))
                term = 0.0
                for p in range(n):
                    term = term + coord_bracket[p, idx[i], idx[j]] * omega[(p,) + rest]
                acc = acc + term if (i + j) % 2 == 1 else acc - term
        out[idx] = acc
    return out


def d_rho(ab: AnchoredBracket, omega: np.ndarray) -> np.ndarray:
    return d_anchor(ab.anchor, ab.coord_bracket, omega)


def d_rho_squared_probe(ab: AnchoredBracket, f, omega: np.ndarray):
    """(d^rho)^2 on a scalar and on a 1-form; classifies the structure."""
    f0 = np.empty((), dtype=object)
    f0[()] = f
    ddf = d_rho(ab, d_rho(ab, f0))
    ddw = d_rho(ab, d_rho(ab, omega))
    return ddf, ddw


def koszul_spot_check(ps: PStructure, variant: str, X, Y, f) -> np.ndarray:
    """Residual of lower-slot function linearity for the anchored connection."""
    n = ps.n
    fX = np.empty(n, dtype=object)
    for i in range(n):
        fX[i] = f * X[i]
    lhs = covd_vec(ps, variant, fX, Y)
    base = covd_vec(ps, variant, X, Y)
    out = np.empty(n, dtype=object)
    for i in range(n):
        out[i] = lhs[i] - f * base[i]
    return out


def torsion(ps: PStructure, variant: str, X, Y) -> np.ndarray:
    """T(X,Y) = nabla_X Y - nabla_Y X - [X,Y]_P for the chosen variant."""
    n = ps.n
    u = covd_vec(ps, variant, X, Y)
    v = covd_vec(ps, variant, Y, X)
    br = p_bracket_fields(ps, X, Y)
    out = np.empty(n, dtype=object)
    for i in range(n):
        out[i] = u[i] - v[i] - br[i]
    return out


def bianchi_with_torsion_residual(ps: PStructure, variant: str, X, Y, Z,
                                  check_koszul: bool = False, grid=None,
                                  tol: float = 1e-8) -> np.ndarray:
    """Residual of the cyclic curvature identity with torsion terms and the
    Jacobiator of the bracket."""
    from .curvature import R_P_fields
    from .fields import max_abs

    n = ps.n
    if check_koszul:
        if grid is None:
            raise ValueError("grid required for the Koszul spot check")
        import sympy as sp
        f = ps.backend.scalar(sp.cos(ps.man.coords[0]))
        res = koszul_spot_check(ps, variant, X, Y, f)
        val, _ = max_abs(res, grid)
        if val > tol:
            raise InvalidConnectionError(
                f"variant {variant!r} fails lower-slot linearity ({val:.3e})")

    out = np.empty(n, dtype=object)
    out[...] = 0.0
    ab = AnchoredBracket.from_structure(ps)
    for (U, V, W) in ((X, Y, Z), (Y, Z, X), (Z, X, Y)):
        r = R_P_fields(ps, U, V, W, variant)
        # (nabla_U T)(V, W) = nabla_U(T(V,W)) - T(nabla_U V, W) - T(V, nabla_U W)
        tvw = torsion(ps, variant, V, W)
        t1 = covd_vec(ps, variant, U, tvw)
        t2 = torsion(ps, variant, covd_vec(ps, variant, U, V), W)
        t3 = torsion(ps, variant, V, covd_vec(ps, variant, U, W))
        tt = torsion(ps, variant, torsion(ps, variant, U, V), W)
        for i in range(n):
            out[i] = out[i] + r[i] - (t1[i] - t2[i] - t3[i]) - tt[i]
    jac = jacobiator(ab, X, Y, Z)
    for i in range(n):
        out[i] = out[i] - jac[i]
    return out
