"""The endomorphism field P and contorsion K, with every structural condition
measured as a residual.

Component layout:
    P[i, j]     component i of P(d_j)
    K[p, m, j]  component p of K_{d_m} d_j
    A[m, j, l]  = <K_{d_m} d_j, d_l>  (cubic form)
Conditions are never assumed; callers read residuals and gate downstream
identities on them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np
import sympy as sp

from . import backend as bk
from .chart import ChartManifold, Geometry
from .fields import evaluate, max_abs

RANK_TOL = 1e-8


@dataclass
class ConditionResidual:
    name: str
    value: float
    tolerance: float
    witness: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.value <= self.tolerance


class PStructure:
    """A (P, K) pair realized on one chart and backend."""

    def __init__(self, man: ChartManifold, backend: bk.Backend,
                 P: np.ndarray, K: np.ndarray, name: str = ""):
        self.man = man
        self.backend = backend
        self.geom: Geometry = man.geometry(backend)
        self.n = man.dim
        self.P = np.asarray(P, dtype=object)
        self.K = np.asarray(K, dtype=object)
        self.name = name
        self._conn = {}

    # -- derived fields ----------------------------------------------------

    @cached_property
    def A(self):
        n, g = self.n, self.geom.g
        A = np.empty((n, n, n), dtype=object)
        for m in range(n):
            for j in range(n):
                for l in range(n):
                    acc = 0.0
                    for p in range(n):
                        acc = acc + g[l, p] * self.K[p, m, j]
                    A[m, j, l] = acc
        return A

    @cached_property
    def K_star(self):
        """<K*_X Y, Z> = <Y, K_X Z>."""
        n, ginv = self.n, self.geom.g_inv
        Ks = np.empty((n, n, n), dtype=object)
        for p in range(n):
            for m in range(n):
                for j in range(n):
                    acc = 0.0
                    for l in range(n):
                        acc = acc + ginv[p, l] * self.A[m, l, j]
                    Ks[p, m, j] = acc
        return Ks

    @cached_property
    def E(self):
        """E = sum_i K_{e_i} e_i, components E[p] = g^{mj} K[p,m,j]."""
        n, ginv = self.n, self.geom.g_inv
        E = np.empty(n, dtype=object)
        for p in range(n):
            acc = 0.0
            for m in range(n):
                for j in range(n):
                    acc = acc + ginv[m, j] * self.K[p, m, j]
            E[p] = acc
        return E

    @cached_property
    def trace_K(self):
        """trace_K[j] = tr_g K_{d_j}."""
        n = self.n
        out = np.empty(n, dtype=object)
        for j in range(n):
            acc = 0.0
            for b in range(n):
                acc = acc + self.K[b, j, b]
            out[j] = acc
        return out

    @cached_property
    def DP(self):
        """DP[i, j, b] = component i of (nabla_{d_b} P)(d_j)."""
        n, G = self.n, self.geom.gamma
        DP = np.empty((n, n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                for b in range(n):
                    acc = bk.diff(self.P[i, j], b)
                    for q in range(n):
                        acc = acc + G[i, b, q] * self.P[q, j] - G[q, b, j] * self.P[i, q]
                    DP[i, j, b] = acc
        return DP

    @cached_property
    def DK(self):
        """DK[p, b, m, j] = component p of (nabla_{d_b} K)_{d_m} d_j."""
        n, G = self.n, self.geom.gamma
        DK = np.empty((n, n, n, n), dtype=object)
        for p in range(n):
            for b in range(n):
                for m in range(n):
                    for j in range(n):
                        acc = bk.diff(self.K[p, m, j], b)
                        for q in range(n):
                            acc = (acc + G[p, b, q] * self.K[q, m, j]
                                   - G[q, b, m] * self.K[p, q, j]
                                   - G[q, b, j] * self.K[p, m, q])
                        DK[p, b, m, j] = acc
        return DK

    @cached_property
    def div_P(self):
        """div_P[j] = (div P)(d_j)."""
        n = self.n
        out = np.empty(n, dtype=object)
        for j in range(n):
            acc = 0.0
            for b in range(n):
                acc = acc + self.DP[b, j, b]
            out[j] = acc
        return out

    def contorsion(self, variant: str) -> np.ndarray:
        """Contorsion array used by a connection variant: plain K, hat 0, bar -K*."""
        n = self.n
        if variant == "plain":
            return self.K
        if variant == "hat":
            z = np.empty((n, n, n), dtype=object)
            z[...] = 0.0
            return z
        if variant == "bar":
            out = np.empty((n, n, n), dtype=object)
            for idx in np.ndindex(n, n, n):
                out[idx] = -self.K_star[idx]
            return out
        raise ValueError(f"unknown connection variant {variant!r}")

    def conn_coeffs(self, variant: str = "plain") -> np.ndarray:
        """C[i, a, j]: the field nabla^P_{d_a} d_j has components C[:, a, j]."""
        if variant not in self._conn:
            n, G = self.n, self.geom.gamma
            Kv = self.contorsion(variant)
            C = np.empty((n, n, n), dtype=object)
            for i in range(n):
                for a in range(n):
                    for j in range(n):
                        acc = Kv[i, a, j]
                        for m in range(n):
                            acc = acc + self.P[m, a] * G[i, m, j]
                        C[i, a, j] = acc
            self._conn[variant] = C
        return self._conn[variant]

    @cached_property
    def bracket(self):
        """Br[p, a, b]: components of [d_a, d_b]_P."""
        n = self.n
        C = self.conn_coeffs("plain")
        Br = np.empty((n, n, n), dtype=object)
        for p in range(n):
            for a in range(n):
                for b in range(n):
                    Br[p, a, b] = C[p, a, b] - C[p, b, a]
        return Br

    @cached_property
    def frak_D(self):
        """Dfrak[i, a, b]: components of [P d_a, P d_b] - P [d_a, d_b]_P."""
        n, P, Br = self.n, self.P, self.bracket
        out = np.empty((n, n, n), dtype=object)
        for i in range(n):
            for a in range(n):
                for b in range(n):
                    acc = 0.0
                    for m in range(n):
                        acc = (acc + P[m, a] * bk.diff(P[i, b], m)
                               - P[m, b] * bk.diff(P[i, a], m))
                    for p in range(n):
                        acc = acc - P[i, p] * Br[p, a, b]
                    out[i, a, b] = acc
        return out

    def conjugate(self) -> "PStructure":
        """Structure whose plain connection is this one's conjugate (K -> -K*)."""
        return PStructure(self.man, self.backend, self.P,
                          self.contorsion("bar"), name=self.name + ":conj")


# ---------------------------------------------------------------------------
# structural condition residuals


def check_statistical(ps: PStructure, grid, tol: float) -> ConditionResidual:
    """Max deviation of the cubic form from total slot symmetry."""
    n = ps.n
    # the two adjacent transpositions generate all slot permutations, so their
    # residuals bound the full permutation spread up to a small constant
    res = np.empty((2, n, n, n), dtype=object)
    for m in range(n):
        for j in range(n):
            for l in range(n):
                res[0, m, j, l] = ps.A[m, j, l] - ps.A[j, m, l]
                res[1, m, j, l] = ps.A[m, j, l] - ps.A[m, l, j]
    val, wit = max_abs(res, grid)
    return ConditionResidual("statistical", val, tol, wit)


def check_condPP(ps: PStructure, grid, tol: float) -> ConditionResidual:
    """Residual of the anchor-compatibility defect itself (condition frakD = 0)."""
    val, wit = max_abs(ps.frak_D, grid)
    return ConditionResidual("frakD-zero", val, tol, wit)


def check_condPP_equiv(ps: PStructure, grid, tol: float) -> ConditionResidual:
    """Always-true: frakD equals the antisymmetrization of
    cal_A(X,Y) = (nabla_{PX}P)(Y) - P(K_X Y)."""
    n = ps.n
    calA = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for a in range(n):
            for b in range(n):
                acc = 0.0
                for m in range(n):
                    acc = acc + ps.P[m, a] * ps.DP[i, b, m]
                for q in range(n):
                    acc = acc - ps.P[i, q] * ps.K[q, a, b]
                calA[i, a, b] = acc
    res = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for a in range(n):
            for b in range(n):
                res[i, a, b] = ps.frak_D[i, a, b] - (calA[i, a, b] - calA[i, b, a])
    val, wit = max_abs(res, grid)
    return ConditionResidual("frakD-antisym-equiv", val, tol, wit)


def check_condPP_stat(ps: PStructure, grid, tol: float) -> ConditionResidual:
    """Residual of (nabla_{PX}P)(Y) = (nabla_{PY}P)(X) over coordinate pairs."""
    n = ps.n
    res = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for a in range(n):
            for b in range(n):
                acc = 0.0
                for m in range(n):
                    acc = acc + ps.P[m, a] * ps.DP[i, b, m] - ps.P[m, b] * ps.DP[i, a, m]
                res[i, a, b] = acc
    val, wit = max_abs(res, grid)
    return ConditionResidual("nablaP-sym", val, tol, wit)


def check_E_trace(ps: PStructure, grid, tol: float) -> ConditionResidual:
    """<E, d_j> = tr_g K_{d_j} (holds for symmetric cubic form)."""
    n, g = ps.n, ps.geom.g
    res = np.empty(n, dtype=object)
    for j in range(n):
        acc = -ps.trace_K[j]
        for p in range(n):
            acc = acc + g[j, p] * ps.E[p]
        res[j] = acc
    val, wit = max_abs(res, grid)
    return ConditionResidual("E-trace", val, tol, wit)


def check_div_conditions(ps: PStructure, grid, tol: float):
    """Residuals of (div P)(X) = tr_g K_X and of the stronger div P = 0, E = 0."""
    n = ps.n
    r1 = np.empty(n, dtype=object)
    for j in range(n):
        r1[j] = ps.div_P[j] - ps.trace_K[j]
    v1, w1 = max_abs(r1, grid)
    cond1 = ConditionResidual("divP-traceK", v1, tol, w1)

    v2a, w2a = max_abs(ps.div_P, grid)
    v2b, w2b = max_abs(ps.E, grid)
    if v2a >= v2b:
        cond2 = ConditionResidual("divP0-E0", v2a, tol, w2a)
    else:
        cond2 = ConditionResidual("divP0-E0", v2b, tol, w2b)
    return cond1, cond2


def check_codazzi_K(ps: PStructure, grid, tol: float) -> ConditionResidual:
    """Residual of (nabla_{PX}K)_Y Z = (nabla_{PY}K)_X Z."""
    n = ps.n
    res = np.empty((n, n, n, n), dtype=object)
    for p in range(n):
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    acc = 0.0
                    for m in range(n):
                        acc = (acc + ps.P[m, a] * ps.DK[p, m, b, c]
                               - ps.P[m, b] * ps.DK[p, m, a, c])
                    res[p, a, b, c] = acc
    val, wit = max_abs(res, grid)
    return ConditionResidual("nablaPK-sym", val, tol, wit)


def nijenhuis(ps: PStructure) -> np.ndarray:
    """N[i, a, b]: Nijenhuis tensor of P on coordinate pairs."""
    n, P = ps.n, ps.P
    out = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for a in range(n):
            for b in range(n):
                acc = 0.0
                for m in range(n):
                    acc = acc + P[m, a] * bk.diff(P[i, b], m) - P[m, b] * bk.diff(P[i, a], m)
                for p in range(n):
                    acc = acc - P[i, p] * (bk.diff(P[p, b], a) - bk.diff(P[p, a], b))
                out[i, a, b] = acc
    return out


def bracket_generating_step2(ps: PStructure, x) -> int:
    """Numerical rank of span{P d_i} + span{[P d_i, P d_j]} at a point."""
    n = ps.n
    x = np.asarray(x, dtype=float)
    cols = [evaluate(ps.P[:, i], x) for i in range(n)]
    lie = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for a in range(n):
            for b in range(n):
                acc = 0.0
                for m in range(n):
                    acc = (acc + ps.P[m, a] * bk.diff(ps.P[i, b], m)
                           - ps.P[m, b] * bk.diff(ps.P[i, a], m))
                lie[i, a, b] = acc
    for a in range(n):
        for b in range(a + 1, n):
            cols.append(evaluate(lie[:, a, b], x))
    mat = np.stack(cols, axis=-1)
    return int(np.linalg.matrix_rank(mat, tol=RANK_TOL))


# ---------------------------------------------------------------------------
# structure registry


def _sym_christoffel(man: ChartManifold):
    n = man.dim
    g = man.metric
    ginv = g.inv()
    G = [[[sp.Integer(0)] * n for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(n):
                acc = sp.Integer(0)
                for l in range(n):
                    acc += ginv[k, l] * (sp.diff(g[l, i], man.coords[j])
                                         + sp.diff(g[l, j], man.coords[i])
                                         - sp.diff(g[i, j], man.coords[l]))
                G[k][i][j] = sp.simplify(acc / 2)
    return G


def _sym_DP(man: ChartManifold, P: sp.Matrix):
    """DPsym[p][m][j] = component p of (nabla_{d_j} P)(d_m), symbolically."""
    n = man.dim
    G = _sym_christoffel(man)
    DP = [[[sp.Integer(0)] * n for _ in range(n)] for _ in range(n)]
    for p in range(n):
        for m in range(n):
            for j in range(n):
                acc = sp.diff(P[p, m], man.coords[j])
                for q in range(n):
                    acc += G[p][j][q] * P[q, m] - G[q][j][m] * P[p, q]
                DP[p][m][j] = sp.simplify(acc)
    return DP


def _p_id(man):
    return sp.eye(man.dim)


def _p_proj(man):
    d = [1] + [0] * (man.dim - 1)
    return sp.diag(*d)


def _p_jrot(man):
    if man.dim != 2:
        raise ValueError("J-rot needs a 2-dimensional fixture")
    return sp.Matrix([[0, -1], [1, 0]])


def _p_sing(man):
    if man.dim != 2:
        raise ValueError("P-sing needs a 2-dimensional fixture")
    x = man.coords[0]
    return sp.diag(1, sp.sin(x) ** 2)


def _p_contact(man):
    if man.dim != 3:
        raise ValueError("P-contact needs a 3-dimensional fixture")
    x = man.coords[0]
    return sp.Matrix([[1, 0, 0], [0, 1, 0], [0, sp.sin(x), 0]])


P_BUILDERS = {
    "P-id": (_p_id, 0),
    "P-proj": (_p_proj, 0),
    "J-rot": (_p_jrot, 0),
    "P-sing": (_p_sing, 0),
    "P-contact": (_p_contact, 0),
}


def _k_zero(man, P, params):
    n = man.dim
    return [[[sp.Integer(0)] * n for _ in range(n)] for _ in range(n)]


def _cubic_from_A(man, A):
    """Raise the first slot of a cubic array A[m][j][l] with the inverse metric."""
    n = man.dim
    ginv = man.metric.inv()
    K = [[[sp.Integer(0)] * n for _ in range(n)] for _ in range(n)]
    for p in range(n):
        for m in range(n):
            for j in range(n):
                acc = sp.Integer(0)
                for l in range(n):
                    acc += ginv[p, l] * A[m][j][l]
                K[p][m][j] = sp.simplify(acc)
    return K


def _k_cubic(man, P, params):
    # trace-free constant symmetric cubic on a flat 2-torus
    if man.dim != 2:
        raise ValueError("K-cubic needs a 2-dimensional fixture")
    a, b = params if params else (1.0, 0.0)
    A = [[[sp.Integer(0)] * 2 for _ in range(2)] for _ in range(2)]
    vals = {(0, 0, 0): a, (0, 1, 1): -a, (1, 0, 1): -a, (1, 1, 0): -a,
            (0, 0, 1): b, (0, 1, 0): b, (1, 0, 0): b, (1, 1, 1): -b}
    for (m, j, l), v in vals.items():
        A[m][j][l] = sp.Float(v)
    return _cubic_from_A(man, A)


def _k_sym(man, P, params):
    # general constant symmetric cubic on a flat 2-torus; E = (p+q, r+t)
    if man.dim != 2:
        raise ValueError("K-sym needs a 2-dimensional fixture")
    p, q, r, t = params if params else (0.3, 0.1, -0.2, 0.4)
    A = [[[sp.Integer(0)] * 2 for _ in range(2)] for _ in range(2)]
    vals = {(0, 0, 0): p, (0, 1, 1): q, (1, 0, 1): q, (1, 1, 0): q,
            (0, 0, 1): r, (0, 1, 0): r, (1, 0, 0): r, (1, 1, 1): t}
    for (m, j, l), v in vals.items():
        A[m][j][l] = sp.Float(v)
    return _cubic_from_A(man, A)


def _k_gradP(man, P, params):
    # K_X Y = c (nabla_Y P)(X)
    c = params[0] if params else 1.0
    n = man.dim
    DP = _sym_DP(man, P)
    K = [[[sp.Integer(0)] * n for _ in range(n)] for _ in range(n)]
    for p in range(n):
        for m in range(n):
            for j in range(n):
                K[p][m][j] = sp.Float(c) * DP[p][m][j]
    return K


def _k_divP(man, P, params):
    # K_X Y = (div P)(Y) X
    n = man.dim
    DP = _sym_DP(man, P)
    div = [sp.simplify(sum(DP[b][j][b] for b in range(n))) for j in range(n)]
    K = [[[sp.Integer(0)] * n for _ in range(n)] for _ in range(n)]
    for p in range(n):
        for m in range(n):
            for j in range(n):
                K[p][m][j] = div[j] if p == m else sp.Integer(0)
    return K


def _k_metric(man, P, params):
    # K_X Y = <X, Y> V with a constant-component V: fails slot symmetry, E = V
    n = man.dim
    V = list(params) if params else [1.0] + [0.0] * (n - 1)
    if len(V) != n:
        raise ValueError("K-metric needs one parameter per dimension")
    g = man.metric
    K = [[[sp.Integer(0)] * n for _ in range(n)] for _ in range(n)]
    for p in range(n):
        for m in range(n):
            for j in range(n):
                K[p][m][j] = g[m, j] * sp.Float(V[p])
    return K


def _k_skewrot(man, P, params):
    # A(X,Y,Z) = c X^1 <JY, Z>: K_X skew for every X, not symmetric
    if man.dim != 2:
        raise ValueError("K-skewrot needs a 2-dimensional fixture")
    c = params[0] if params else 1.0
    A = [[[sp.Integer(0)] * 2 for _ in range(2)] for _ in range(2)]
    A[0][0][1] = sp.Float(c)
    A[0][1][0] = -sp.Float(c)
    return _cubic_from_A(man, A)


K_BUILDERS = {
    "K-0": (_k_zero, 0),
    "K-cubic": (_k_cubic, 2),
    "K-sym": (_k_sym, 4),
    "K-gradP": (_k_gradP, 1),
    "K-divP": (_k_divP, 0),
    "K-metric": (_k_metric, -1),
    "K-skewrot": (_k_skewrot, 1),
}

_SPEC_RE = re.compile(r"^([A-Za-z0-9-]+)(?:\(([^)]*)\))?$")


def parse_spec(spec: str):
    m = _SPEC_RE.match(spec.strip())
    if not m:
        raise KeyError(f"cannot parse structure spec {spec!r}")
    name = m.group(1)
    params = ()
    if m.group(2):
        params = tuple(float(tok) for tok in m.group(2).split(",") if tok.strip())
    return name, params


def structure_names():
    return {"P": sorted(P_BUILDERS), "K": sorted(K_BUILDERS)}


def build_structure(man: ChartManifold, backend: bk.Backend,
                    p_spec: str, k_spec: str) -> PStructure:
    p_name, p_params = parse_spec(p_spec)
    k_name, k_params = parse_spec(k_spec)
    if p_name not in P_BUILDERS:
        raise KeyError(f"unknown P structure {p_name!r}")
    if k_name not in K_BUILDERS:
        raise KeyError(f"unknown K structure {k_name!r}")
    if p_params:
        raise KeyError(f"{p_name} takes no parameters")
    P = P_BUILDERS[p_name][0](man)
    kb, nargs = K_BUILDERS[k_name]
    if nargs >= 0 and k_params and len(k_params) != nargs:
        raise KeyError(f"{k_name} takes {nargs} parameters")
    K = kb(man, P, k_params)
    Pc = backend.array(P)
    Kc = backend.array(sp.Array(K))
    return PStructure(man, backend, Pc, Kc, name=f"{p_spec}:{k_spec}")
