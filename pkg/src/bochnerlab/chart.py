"""Coordinate charts with metric, Levi-Civita data and quadrature.

A model manifold is a single chart (periodic identifications allowed) with a
metric given by sympy component expressions.  All derived geometry (inverse
metric, Christoffel coefficients, curvature components, orthonormal frame) is
kept as object arrays of backend scalars, so the same construction runs under
the exact symbolic backend and the finite-difference backend.

Chart curvature components follow the convention

    R[i,j,k,l] = <R(d_i, d_j) d_l, d_k>,

with R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y]; on the round 2-sphere this
gives R[theta,phi,theta,phi] = sin^2(theta).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import sympy as sp

from . import backend as bk

DET_EPS = 1e-12


class DomainError(ValueError):
    """A point lies outside the chart's coordinate domain."""


class DegenerateMetricError(ValueError):
    """det g fell below the degeneracy threshold at a sampled point."""


class UnsupportedDomainError(ValueError):
    """Operation needs a closed fixture and the chart is not one."""


@dataclass(frozen=True)
class CoordSpec:
    """One coordinate interval with its periodicity flag and quadrature tag.

    quad is "trapezoid" for a uniformly-sampled periodic coordinate, or
    "cos-gauss2" for a polar angle integrated through the cos substitution
    with composite two-point Gauss nodes (keeps nodes away from the poles).
    sample_lo/sample_hi bound the band used for pointwise residual grids;
    they default to the full interval.
    """

    name: str
    lo: float
    hi: float
    periodic: bool = True
    quad: str = "trapezoid"
    sample_lo: Optional[float] = None
    sample_hi: Optional[float] = None

    @property
    def sample_bounds(self):
        lo = self.lo if self.sample_lo is None else self.sample_lo
        hi = self.hi if self.sample_hi is None else self.sample_hi
        return lo, hi


def _pairs(n: int):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


class Geometry:
    """Backend-realized metric data for one chart.

    Everything here is an object array of backend scalars; evaluation at
    points happens later through fields.evaluate.
    """

    def __init__(self, man: "ChartManifold", backend: bk.Backend):
        self.man = man
        self.backend = backend
        n = man.dim
        self.n = n
        self.g = backend.array(man.metric)

        det, adj = _det_adjugate(self.g)
        self.det = det
        self.sqrt_det = bk.sqrt(det)
        self.g_inv = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                self.g_inv[i, j] = adj[i, j] / det

        self.gamma = self._christoffel()
        self._riemann_up = None
        self._riemann_low = None
        self._frame = None
        self._coframe = None
        self._xi = None

    def _christoffel(self):
        n, g, ginv = self.n, self.g, self.g_inv
        dg = np.empty((n, n, n), dtype=object)  # dg[i,j,k] = d_k g_ij
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    dg[i, j, k] = bk.diff(g[i, j], k)
        gamma = np.empty((n, n, n), dtype=object)  # gamma[k,i,j] = Gamma^k_ij
        for k in range(n):
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for l in range(n):
                        acc = acc + ginv[k, l] * (dg[l, i, j] + dg[l, j, i] - dg[i, j, l])
                    gamma[k, i, j] = acc * 0.5
        return gamma

    @property
    def riemann_up(self):
        """Rup[d,c,a,b]: R(d_a, d_b) d_c = Rup[d,c,a,b] d_d."""
        if self._riemann_up is None:
            n, G = self.n, self.gamma
            R = np.empty((n, n, n, n), dtype=object)
            for d in range(n):
                for c in range(n):
                    for a in range(n):
                        for b in range(n):
                            acc = bk.diff(G[d, b, c], a) - bk.diff(G[d, a, c], b)
                            for e in range(n):
                                acc = acc + G[e, b, c] * G[d, a, e] - G[e, a, c] * G[d, b, e]
                            R[d, c, a, b] = acc
            self._riemann_up = R
        return self._riemann_up

    @property
    def riemann_low(self):
        """R[i,j,k,l] = <R(d_i,d_j) d_l, d_k>."""
        if self._riemann_low is None:
            n = self.n
            Rup = self.riemann_up
            R = np.empty((n, n, n, n), dtype=object)
            for i in range(n):
                for j in range(n):
                    for k in range(n):
                        for l in range(n):
                            acc = 0.0
                            for d in range(n):
                                acc = acc + self.g[k, d] * Rup[d, l, i, j]
                            R[i, j, k, l] = acc
            self._riemann_low = R
        return self._riemann_low

    def inner_vec(self, u, v):
        acc = 0.0
        for a in range(self.n):
            for b in range(self.n):
                acc = acc + self.g[a, b] * u[a] * v[b]
        return acc

    @property
    def frame(self):
        """frame[i,m]: orthonormal e_i = frame[i,m] d_m (Gram-Schmidt, coordinate order)."""
        if self._frame is None:
            n = self.n
            es = []
            for i in range(n):
                v = np.empty(n, dtype=object)
                for m in range(n):
                    v[m] = 1.0 if m == i else 0.0
                for e in es:
                    c = self.inner_vec(v, e)
                    for m in range(n):
                        v[m] = v[m] - c * e[m]
                norm = bk.sqrt(self.inner_vec(v, v))
                for m in range(n):
                    v[m] = v[m] / norm
                es.append(v)
            fr = np.empty((n, n), dtype=object)
            for i in range(n):
                for m in range(n):
                    fr[i, m] = es[i][m]
            self._frame = fr
        return self._frame

    @property
    def coframe(self):
        """coframe[i,a] = (e_i^flat)_a = g_ab e_i^b."""
        if self._coframe is None:
            n, fr = self.n, self.frame
            co = np.empty((n, n), dtype=object)
            for i in range(n):
                for a in range(n):
                    acc = 0.0
                    for b in range(n):
                        acc = acc + self.g[a, b] * fr[i, b]
                    co[i, a] = acc
            self._coframe = co
        return self._coframe

    @property
    def xi(self):
        """xi[alpha, m, l]: skew endomorphisms e_i ^ e_j (i<j), unit Lambda^2 norm.

        xi_(ij) X = <e_i, X> e_j - <e_j, X> e_i.
        """
        if self._xi is None:
            n, fr, co = self.n, self.frame, self.coframe
            prs = _pairs(n)
            out = np.empty((len(prs), n, n), dtype=object)
            for a, (i, j) in enumerate(prs):
                for m in range(n):
                    for l in range(n):
                        out[a, m, l] = fr[j, m] * co[i, l] - fr[i, m] * co[j, l]
            self._xi = out
        return self._xi

    @property
    def so_pairs(self):
        return _pairs(self.n)


def _det_adjugate(g):
    n = g.shape[0]
    if n == 1:
        adj = np.empty((1, 1), dtype=object)
        adj[0, 0] = 1.0
        return g[0, 0], adj
    if n == 2:
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        adj = np.empty((2, 2), dtype=object)
        adj[0, 0] = g[1, 1]
        adj[1, 1] = g[0, 0]
        adj[0, 1] = -g[0, 1]
        adj[1, 0] = -g[1, 0]
        return det, adj
    if n == 3:
        c = np.empty((3, 3), dtype=object)
        for i in range(3):
            for j in range(3):
                r = [k for k in range(3) if k != i]
                s = [k for k in range(3) if k != j]
                minor = g[r[0], s[0]] * g[r[1], s[1]] - g[r[0], s[1]] * g[r[1], s[0]]
                c[i, j] = minor if (i + j) % 2 == 0 else -minor
        det = 0.0
        for j in range(3):
            det = det + g[0, j] * c[0, j]
        adj = c.T.copy()
        return det, adj
    raise NotImplementedError(f"chart dimension {n} not supported")


class ChartManifold:
    """A coordinate chart with metric expressions and quadrature structure."""

    def __init__(self, name: str, coords: Sequence[sp.Symbol],
                 metric: sp.Matrix, coord_specs: Sequence[CoordSpec],
                 closed: bool = True):
        self.name = name
        self.coords = tuple(coords)
        self.metric = sp.Matrix(metric)
        self.coord_specs = tuple(coord_specs)
        self.closed = closed
        self._geom = {}
        if len(coord_specs) != len(coords):
            raise ValueError("coord_specs must match coords")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def backend(self, kind: str) -> bk.Backend:
        return bk.Backend(kind=kind, coords=self.coords)

    def geometry(self, backend: bk.Backend) -> Geometry:
        key = backend.kind
        if key not in self._geom:
            self._geom[key] = Geometry(self, backend)
        return self._geom[key]

    def check_domain(self, x) -> None:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[-1] != self.dim:
            raise DomainError(f"point has {x.shape[-1]} coordinates, chart has {self.dim}")
        for i, cs in enumerate(self.coord_specs):
            if cs.periodic:
                continue
            xi = x[..., i]
            if np.any(xi < cs.lo - 1e-12) or np.any(xi > cs.hi + 1e-12):
                raise DomainError(f"coordinate {cs.name} outside [{cs.lo}, {cs.hi}]")

    def check_metric(self, backend: bk.Backend, x) -> None:
        geom = self.geometry(backend)
        det = bk.value(geom.det, np.asarray(x, dtype=float))
        if np.any(det <= DET_EPS):
            raise DegenerateMetricError("metric determinant at or below threshold")

    def sample_grid(self, per_dim: int = 32) -> np.ndarray:
        """Cartesian residual grid inside the sample band, shape (per_dim^n, n)."""
        axes = []
        for cs in self.coord_specs:
            lo, hi = cs.sample_bounds
            if cs.periodic:
                axes.append(np.linspace(lo, hi, per_dim, endpoint=False))
            else:
                axes.append(np.linspace(lo, hi, per_dim))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def quad_nodes(self, per_dim: int = 128):
        """Coordinate-measure quadrature: nodes (N,n), weights (N,).

        The integrand supplied to these nodes is f * sqrt(det g); the weights
        already account for any change of variables in non-periodic
        coordinates.
        """
        if not self.closed:
            raise UnsupportedDomainError(f"{self.name} is not a closed fixture")
        node_axes, weight_axes = [], []
        for cs in self.coord_specs:
            if cs.quad == "trapezoid":
                if not cs.periodic:
                    raise UnsupportedDomainError("trapezoid rule here assumes a periodic coordinate")
                h = (cs.hi - cs.lo) / per_dim
                node_axes.append(cs.lo + h * np.arange(per_dim))
                weight_axes.append(np.full(per_dim, h))
            elif cs.quad == "cos-gauss2":
                # theta in (lo, hi) with density sin(theta): substitute u = cos(theta)
                # and run composite 2-point Gauss on u.  Nodes are interior, so the
                # 1/sin factor in the weights never blows up.
                m = max(per_dim // 2, 1)
                ulo, uhi = np.cos(cs.hi), np.cos(cs.lo)
                edges = np.linspace(ulo, uhi, m + 1)
                mid = 0.5 * (edges[:-1] + edges[1:])
                half = 0.5 * (edges[1:] - edges[:-1])
                off = half / np.sqrt(3.0)
                u = np.concatenate([mid - off, mid + off])
                w = np.concatenate([half, half])
                order = np.argsort(u)
                u, w = u[order], w[order]
                theta = np.arccos(u)
                node_axes.append(theta)
                weight_axes.append(w / np.sin(theta))
            else:
                raise UnsupportedDomainError(f"unknown quadrature tag {cs.quad!r}")
        mesh = np.meshgrid(*node_axes, indexing="ij")
        wmesh = np.meshgrid(*weight_axes, indexing="ij")
        nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        weights = np.ones(nodes.shape[0])
        for w in wmesh:
            weights = weights * w.ravel()
        return nodes, weights


# ---------------------------------------------------------------------------
# public chart operations


def christoffel(man: ChartManifold, x, backend: bk.Backend) -> np.ndarray:
    """Gamma[k,i,j] evaluated at x (shape (n,n,n) + broadcast point shape)."""
    man.check_domain(x)
    man.check_metric(backend, x)
    from .fields import evaluate
    return evaluate(man.geometry(backend).gamma, x)

def riemann(man: ChartManifold, x, backend: bk.Backend) -> np.ndarray:
    """R[i,j,k,l] = <R(d_i,d_j) d_l, d_k> at x."""
    man.check_domain(x)
    man.check_metric(backend, x)
    from .fields import evaluate
    return evaluate(man.geometry(backend).riemann_low, x)


def orthonormal_frame(man: ChartManifold, x, backend: bk.Backend) -> np.ndarray:
    man.check_domain(x)
    man.check_metric(backend, x)
    from .fields import evaluate
    return evaluate(man.geometry(backend).frame, x)


def lc_covariant_derivative(geom: Geometry, comps: np.ndarray, s: int) -> np.ndarray:
    """Levi-Civita derivative of an (s,k) component array; derivative slot first.

    comps has shape (n,)*(s+k) with the contravariant axis (if any) first.
    Returns shape (n,)*(s+k+1) with axes [contravariant?, deriv, old covariant...].
    """
    n = geom.n
    G = geom.gamma
    k = comps.ndim - s
    out_shape = (n,) * (s + 1 + k)
    out = np.empty(out_shape, dtype=object)
    for idx in np.ndindex(*out_shape):
        if s == 1:
            i, a, cov = idx[0], idx[1], idx[2:]
        else:
            i, a, cov = None, idx[0], idx[1:]
        pos = ((i,) if s == 1 else ()) + cov
        acc = bk.diff(comps[pos], a)
        if s == 1:
            for q in range(n):
                acc = acc + G[i, a, q] * comps[(q,) + cov]
        for slot in range(k):
            for q in range(n):
                repl = cov[:slot] + (q,) + cov[slot + 1:]
                acc = acc - G[q, a, cov[slot]] * comps[((i,) if s == 1 else ()) + repl]
        out[idx] = acc
    return out


def integrate(man: ChartManifold, f, per_dim: int = 128, backend: Optional[bk.Backend] = None):
    """Integral of a scalar field against the volume density."""
    if backend is None:
        backend = man.backend("analytic")
    nodes, weights = man.quad_nodes(per_dim)
    geom = man.geometry(backend)
    if isinstance(f, np.ndarray):
        f = f.item()
    fv = bk.value(f, nodes)
    dens = bk.value(geom.sqrt_det, nodes)
    vals = np.sort(fv * dens * weights)  # deterministic summation order
    return float(np.sum(vals))
