"""Chart-level geometry: Christoffel symbols, curvature, frames, quadrature."""

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bochnerlab import backend as bk
from bochnerlab.chart import (DegenerateMetricError, DomainError, christoffel,
                              integrate, orthonormal_frame, riemann)
from bochnerlab.fields import evaluate
from bochnerlab.fixtures import get_manifold


def test_flat_torus_has_no_connection_coefficients(t2, t2_grid):
    be = t2.backend("analytic")
    gam = christoffel(t2, t2_grid, be)
    assert np.max(np.abs(gam)) == 0.0
    R = riemann(t2, t2_grid, be)
    assert np.max(np.abs(R)) == 0.0


def test_sphere_christoffel_closed_form(s2):
    be = s2.backend("analytic")
    pts = s2.sample_grid(9)
    gam = christoffel(s2, pts, be)
    th = pts[:, 0]
    # Gamma^theta_{phi phi} = -sin cos, Gamma^phi_{theta phi} = cot
    assert np.allclose(gam[0, 1, 1], -np.sin(th) * np.cos(th), atol=1e-12)
    assert np.allclose(gam[1, 0, 1], np.cos(th) / np.sin(th), atol=1e-12)
    assert np.allclose(gam[1, 1, 0], gam[1, 0, 1], atol=1e-12)
    assert np.max(np.abs(gam[0, 0, 0])) == 0.0


def test_sphere_sectional_curvature_is_one(s2, s2_grid):
    be = s2.backend("analytic")
    R = riemann(s2, s2_grid, be)
    geom = s2.geometry(be)
    g = evaluate(geom.g, s2_grid)
    # constant curvature 1 in the <R(di,dj)dl, dk> pairing:
    # R[i,j,k,l] = g_ik g_jl - g_jk g_il
    want = np.einsum("ikN,jlN->ijklN", g, g) - np.einsum("jkN,ilN->ijklN", g, g)
    assert np.max(np.abs(R - want)) < 1e-10


def test_orthonormal_frame_is_orthonormal(s2, s2_grid):
    be = s2.backend("analytic")
    E = orthonormal_frame(s2, s2_grid, be)
    g = evaluate(s2.geometry(be).g, s2_grid)
    gram = np.einsum("iaN,ijN,jbN->abN", E, g, E)
    eye = np.eye(2)[:, :, None]
    assert np.max(np.abs(gram - eye)) < 1e-10


def test_total_areas():
    t2 = get_manifold("T2-flat")
    s2 = get_manifold("S2-round")
    assert integrate(t2, 1.0, 64) == pytest.approx((2 * np.pi) ** 2, rel=1e-12)
    assert integrate(s2, 1.0, 64) == pytest.approx(4 * np.pi, rel=1e-10)


def test_sphere_quadrature_polynomial_moment(s2):
    be = s2.backend("analytic")
    th = s2.coords[0]
    f = be.scalar(sp.cos(th) ** 2)
    # int cos^2(theta) over S^2 = 4 pi / 3
    assert integrate(s2, f, 64, backend=be) == pytest.approx(4 * np.pi / 3, rel=1e-10)


def test_fd_christoffel_matches_analytic(s2):
    pts = s2.sample_grid(8)
    a = christoffel(s2, pts, s2.backend("analytic"))
    f = christoffel(s2, pts, s2.backend("fd"))
    assert np.max(np.abs(a - f)) < 1e-6


def test_fd_riemann_matches_analytic(s2):
    pts = s2.sample_grid(8)
    a = riemann(s2, pts, s2.backend("analytic"))
    f = riemann(s2, pts, s2.backend("fd"))
    assert np.max(np.abs(a - f)) < 1e-5


def test_pole_is_rejected(s2):
    # either the domain gate or the metric-degeneracy gate must fire there
    with pytest.raises((DomainError, DegenerateMetricError)):
        christoffel(s2, np.array([[0.0, 1.0]]), s2.backend("analytic"))


@settings(max_examples=20, deadline=None)
@given(th=st.floats(0.15, np.pi - 0.15), ph=st.floats(0.0, 2 * np.pi))
def test_sphere_metric_positive_and_frame_inverts(th, ph):
    s2 = get_manifold("S2-round")
    be = s2.backend("analytic")
    geom = s2.geometry(be)
    pt = np.array([[th, ph]])
    det = bk.value(geom.det, pt)[0]
    assert det > 0
    E = evaluate(geom.frame, pt)[..., 0]
    C = evaluate(geom.coframe, pt)[..., 0]
    assert np.allclose(C @ E, np.eye(2), atol=1e-9)
