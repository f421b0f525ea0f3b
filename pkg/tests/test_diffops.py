"""First-order operators: gradients, divergences, exterior calculus, L2 pairings."""

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from bochnerlab import backend as bk
from bochnerlab import diffops as dop
from bochnerlab.fields import evaluate, max_abs, realize, random_form_exprs
from conftest import make_ps


def _form(ps, exprs):
    return realize(ps.backend, exprs)


def test_divP_annihilated_direction_oracle(t2, t2_grid):
    # P-proj kills d_y; div_P(sin(x) d_x) = cos(x)
    ps = make_ps(t2, "P-proj", "K-0")
    x = t2.coords[0]
    X = ps.backend.array([sp.sin(x), sp.Integer(0)])
    got = bk.value(dop.div_P(ps, X), t2_grid)
    assert np.allclose(got, np.cos(t2_grid[:, 0]), atol=1e-12)


def test_gradP_kills_functions_of_the_dropped_coordinate(t2, t2_grid):
    ps = make_ps(t2, "P-proj", "K-0")
    f = ps.backend.scalar(sp.cos(t2.coords[1]))
    g = dop.grad_P(ps, f)
    val, _ = max_abs(g, t2_grid)
    assert val < 1e-12


def test_function_laplacian_flat_oracle(t2, t2_grid):
    ps = make_ps(t2, "P-id", "K-0")
    x = t2.coords[0]
    f = ps.backend.scalar(sp.sin(x))
    lap = bk.value(dop.laplacian_fn(ps, f), t2_grid)
    assert np.allclose(lap, -np.sin(t2_grid[:, 0]), atol=1e-12)


def test_hodge_laplacian_on_functions_is_minus_analyst(t2, t2_grid, rng):
    ps = make_ps(t2, "P-id", "K-cubic(1,0)")
    from bochnerlab.fields import random_scalar
    f = ps.backend.scalar(random_scalar(t2, rng))
    f0 = np.empty((), dtype=object)
    f0[()] = f
    hodge = dop.laplacian(ps, f0, "plain")[()]
    res = hodge + dop.laplacian_fn(ps, f)
    assert np.max(np.abs(bk.value(res, t2_grid))) < 1e-12


def test_exterior_derivative_squares_to_zero(t2, t2_grid, rng):
    ps = make_ps(t2, "P-id", "K-0")
    om = _form(ps, random_form_exprs(t2, 1, rng))
    dd = dop.d_P(ps, dop.d_P(ps, om))
    val, _ = max_abs(dd, t2_grid)
    assert val < 1e-12


def test_two_routes_to_the_exterior_derivative(t2, t2_grid, rng):
    ps = make_ps(t2, "P-proj", "K-0")
    for k in (0, 1):
        om = _form(ps, random_form_exprs(t2, k, rng))
        a = dop.d_P(ps, om)
        b = dop.d_P_derivation(ps, om)
        diff = np.empty(a.shape, dtype=object)
        for idx in np.ndindex(*a.shape):
            diff[idx] = a[idx] - b[idx]
        val, _ = max_abs(diff, t2_grid)
        assert val < 1e-10


def test_interior_then_interior_vanishes(t2, t2_grid, rng):
    ps = make_ps(t2, "P-id", "K-0")
    om = _form(ps, random_form_exprs(t2, 2, rng))
    X = ps.backend.array([sp.Integer(1), sp.Integer(2)])
    once = dop.interior(om, X)
    twice = dop.interior(once, X)
    assert abs(bk.value(twice[()], t2_grid)).max() < 1e-12


def test_modified_lie_derivative_on_scalars(t2, t2_grid, rng):
    ps = make_ps(t2, "P-proj", "K-0")
    from bochnerlab.fields import random_scalar
    f = ps.backend.scalar(random_scalar(t2, rng))
    f0 = np.empty((), dtype=object)
    f0[()] = f
    V = ps.backend.array([sp.Integer(1), sp.Integer(0)])
    lv = dop.lie_P(ps, V, f0)[()]
    # with V = d_x and P = diag(1,0): L^P_V f = (PV) f = d_x f
    res = lv - bk.diff(f, 0)
    assert np.max(np.abs(bk.value(res, t2_grid))) < 1e-12


def test_stokes_on_flat_torus(t2, rng):
    from bochnerlab.chart import integrate
    ps = make_ps(t2, "P-id", "K-0")
    from bochnerlab.fields import random_vector_exprs
    X = realize(ps.backend, random_vector_exprs(t2, rng))
    total = integrate(t2, dop.div_P(ps, X), 64, backend=ps.backend)
    assert abs(total) < 1e-10


def test_adjointness_exact_on_trig_polynomials(t2, rng):
    ps = make_ps(t2, "P-id", "K-cubic(1,0)")
    om1 = _form(ps, random_form_exprs(t2, 1, rng))
    om2 = _form(ps, random_form_exprs(t2, 2, rng))
    r_form, r_tensor = dop.adjointness_residuals(t2, ps, om1, om2, 64)
    # trapezoid quadrature is exact on trig polynomials
    assert r_form < 1e-10
    assert r_tensor < 1e-10


def test_l2_product_positive_definite(t2, rng):
    ps = make_ps(t2, "P-id", "K-0")
    om = _form(ps, random_form_exprs(t2, 1, rng))
    val = dop.l2_product(t2, ps, om, om, 32, form_normalized=True)
    assert val > 0


def test_codifferential_of_scalar_is_zero(t2, t2_grid):
    ps = make_ps(t2, "P-id", "K-0")
    f0 = np.empty((), dtype=object)
    f0[()] = ps.backend.scalar(sp.sin(t2.coords[0]))
    out = dop.codifferential(ps, f0)
    assert out[()] == 0.0


@settings(max_examples=15, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_exterior_derivative_is_linear(a, b):
    from bochnerlab.fixtures import get_manifold
    man = get_manifold("T2-flat")
    ps = make_ps(man, "J-rot", "K-0")
    grid = man.sample_grid(8)
    rng = np.random.default_rng(7)
    om1 = realize(ps.backend, random_form_exprs(man, 1, rng))
    om2 = realize(ps.backend, random_form_exprs(man, 1, rng))
    combo = np.empty(om1.shape, dtype=object)
    for idx in np.ndindex(*om1.shape):
        combo[idx] = a * om1[idx] + b * om2[idx]
    lhs = dop.d_P(ps, combo)
    d1, d2 = dop.d_P(ps, om1), dop.d_P(ps, om2)
    diff = np.empty(lhs.shape, dtype=object)
    for idx in np.ndindex(*lhs.shape):
        diff[idx] = lhs[idx] - a * d1[idx] - b * d2[idx]
    val, _ = max_abs(diff, grid)
    assert val < 1e-9 * (1 + abs(a) + abs(b))
