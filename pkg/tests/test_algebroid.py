"""Anchored bracket layer: axioms, Jacobiator, anchored differential, torsion."""

import numpy as np
import sympy as sp

from bochnerlab import algebroid as alg
from bochnerlab.fields import max_abs, realize, random_form_exprs, random_scalar, random_vector_exprs
from conftest import make_ps


def _fields(ps, man, rng):
    X = realize(ps.backend, random_vector_exprs(man, rng))
    Y = realize(ps.backend, random_vector_exprs(man, rng))
    f = ps.backend.scalar(random_scalar(man, rng))
    return X, Y, f


def test_axioms_hold_for_identity_anchor(t2, t2_grid, rng):
    ps = make_ps(t2, "P-id", "K-cubic(1,0)")
    ab = alg.AnchoredBracket.from_structure(ps)
    X, Y, f = _fields(ps, t2, rng)
    res = alg.check_axioms(ab, X, Y, f)
    for name, arr in res.items():
        val, _ = max_abs(arr, t2_grid)
        assert val < 1e-9, name


def test_axioms_hold_for_projection_anchor(t2, t2_grid, rng):
    ps = make_ps(t2, "P-proj", "K-0")
    ab = alg.AnchoredBracket.from_structure(ps)
    X, Y, f = _fields(ps, t2, rng)
    res = alg.check_axioms(ab, X, Y, f)
    for name, arr in res.items():
        val, _ = max_abs(arr, t2_grid)
        assert val < 1e-9, name


def test_anchor_axiom_fails_for_the_singular_endomorphism(t2, t2_grid, rng):
    ps = make_ps(t2, "P-sing", "K-0")
    ab = alg.AnchoredBracket.from_structure(ps)
    X, Y, f = _fields(ps, t2, rng)
    res = alg.check_axioms(ab, X, Y, f)
    val, _ = max_abs(res["anchor"], t2_grid)
    assert val > 1e-3
    # antisymmetry and Leibniz are built into the bracket, so they survive
    for name in ("antisymmetry", "leibniz"):
        v, _ = max_abs(res[name], t2_grid)
        assert v < 1e-9


def test_jacobiator_vanishes_for_lie_bracket(t2, t2_grid, rng):
    ps = make_ps(t2, "P-id", "K-0")
    ab = alg.AnchoredBracket.from_structure(ps)
    X = realize(ps.backend, random_vector_exprs(t2, rng))
    Y = realize(ps.backend, random_vector_exprs(t2, rng))
    Z = realize(ps.backend, random_vector_exprs(t2, rng))
    jac = alg.jacobiator(ab, X, Y, Z)
    val, _ = max_abs(jac, t2_grid)
    assert val < 1e-9


def test_anchored_differential_squares_to_zero_when_integrable(t2, t2_grid, rng):
    for spec in ("P-id", "P-proj", "J-rot"):
        ps = make_ps(t2, spec, "K-0")
        ab = alg.AnchoredBracket.from_structure(ps)
        f = ps.backend.scalar(random_scalar(t2, rng))
        om = realize(ps.backend, random_form_exprs(t2, 1, rng))
        ddf, ddw = alg.d_rho_squared_probe(ab, f, om)
        for arr in (ddf, ddw):
            val, _ = max_abs(arr, t2_grid)
            assert val < 1e-9, spec


def test_anchored_differential_square_detects_the_defect(t2, t2_grid, rng):
    ps = make_ps(t2, "P-sing", "K-0")
    ab = alg.AnchoredBracket.from_structure(ps)
    f = ps.backend.scalar(random_scalar(t2, rng))
    om = realize(ps.backend, random_form_exprs(t2, 1, rng))
    ddf, _ = alg.d_rho_squared_probe(ab, f, om)
    val, _ = max_abs(ddf, t2_grid)
    assert val > 1e-3


def test_plain_connection_is_torsion_free_for_its_own_bracket(t2, t2_grid, rng):
    ps = make_ps(t2, "P-proj", "K-cubic(1,0)")
    X = realize(ps.backend, random_vector_exprs(t2, rng))
    Y = realize(ps.backend, random_vector_exprs(t2, rng))
    T = alg.torsion(ps, "plain", X, Y)
    val, _ = max_abs(T, t2_grid)
    assert val < 1e-9


def test_koszul_lower_slot_linearity(t2, t2_grid, rng):
    ps = make_ps(t2, "J-rot", "K-cubic(1,0)")
    X = realize(ps.backend, random_vector_exprs(t2, rng))
    Y = realize(ps.backend, random_vector_exprs(t2, rng))
    f = ps.backend.scalar(random_scalar(t2, rng))
    for variant in ("plain", "bar", "hat"):
        res = alg.koszul_spot_check(ps, variant, X, Y, f)
        val, _ = max_abs(res, t2_grid)
        assert val < 1e-9, variant


def test_first_bianchi_with_torsion_on_the_flat_torus(t2, t2_grid, rng):
    ps = make_ps(t2, "P-id", "K-cubic(1,0)")
    X = realize(ps.backend, random_vector_exprs(t2, rng))
    Y = realize(ps.backend, random_vector_exprs(t2, rng))
    Z = realize(ps.backend, random_vector_exprs(t2, rng))
    res = alg.bianchi_with_torsion_residual(ps, "plain", X, Y, Z,
                                            check_koszul=True, grid=t2_grid)
    val, _ = max_abs(res, t2_grid)
    assert val < 1e-8
