import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from cuspedge.blowup import GeometryParams
from cuspedge.charforms import (
    EtaRefused,
    FormMatrix,
    UnsupportedGeometry,
    a_hat_form,
    block_sum,
    chern_char,
    circle_dirac_spectrum,
    circle_spectrum_for_spin,
    degree_part,
    eta_heat,
    extend_form,
    index_prediction,
    l_form,
    signature_prediction,
    top_coefficient,
    two_form,
)
from cuspedge.clifford import QI, ExteriorElement as Ext


def test_zero_curvature_gives_one():
    R = FormMatrix.zero(4)
    assert a_hat_form(R) == Ext.scalar(4, 1)
    assert l_form(R) == Ext.scalar(4, 1)


def test_chern_char_rank():
    F = FormMatrix.zero(4)
    assert chern_char([[Ext(4, {}), Ext(4, {})], [Ext(4, {}), Ext(4, {})]], 4) \
        == Ext.scalar(4, 2)


def test_ahat_degree4_coefficient_block_oracle():
    # single 2x2 block with eigen-form w: degree-4 part must be -w^2/24
    m = 4
    a, b = Fraction(3), Fraction(-2)
    w = two_form(m, [(1, 2, a), (3, 4, b)])
    R = FormMatrix.from_blocks(m, [w])
    got = top_coefficient(degree_part(a_hat_form(R), 4))
    # w^2 = 2ab e1234
    assert got == pytest.approx(float(-2 * a * b) / 24.0, abs=1e-14)


def test_l_degree4_coefficient_block_oracle():
    m = 4
    a, b = Fraction(1, 2), Fraction(5)
    w = two_form(m, [(1, 2, a), (3, 4, b)])
    R = FormMatrix.from_blocks(m, [w])
    got = top_coefficient(degree_part(l_form(R), 4))
    assert got == pytest.approx(float(2 * a * b) / 3.0, abs=1e-14)


def test_ahat_two_block_p1():
    # p1 = sum of squared eigen-forms; degree-4 part is -p1/24
    m = 4
    w1 = two_form(m, [(1, 2, 2), (3, 4, 1)])
    w2 = two_form(m, [(1, 3, 1), (2, 4, 1)])
    R = FormMatrix.from_blocks(m, [w1, w2])
    p1 = w1 * w1 + w2 * w2
    want = -float(complex(p1.coefficient((1, 2, 3, 4))).real) / 24.0
    assert top_coefficient(degree_part(a_hat_form(R), 4)) == pytest.approx(want, abs=1e-13)


def random_form_matrix(rng, m):
    z = Ext(m, {})
    entries = [[z for _ in range(m)] for _ in range(m)]
    idx_pairs = [(i, j) for i in range(1, m + 1) for j in range(i + 1, m + 1)]
    for i in range(m):
        for j in range(i + 1, m):
            w = Ext(m, {})
            for _ in range(2):
                a, bq = rng.choice(idx_pairs)
                w = w + Ext.basis(m, (a, bq), QI(Fraction(rng.randrange(-3, 4), 2)))
            entries[i][j] = w
            entries[j][i] = -w
    return FormMatrix(m, entries)


def test_genus_multiplicative_over_blocks():
    rng = random.Random(31)
    for _ in range(100):
        R1 = random_form_matrix(rng, 4)
        R2 = random_form_matrix(rng, 4)
        R = block_sum(R1, R2)
        total = R1.m + R2.m
        for genus in (a_hat_form, l_form):
            left = extend_form(genus(R1), 0, total)
            right = extend_form(genus(R2), R1.m, total)
            assert genus(R) == left * right


def test_grading_mod4():
    rng = random.Random(5)
    for _ in range(20):
        R = random_form_matrix(rng, 6)
        for genus in (a_hat_form, l_form):
            w = genus(R)
            assert all(d % 4 == 0 for d in w.degrees())


def test_chern_char_line_bundle():
    m = 4
    w = two_form(m, [(1, 2, 3)])
    ch = chern_char([[w]], m)
    assert degree_part(ch, 0) == Ext.scalar(m, 1)
    assert degree_part(ch, 2) == w
    assert all(d % 2 == 0 for d in ch.degrees())


def test_chern_char_additive_over_sums():
    m = 4
    w1 = two_form(m, [(1, 2, 1)])
    w2 = two_form(m, [(3, 4, 2)])
    z = Ext(m, {})
    direct_sum = chern_char([[w1, z], [z, w2]], m)
    assert direct_sum == chern_char([[w1]], m) + chern_char([[w2]], m)


def test_antisymmetry_enforced():
    m = 4
    w = two_form(m, [(1, 2, 1)])
    z = Ext(m, {})
    with pytest.raises(ValueError):
        FormMatrix(2 if False else m,
                   [[z, w, z, z], [w, z, z, z], [z, z, z, z], [z, z, z, z]])


# --- eta ---------------------------------------------------------------------

def test_eta_symmetric_spectrum_vanishes():
    res = eta_heat(circle_spectrum_for_spin("antiperiodic", 50))
    assert abs(res.value) < 1e-6
    assert res.method == "heat-integral"


def hurwitz_eta(a):
    return float(mpmath.zeta(0, a) - mpmath.zeta(0, 1 - a))


@pytest.mark.parametrize("a", [0.1, 0.25, 0.4])
def test_eta_twisted_matches_hurwitz(a):
    res = eta_heat(circle_dirac_spectrum(a, cutoff=60))
    assert abs(res.value - hurwitz_eta(a)) < 1e-3
    assert abs(res.value - (1.0 - 2.0 * a)) < 1e-3


def test_eta_scaling_invariance():
    spec = circle_dirac_spectrum(0.25, cutoff=60)
    base = eta_heat(spec).value
    for c in (0.5, 3.0, 17.0):
        scaled = eta_heat([c * l for l in spec]).value
        assert abs(scaled - base) < 1e-9


def test_eta_refuses_unbalanced_tail():
    with pytest.raises(EtaRefused):
        eta_heat([float(n) for n in range(1, 200)])


def test_eta_refuses_zero_mode():
    with pytest.raises(EtaRefused):
        eta_heat([-1.0, 0.0, 1.0])


# --- assembled predictions ------------------------------------------------------

def test_index_prediction_antiperiodic_vanishes():
    out = index_prediction(GeometryParams(3, 1, 0), spin="antiperiodic")
    assert out["prediction"] == pytest.approx(0.0, abs=1e-6)


def test_index_prediction_periodic_refused():
    with pytest.raises(UnsupportedGeometry):
        index_prediction(GeometryParams(3, 1, 0), spin="periodic")


@pytest.mark.parametrize("a", [0.1, 0.25, 0.4])
def test_index_prediction_twist(a):
    out = index_prediction(GeometryParams(3, 1, 0), twist=a)
    assert out["prediction"] == pytest.approx(-(1.0 - 2.0 * a) / 2.0, abs=2e-3)


def test_index_prediction_interior_passthrough():
    out = index_prediction(GeometryParams(2, 1, 0), spin="antiperiodic",
                           interior_term=1.5)
    assert out["prediction"] == pytest.approx(1.5, abs=1e-6)


def test_index_prediction_unsupported_geometry():
    with pytest.raises(UnsupportedGeometry):
        index_prediction(GeometryParams(3, 2, 0))
    with pytest.raises(UnsupportedGeometry):
        index_prediction(GeometryParams(3, 1, 1))


def test_signature_prediction_zero():
    out = signature_prediction(0.0, fiber_spectrum=circle_spectrum_for_spin("antiperiodic", 40))
    assert out["prediction"] == pytest.approx(0.0, abs=1e-6)


def test_signature_prediction_passthrough():
    out = signature_prediction(7.0, eta_value=0.0)
    assert out["prediction"] == 7.0


def test_signature_prediction_point_base_half_eta():
    spec = circle_dirac_spectrum(0.25, cutoff=60)
    out = signature_prediction(0.0, fiber_spectrum=spec)
    assert out["eta_term"] == pytest.approx(0.5 * (1 - 2 * 0.25), abs=2e-3)
