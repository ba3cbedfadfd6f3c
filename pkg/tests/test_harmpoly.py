from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from ucplab.errors import OrthogonalityViolated, ZeroPolynomial
from ucplab.harmpoly import (CONJUGATE, IDENTITY_FAILS, TRIVIAL, BivarPoly, HarmHomPoly, Poly,
                             classify_quadruple, construct_quadruple, decompose,
                             exhaustive_scan, harmonic_space_dimension, product_is_harmonic,
                             re_im_zk, small_family)
from ucplab.scenarios import harmpoly_roundtrips

sx, sy = sp.symbols("x y", real=True)
coef = st.integers(-3, 3)


def _sympy(p: Poly):
    return sum(sp.Rational(str(c)) * sx ** e[0] * sy ** e[1] for e, c in p.terms.items())


@pytest.mark.parametrize("k", range(0, 6))
def test_re_im_against_sympy(k):
    re, im = re_im_zk(k)
    zk = sp.expand((sx + sp.I * sy) ** k)
    assert sp.expand(_sympy(re) - sp.re(zk)) == 0
    assert sp.expand(_sympy(im) - sp.im(zk)) == 0


def test_poly_arithmetic_exact():
    x, y = Poly.var(0), Poly.var(1)
    p = (x + y) ** 3 - x * x * Fraction(1, 3)
    assert p.coeff((2, 1)) == 3
    assert p.coeff((2, 0)) == Fraction(-1, 3)
    assert (p - p).is_zero()
    # Delta (x + y)^3 = 12 (x + y) and Delta (x^2 / 3) = 2 / 3
    assert p.laplacian() == Poly({(1, 0): 12, (0, 1): 12, (0, 0): Fraction(-2, 3)})
    assert p(1.0, 2.0) == pytest.approx(27 - 1 / 3)


def test_product_is_harmonic_examples():
    assert product_is_harmonic(HarmHomPoly(1, 1, 0), HarmHomPoly(1, 0, 1))[0]
    ok, witness = product_is_harmonic(HarmHomPoly(1, 1, 0), HarmHomPoly(1, 1, 0))
    assert not ok and witness is not None
    assert product_is_harmonic(HarmHomPoly(3, 1, 2), HarmHomPoly(3, -2, 1))[0]


@pytest.mark.parametrize("k", range(1, 7))
def test_harmonic_dimension_two(k):
    assert harmonic_space_dimension(k) == 2


@given(st.integers(1, 6), coef, coef)
def test_decompose_roundtrip(k, a, b):
    if a == 0 and b == 0:
        return
    h, rest = decompose(HarmHomPoly(k, a, b).to_poly(), k)
    assert (h.alpha, h.beta) == (a, b)
    assert rest.is_zero()


def test_classify_examples():
    re2, im2 = HarmHomPoly(2, 1, 0), HarmHomPoly(2, 0, 1)
    im3 = HarmHomPoly(3, 0, 1)
    assert classify_quadruple(re2, re2, im3, im3).outcome == TRIVIAL
    cl = classify_quadruple(*construct_quadruple(1, 0, 0, 1, 2))
    assert cl.outcome == CONJUGATE and cl.params == (1, 0, 0, 1, 2)
    cl = classify_quadruple(re2, re2, HarmHomPoly(1, 0, 1), HarmHomPoly(1, 1, 0))
    assert cl.outcome == IDENTITY_FAILS
    with pytest.raises(ZeroPolynomial):
        classify_quadruple(HarmHomPoly(1, 0, 0), re2, re2, re2)


def test_construct_examples():
    p11, p12, p21, p22 = construct_quadruple(1, 0, 0, 1, 1)
    assert p11 == BivarPoly({(1, 1): 1})
    p11, *_ = construct_quadruple(1, 2, -2, 1, 2)
    assert p11.degree() == 4 and p11.laplacian().is_zero()
    with pytest.raises(OrthogonalityViolated):
        construct_quadruple(1, 0, 1, 0, 1)
    with pytest.raises(ZeroPolynomial):
        construct_quadruple(0, 0, 1, 0, 1)


@given(st.integers(1, 4), coef, coef, st.sampled_from([-2, -1, 1, 2]))
def test_construct_products_are_harmonic(k, a, b, s):
    if a == 0 and b == 0:
        return
    p11, *_ = construct_quadruple(a, b, -s * b, s * a, k)
    assert p11.laplacian().is_zero()


def test_small_family_laplacians_exact():
    fam = small_family(3)
    assert len(fam) == 4 + 3 * 24
    assert all(h.to_poly().laplacian().is_zero() for h in fam)


def test_exhaustive_scan_has_no_exceptions():
    rep = exhaustive_scan(3, range(-2, 3))
    assert rep.exceptions == []
    assert rep.identity_count == sum(rep.outcomes.values())
    assert set(rep.outcomes) <= {TRIVIAL, CONJUGATE}


def test_randomized_roundtrips():
    assert harmpoly_roundtrips(200, seed=11) == 0


def test_polar_form():
    h = HarmHomPoly(3, 1, -2)
    xs, ys = np.array([0.3, -0.7]), np.array([0.5, 0.2])
    np.testing.assert_allclose(h.polar_eval(xs, ys), h(xs, ys), rtol=1e-12)
