import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ucplab import field as fld
from ucplab.counterexamples import (NOT_CEX, SUCP, WUCP, DiagonalCexSpec, auxiliary_functions,
                                    cex_1d, cex_general, cex_simple, d_dx, diag_cex, div_cex,
                                    flat_radial, multiply_by, nullspace_coeffs, pattern_matrix,
                                    vanishing_bump)
from ucplab.errors import DenominatorVanishes, RankDeficient
from ucplab.field import Var, evaluate, evaluate_many

x, y = Var(0), Var(1)
# small amplitude keeps 1 - int d_y Delta c away from zero on the whole box
SOFT_BUMP = 5e-4 * vanishing_bump(0.25, 0.5)


def test_zero_c_is_trivial():
    r = cex_simple(fld.ZERO, resolution=17)
    assert r.cert.residual_sup == 0 and r.cert.det_identity_error == 0
    pts = (np.array([0.3, -0.2]), np.array([0.1, 0.5]))
    np.testing.assert_array_equal(evaluate(r.F[0, 1], pts), pts[1])
    assert r.cert.verdict == NOT_CEX


def test_soft_bump_certificate():
    r = cex_simple(SOFT_BUMP, resolution=65, region=(0.25, 0.5))
    c = r.cert
    assert c.residual_sup <= 1e-8
    assert c.det_identity_error <= 1e-12
    assert c.inner_det_sup == 0.0 and c.annulus_det_sup == pytest.approx(5e-4)
    assert c.verdict == WUCP


def test_full_bump_denominator_reported():
    with pytest.raises(DenominatorVanishes, match=r"at \("):
        cex_simple(vanishing_bump(0.25, 0.5), resolution=65)
    r = cex_simple(vanishing_bump(0.25, 0.5), resolution=65, strict=False, region=(0.25, 0.5))
    assert 0.25 < r.cert.extras["regular_radius"] < 0.3
    assert r.cert.residual_sup <= 1e-8


def test_flat_c_violates_sucp():
    r = cex_simple(flat_radial(), resolution=65, box=((-0.2, 0.2), (-0.2, 0.2)))
    assert r.cert.verdict == SUCP
    assert r.cert.residual_sup <= 1e-8


def test_general_degenerates_to_simple():
    kw = dict(resolution=33, region=(0.25, 0.5))
    a, b = cex_simple(SOFT_BUMP, **kw), cex_general(SOFT_BUMP, None, None, **kw)
    assert a.cert == b.cert


@pytest.mark.parametrize("X12,X22", [(None, multiply_by(3.0)), (d_dx(0), None),
                                     (d_dx(1, 2.0), multiply_by(x))])
def test_general_lower_order_terms(X12, X22):
    r = cex_general(SOFT_BUMP, X12, X22, resolution=65, region=(0.25, 0.5))
    assert r.cert.residual_sup <= 1e-8
    assert r.cert.det_identity_error <= 1e-12
    assert r.cert.verdict == WUCP


def test_det_identity_at_random_points():
    r = cex_general(SOFT_BUMP, None, multiply_by(2.0), resolution=17)
    rng = np.random.default_rng(1)
    pts = tuple(rng.uniform(-0.6, 0.6, (2, 1000)))
    det, c = evaluate_many([r.F.det(), SOFT_BUMP], pts)
    assert np.max(np.abs(det - c)) <= 1e-12
    assert r.cert.verdict == WUCP
    assert r.cert.extras["vanishing_order"] == "identically zero near 0"


def test_cex_1d_quadratic():
    t = Var(0)
    r = cex_1d(t * t)
    assert evaluate(r.cert.extras["X21_coefficient"], (np.array([0.3]),))[0] == -2.0
    assert r.cert.residual_sup == 0


def test_cex_1d_verdicts():
    assert cex_1d(vanishing_bump(0.25, 0.5, n=1), region=(0.25, 0.5)).cert.verdict == WUCP
    assert cex_1d(fld.flat_exp(Var(0) ** 2)).cert.verdict == SUCP


ORIGIN = {"dim4-pure-diagonal": [1, 1, 1, 1],
          "dim3-cross-term": [1, 1, 1, 0.5],
          "dim2-first-order": [1, 1, -2, 0]}


@pytest.mark.parametrize("pattern", sorted(ORIGIN))
def test_nullspace_origin_values(pattern):
    fs = auxiliary_functions(pattern)
    n = {"dim4-pure-diagonal": 4, "dim3-cross-term": 3, "dim2-first-order": 2}[pattern]
    k = nullspace_coeffs(*fs, (0.0,) * n, pattern)
    np.testing.assert_allclose(k, ORIGIN[pattern], atol=1e-12)


@settings(max_examples=25)
@given(st.lists(st.floats(-0.05, 0.05), min_size=4, max_size=4),
       st.floats(0.5, 4.0) | st.floats(-4.0, -0.5))
def test_nullspace_kernel_and_scaling(p, s):
    fs = auxiliary_functions("dim4-pure-diagonal")
    k = nullspace_coeffs(*fs, p, "dim4-pure-diagonal")
    M = np.array([[evaluate(e, tuple(np.array([q]) for q in p))[0] for e in row]
                  for row in pattern_matrix(fs, "dim4-pure-diagonal")])
    assert np.linalg.norm(M @ k) <= 1e-10 * np.linalg.norm(M) * np.linalg.norm(k)
    k2 = nullspace_coeffs(*(s * f for f in fs), p, "dim4-pure-diagonal")
    np.testing.assert_allclose(k2, k, rtol=1e-12)


def test_rank_deficient():
    with pytest.raises(RankDeficient):
        nullspace_coeffs(x * x, x * x, x * x, (0.0, 0.0), "dim2-first-order")


def test_diag_unperturbed_is_not_a_counterexample():
    r = diag_cex(DiagonalCexSpec("dim4-pure-diagonal", eta=0.0, resolution=9))
    assert r.cert.verdict == NOT_CEX
    assert r.cert.residual_sup <= 1e-12
    assert r.cert.coefficient_min >= 0.5


def test_diag_2d_wide_box_without_floor():
    # eps = 0.25 loses ellipticity far from the origin; the determinant certificate is unaffected
    r = diag_cex(DiagonalCexSpec("dim2-first-order", eps=0.25, eta=0.05, floor=None,
                                 resolution=41))
    assert r.cert.residual_sup <= 1e-8
    assert r.cert.inner_det_sup <= 1e-12 and r.cert.annulus_det_sup > 1e-4
    assert r.cert.coefficient_min < 0.5


@pytest.mark.parametrize("pattern", ["dim3-cross-term", "dim2-first-order"])
def test_diag_default_certificates(pattern):
    r = diag_cex(DiagonalCexSpec(pattern, resolution=21))
    assert r.cert.verdict == WUCP
    assert r.cert.residual_sup <= 1e-8
    assert r.cert.coefficient_min >= 0.5
    np.testing.assert_allclose(r.cert.extras["origin_coefficients"], ORIGIN[pattern],
                               atol=1e-12)


def test_div_cex_certificate_shape():
    r = div_cex(DiagonalCexSpec("dim2-first-order", resolution=41), resolution=65)
    assert r.cert.extras["psi_min"] > 0
    assert r.cert.verdict == WUCP
    assert len(r.cert.extras["residuals"]) == 4
