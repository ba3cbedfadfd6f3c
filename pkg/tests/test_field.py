import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from ucplab import field as fld
from ucplab.errors import DimensionMismatch, DomainError
from ucplab.field import (Const, GridField, MatrixField, Var, axis_integral, evaluate,
                          fd_crosscheck, fit_order, sample)

x, y, z = Var(0), Var(1), Var(2)
sx, sy = sp.symbols("x y")

coords = st.floats(-0.9, 0.9, allow_nan=False)


def test_partials_match_sympy():
    u = fld.exp(x * y) * (1 + x * x) ** 2 / (2 + y)
    su = sp.exp(sx * sy) * (1 + sx ** 2) ** 2 / (2 + sy)
    pts = (np.array([0.1, -0.4, 0.7]), np.array([0.3, 0.2, -0.5]))
    for mi in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 3), (2, 2)]:
        got = evaluate(fld.derivative(u, mi), pts)
        f = sp.lambdify((sx, sy), sp.diff(su, sx, mi[0], sy, mi[1]))
        np.testing.assert_allclose(got, f(*pts), rtol=1e-12)


def test_laplacian_of_harmonic_is_zero():
    u = x ** 3 - 3 * x * y * y
    assert np.max(np.abs(sample(fld.laplacian(u, 2), ((-1, 1), (-1, 1)), 9).values)) == 0


@given(coords, coords)
def test_product_rule(a, b):
    f, g = fld.exp(x) + y * y, x * y + 3
    lhs = evaluate((f * g).partial(0), (a, b))
    rhs = evaluate(f.partial(0) * g + f * g.partial(0), (a, b))
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-14)


def test_bump_and_hole_levels():
    b = fld.bump((0.0, 0.0), 0.25, 0.5)
    h = fld.hole((0.0, 0.0), 0.25, 0.5)
    r = np.array([0.0, 0.1, 0.25, 0.5, 0.7])
    vb = evaluate(b, (r, 0 * r))
    assert vb[:3] == pytest.approx([1, 1, 1]) and vb[3:] == pytest.approx([0, 0])
    np.testing.assert_array_equal(evaluate(h, (r, 0 * r)), 1 - vb)
    mid = evaluate(b, (np.array([0.375]), np.array([0.0])))[0]
    assert 0 < mid < 1


def test_flat_exp_has_vanishing_derivatives_at_zero():
    f = fld.flat_exp(x * x)
    for k in range(8):
        assert evaluate(fld.derivative(f, (k,)), (np.array([0.0]),))[0] == 0.0
    assert evaluate(f, (np.array([1.0]),))[0] == pytest.approx(np.exp(-1.0))


def test_axis_integral_against_closed_form():
    # int_0^x exp(t y) dt = (exp(x y) - 1) / y
    I = axis_integral(fld.exp(x * y), 0)
    X = np.array([0.3, -0.8, 1.0])
    Y = np.array([0.5, 1.5, -2.0])
    np.testing.assert_allclose(evaluate(I, (X, Y)), np.expm1(X * Y) / Y, rtol=1e-12)
    # the fundamental theorem is exact by construction
    np.testing.assert_array_equal(evaluate(I.partial(0), (X, Y)),
                                  evaluate(fld.exp(x * y), (X, Y)))


def test_fd_crosscheck_second_order():
    rec = fd_crosscheck(fld.exp(x) * y ** 3, ((-1, 1), (-1, 1)), [65, 129, 257])
    assert rec.min_order == pytest.approx(2.0, abs=0.15)


def test_fit_order_exact_power():
    h = [0.1, 0.05, 0.025]
    assert fit_order(h, [3 * v ** 2 for v in h]) == pytest.approx(2.0)
    assert fit_order(h, [0, 0, 0]) is None


def test_sample_rejects_singularity_and_bad_dimension():
    with pytest.raises(DomainError):
        sample(1 / x, ((-1, 1), (-1, 1)), 5)
    with pytest.raises(DimensionMismatch):
        sample(z, ((-1, 1), (-1, 1)), 5)
    with pytest.raises(TypeError):
        x ** 0.5


def test_complex_constants_propagate():
    v = evaluate(Const(1j) * x + 2, (np.array([1.0, 2.0]),))
    np.testing.assert_array_equal(v, [2 + 1j, 2 + 2j])
    w = evaluate(1 / (x + Const(1j)), (np.array([1.0]),))
    assert w[0] == pytest.approx(1 / (1 + 1j))


def test_symbolic_det_matches_numeric():
    M = MatrixField(((x, y, 1), (x * y, 2, y), (3, x - y, fld.exp(x))))
    pts = (np.array([0.2, -0.7]), np.array([0.4, 0.9]))
    vals = np.array([[np.broadcast_to(evaluate(M[i, j], pts), (2,)) for j in range(3)]
                     for i in range(3)]).transpose(2, 0, 1)
    np.testing.assert_allclose(evaluate(M.det(), pts), np.linalg.det(vals), rtol=1e-12)


def test_grid_field_geometry():
    g = GridField(((0, 1), (-1, 1)), np.zeros((3, 5)))
    assert g.spacing == (0.5, 0.5)
    assert g.sup() == 0
    with pytest.raises(DimensionMismatch):
        GridField(((0, 1),), np.zeros((3, 3)))
    with pytest.raises(DomainError):
        GridField(((0, 1),), np.array([0.0, np.nan]))


def test_grid_matrix_det():
    box = ((0, 1), (0, 1))
    a, b = sample(x + 1, box, 4), sample(y, box, 4)
    M = MatrixField(((a, b), (b, a)))
    np.testing.assert_allclose(M.det().values, a.values ** 2 - b.values ** 2)
