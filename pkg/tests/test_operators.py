import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from ucplab import field as fld
from ucplab.errors import DimensionMismatch, EllipticityViolated
from ucplab.field import Var, evaluate, fit_order, sample
from ucplab.operators import (NONDIVERGENCE, DirichletProblem, EllipticOperator, apply,
                              diagonal_operator, dirichlet_solve, discrete_apply,
                              ellipticity_screen, laplace, residual_norm)

x, y = Var(0), Var(1)
sx, sy = sp.symbols("x y")
BOX = ((-1.0, 1.0), (-1.0, 1.0))


def _sym_div(a, b, c, d, u):
    du = [sp.diff(u, sx), sp.diff(u, sy)]
    out = sum(sp.diff(a[i][0] * du[0] + a[i][1] * du[1] + b[i] * u, v)
              for i, v in enumerate((sx, sy)))
    return out + c[0] * du[0] + c[1] * du[1] + d * u


def test_divergence_apply_matches_sympy():
    op = EllipticOperator(((1 + x * x, y), (0.5, 2)), (x, y * y), (1, -x), x * y)
    u = fld.exp(x) * y ** 2 + x ** 3
    su = sp.exp(sx) * sy ** 2 + sx ** 3
    ref = _sym_div(((1 + sx ** 2, sy), (sp.Rational(1, 2), 2)), (sx, sy ** 2), (1, -sx),
                   sx * sy, su)
    pts = (np.array([0.2, -0.6, 0.9]), np.array([0.1, 0.5, -0.3]))
    np.testing.assert_allclose(evaluate(apply(op, u), pts),
                               sp.lambdify((sx, sy), ref)(*pts), rtol=1e-12)


def test_nondivergence_apply():
    op = diagonal_operator((1 + x * x, 2), c=(y, 0), d=3)
    u = x ** 2 * y
    # (1 + x^2) 2y + 0 + y 2xy + 3 x^2 y
    expect = (1 + x * x) * 2 * y + y * 2 * x * y + 3 * x * x * y
    pts = (np.linspace(-1, 1, 7), np.linspace(1, -1, 7))
    np.testing.assert_allclose(evaluate(apply(op, u), pts), evaluate(expect, pts),
                               rtol=1e-13, atol=1e-14)


def test_adjoint_coefficient_map():
    op = EllipticOperator(((1, x), (y, 2)), (x, 1), (y, 3), 5)
    adj = op.adjoint()
    assert adj.a[0][1] is op.a[1][0]
    assert evaluate(adj.b[0], (0.5, 0.25)) == -0.25
    assert evaluate(adj.c[1], (0.5, 0.25)) == -1
    back = adj.adjoint()
    pts = (0.3, -0.7)
    for i in range(2):
        assert evaluate(back.b[i], pts) == evaluate(op.b[i], pts)
        assert evaluate(back.c[i], pts) == evaluate(op.c[i], pts)


@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_adjoint_pairing_is_a_divergence(px, py):
    # v L u - u L* v = d_i(v a^{ij} d_j u - u a^{ji} d_j v + (b^i + c^i) u v)
    a = ((1 + x * x, 0.3), (0.3, 2 + y))
    b, c = (x, y), (y * y, 1)
    op = EllipticOperator(a, b, c, 0.7)
    u, v = fld.exp(x * y), 1 + x * y * y
    lhs = apply(op, u) * v - apply(op.adjoint(), v) * u
    flux = [add_flux(a, b, c, u, v, i) for i in range(2)]
    rhs = flux[0].partial(0) + flux[1].partial(1)
    assert evaluate(lhs, (px, py)) == pytest.approx(evaluate(rhs, (px, py)), abs=1e-12)


def add_flux(a, b, c, u, v, i):
    return (v * (a[i][0] * u.partial(0) + a[i][1] * u.partial(1))
            - u * (a[0][i] * v.partial(0) + a[1][i] * v.partial(1))
            + (b[i] + c[i]) * u * v)


def test_constructor_validation():
    with pytest.raises(DimensionMismatch):
        EllipticOperator(((1, 0),))
    with pytest.raises(ValueError):
        EllipticOperator(((1, 0), (0, 1)), b=(x, 0), form=NONDIVERGENCE)
    with pytest.raises(DimensionMismatch):
        apply(laplace(2), Var(2))


def test_residual_norm_of_harmonic():
    assert residual_norm(laplace(2), x ** 3 - 3 * x * y * y, BOX, 17) == (0.0, 0.0)


def test_dirichlet_exact_for_quadratics():
    sol = dirichlet_solve(DirichletProblem(laplace(2), BOX, x * x - y * y + 3 * x * y, 33))
    exact = sample(x * x - y * y + 3 * x * y, BOX, 33).values
    assert np.max(np.abs(sol.values - exact)) < 1e-12
    assert sol.residual < 1e-10


def test_dirichlet_second_order_variable_coefficient():
    # (a u')' = 0 for a = 1 / (1 + x^2 / 4) and u = x + x^3 / 12
    op = EllipticOperator(((1 / (1 + x * x / 4), 0), (0, 1 + y * y)))
    u = x + x ** 3 / 12
    hs, errs = [], []
    for m in (17, 33, 65):
        sol = dirichlet_solve(DirichletProblem(op, BOX, u, m))
        hs.append(max(sol.spacing))
        errs.append(float(np.max(np.abs(sol.values - sample(u, BOX, m).values))))
    assert fit_order(hs, errs) == pytest.approx(2.0, abs=0.3)


def test_discrete_apply_on_quadratic():
    vals = sample(x * x + 2 * y * y, BOX, 9).values
    np.testing.assert_allclose(discrete_apply(laplace(2), vals, BOX), 6.0, rtol=1e-12)


def test_ellipticity_screen():
    X, Y = np.meshgrid(np.linspace(-1, 1, 5), np.linspace(-1, 1, 5), indexing="ij")
    assert ellipticity_screen(laplace(2), (X, Y)) == 1.0
    with pytest.raises(EllipticityViolated):
        ellipticity_screen(EllipticOperator(((x, 0), (0, 1))), (X, Y))
    # skew parts do not count against ellipticity
    assert ellipticity_screen(EllipticOperator(((1, 5), (-5, 1))), (X, Y)) == pytest.approx(1)
