import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ucplab import field as fld
from ucplab.errors import DimensionMismatch, MetricNotIsothermal
from ucplab.field import Var
from ucplab.ym import (Connection2D, constant_matrix, curvature, expansion_oracle,
                       gauge_residuals, gauge_transform, madd, mat, matmul, mevaluate, mscale,
                       oracle_gap, twisted_laplacian_apply, zeros)

x, y = Var(0), Var(1)
P = np.array([[0, 1], [-1, 0]], dtype=complex)
Q = np.array([[1j, 0], [0, -1j]])
PTS = tuple(np.random.default_rng(0).uniform(-1, 1, (2, 50)))


def test_flat_connections():
    assert np.max(np.abs(mevaluate(curvature(Connection2D(zeros(2), zeros(2))), PTS))) == 0
    c = Connection2D(constant_matrix(np.eye(2)), constant_matrix(2 * np.eye(2)))
    assert np.max(np.abs(mevaluate(curvature(c), PTS))) == 0


def test_commutator_curvature():
    F = mevaluate(curvature(Connection2D(constant_matrix(P), constant_matrix(Q))), PTS)
    np.testing.assert_allclose(F, np.broadcast_to(P @ Q - Q @ P, F.shape), atol=1e-14)


def test_gauge_residual_examples():
    g = gauge_residuals(Connection2D(constant_matrix(Q), zeros(2)))
    assert g.coulomb_sup == 0
    c = Connection2D(mscale(x, constant_matrix(P)), mscale(-1.0 * y, constant_matrix(P)))
    g = gauge_residuals(c)
    assert g.coulomb_sup == 0
    # harmonic = (x^2 + y^2) P^2 and P^2 = -Id
    H = mevaluate(g.harmonic, PTS)
    r2 = (PTS[0] ** 2 + PTS[1] ** 2)[:, None, None]
    np.testing.assert_allclose(H, r2 * (P @ P), atol=1e-14)
    assert g.harmonic_sup == pytest.approx(2.0)


def test_gauge_covariance():
    A1 = madd(mscale(x * y, constant_matrix(P)), constant_matrix(Q))
    A2 = mscale(x * x - y, constant_matrix(Q))
    c = Connection2D(A1, A2, unitary=True)
    rng = np.random.default_rng(2)
    H, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    Fa = mevaluate(curvature(c), PTS)
    Fb = mevaluate(curvature(gauge_transform(c, H)), PTS)
    np.testing.assert_allclose(H.conj().T @ Fa @ H, Fb, atol=1e-12)


def test_skew_hermitian_closure():
    A1 = madd(mscale(x * y, constant_matrix(P)), mscale(y, constant_matrix(Q)))
    A2 = mscale(fld.exp(x), constant_matrix(Q))
    F = mevaluate(curvature(Connection2D(A1, A2, unitary=True)), PTS)
    assert np.max(np.abs(F + np.conj(np.swapaxes(F, -1, -2)))) <= 1e-14


def test_unitary_validation():
    with pytest.raises(ValueError):
        Connection2D(constant_matrix(np.eye(2)), zeros(2), unitary=True)
    with pytest.raises(DimensionMismatch):
        Connection2D(zeros(2), zeros(3))
    with pytest.raises(MetricNotIsothermal):
        Connection2D(zeros(2), zeros(2), lam=x)


def test_zero_connection_reduces_to_laplacian():
    c = Connection2D(zeros(2), zeros(2), lam=2 + x * x)
    F = mat([[x * x * y, fld.exp(y)], [x, y ** 3]])
    got = mevaluate(twisted_laplacian_apply(c, F), PTS)
    lap = [[-(e.partial(0).partial(0) + e.partial(1).partial(1)) / (2 + x * x) for e in r]
           for r in F]
    np.testing.assert_allclose(got, mevaluate(mat(lap), PTS), atol=1e-13)
    H = mat([[x * y, x * x - y * y], [1, x]])
    assert np.max(np.abs(mevaluate(twisted_laplacian_apply(c, H), PTS))) <= 1e-10


def test_constant_connection_constant_field():
    c = Connection2D(constant_matrix(P), constant_matrix(Q), lam=2.0)
    F = constant_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]))
    got = mevaluate(twisted_laplacian_apply(c, F), PTS)
    # d*A = 0 for constant A; -g^{ij} A_i A_j F = -(P^2 + Q^2) F / 2
    expect = -(P @ P + Q @ Q) @ np.array([[1.0, 2.0], [3.0, 4.0]]) / 2
    np.testing.assert_allclose(got, np.broadcast_to(expect, got.shape), atol=1e-14)


@settings(max_examples=15)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_formula_matches_oracle_and_is_linear(s1, s2):
    A1 = madd(mscale(x * y, constant_matrix(P)), constant_matrix(Q))
    A2 = madd(mscale(x * x - y, constant_matrix(Q)), mscale(y, constant_matrix(P)))
    c = Connection2D(A1, A2, lam=1 + x * x + 0.5 * y * y)
    F = mat([[x * y * y, fld.exp(x)], [1 + y, x ** 3]])
    G = mat([[y, x * y], [fld.exp(y), 2]])
    assert oracle_gap(c, F, PTS) <= 1e-10
    combo = madd(mscale(s1, F), mscale(s2, G))
    lhs = mevaluate(twisted_laplacian_apply(c, combo), PTS)
    rhs = (s1 * mevaluate(twisted_laplacian_apply(c, F), PTS)
           + s2 * mevaluate(twisted_laplacian_apply(c, G), PTS))
    np.testing.assert_allclose(lhs, rhs, atol=1e-10 * (1 + np.max(np.abs(rhs))))


def test_isothermal_metric_argument():
    c = Connection2D(constant_matrix(P), zeros(2))
    F = mat([[x, y], [y, x]])
    a = mevaluate(twisted_laplacian_apply(c, F, metric=((3, 0), (0, 3))), PTS)
    b = mevaluate(expansion_oracle(Connection2D(constant_matrix(P), zeros(2), lam=3), F), PTS)
    np.testing.assert_allclose(a, b, atol=1e-14)
    with pytest.raises(MetricNotIsothermal):
        twisted_laplacian_apply(c, F, metric=((1, 0), (0, 2)))
    with pytest.raises(DimensionMismatch):
        twisted_laplacian_apply(c, mat([[x]]))


def test_matmul_constant():
    M = mevaluate(matmul(constant_matrix(P), constant_matrix(Q)), ())
    np.testing.assert_allclose(M, P @ Q)
