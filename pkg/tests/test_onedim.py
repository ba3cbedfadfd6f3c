import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ucplab import field as fld
from ucplab.counterexamples import cex_1d, vanishing_bump
from ucplab.errors import AffineStructureViolated, MatrixDriftRefused, StepFailure
from ucplab.field import Var
from ucplab.onedim import (CONSISTENT, det_structure_check, div_1d_check,
                           divergence_solution, ode_basis)
from ucplab.scenarios import onedim_bases

t = Var(0)


def test_trivial_basis():
    B = ode_basis()
    np.testing.assert_allclose(B.f1, 1.0, atol=1e-12)
    np.testing.assert_allclose(B.f2, B.t, atol=1e-12)
    assert B.abel_residual <= 1e-10


def test_oscillator_basis():
    B = ode_basis(0.0, 1.0)
    np.testing.assert_allclose(B.f1, np.cos(B.t), atol=1e-9)
    np.testing.assert_allclose(B.f2, np.sin(B.t), atol=1e-9)
    np.testing.assert_allclose(B.wronskian(), 1.0, atol=1e-9)


def test_damped_basis_closed_form():
    B = ode_basis(1.0, 0.0)
    np.testing.assert_allclose(B.f2, 1 - np.exp(-B.t), atol=1e-9)
    np.testing.assert_allclose(B.wronskian(), np.exp(-B.t), rtol=1e-9)


@pytest.mark.parametrize("name,a,b", onedim_bases(), ids=[c[0] for c in onedim_bases()])
def test_abel_identity_all_bases(name, a, b):
    assert ode_basis(a, b).abel_residual <= 1e-8


def test_basis_interpolation():
    B = ode_basis(0.0, 1.0)
    f1, f2 = B(np.array([-0.37, 0.81]))
    np.testing.assert_allclose(f1, np.cos([-0.37, 0.81]), atol=1e-9)
    np.testing.assert_allclose(f2, np.sin([-0.37, 0.81]), atol=1e-9)


def test_step_failure_on_blowup():
    # fast oscillation with a tolerance below what double precision can deliver
    with pytest.raises(StepFailure):
        ode_basis(0.0, 1e6, tol=1e-16)


def test_det_structure_examples():
    B = ode_basis(0.0, 1.0)
    r = det_structure_check(B, [[1, 0], [0, 1]], [[0, 1], [1, 0]])
    assert r.q == [1, 0, -1] and r.exact_order == 0 and r.verdict == CONSISTENT
    r = det_structure_check(B, [[0, 0], [0, 0]], [[1, 1], [1, 1]])
    assert r.exact_order is None and r.verdict == CONSISTENT
    r = det_structure_check(B, [[1, 0], [0, 0]], [[0, 0], [0, 1]])
    assert r.exact_order == 1 and r.numeric_order == "1"


@settings(max_examples=60)
@given(st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_det_structure_random(m, seed):
    rng = np.random.default_rng(seed)
    B = ode_basis(t * t + 1, 3 * t) if seed % 2 else ode_basis(0.0, 1.0)
    C = rng.integers(-2, 3, (m, m)).tolist()
    D = rng.integers(-2, 3, (m, m)).tolist()
    assert det_structure_check(B, C, D).verdict == CONSISTENT


def test_matrix_drift_refused():
    res = cex_1d(vanishing_bump(0.25, 0.5, n=1))
    with pytest.raises(MatrixDriftRefused):
        det_structure_check(res, [[1]], [[0]])
    with pytest.raises(TypeError):
        det_structure_check(res, [[1]], [[0]])


def test_divergence_solution():
    f = divergence_solution(1 + t * t)
    s = np.array([0.5, -0.8])
    np.testing.assert_allclose(f(s), np.arctan(s), rtol=1e-12)


def test_div_1d_examples():
    f = divergence_solution(2 + t)
    one = lambda s: np.ones_like(s)
    r = div_1d_check([[f, one], [one, f]])
    np.testing.assert_allclose(r.p.coef, [-1, 0, 1], atol=1e-8)
    assert r.root_multiplicity == 0 and r.verdict == CONSISTENT
    const = div_1d_check([[f, lambda s: 2 + 0 * s], [lambda s: 3 + 0 * s, lambda s: 5 + 0 * s]])
    assert const.verdict == CONSISTENT


def test_div_1d_random_affine():
    f = divergence_solution(1 + t * t)
    rng = np.random.default_rng(4)
    for _ in range(200):
        al, be = rng.integers(-2, 3, (2, 3, 3))
        F = [[(lambda s, a=int(al[i, j]), b=int(be[i, j]): a * f(s) + b) for j in range(3)]
             for i in range(3)]
        F[0][0] = f
        assert div_1d_check(F, samples=41).verdict == CONSISTENT


def test_affine_structure_violated():
    f = divergence_solution(1.0)
    with pytest.raises(AffineStructureViolated):
        div_1d_check([[f, lambda s: s ** 2], [lambda s: 1 + 0 * s, f]])
