"""One-dimensional results: ODE bases and the polynomial structure of det F.

For f'' + a f' + b f = 0 every solution is c f1 + d f2 with f1(0) = 1,
f1'(0) = 0, f2(0) = 0, f2'(0) = 1. A matrix of solutions therefore has
det F = p(f1, f2) with p homogeneous of degree m, and since f2 ~ t at 0 the
vanishing order of det F at 0 is the lowest power of z in q(z) = p(1, z).
An order above m forces q = 0 and hence det F = 0 identically.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad, solve_ivp

from .errors import AffineStructureViolated, MatrixDriftRefused, StepFailure
from .field import Expr, evaluate
from .harmpoly import Poly
from .vanishing import vanishing_order

CONSISTENT = "SUCP-CONSISTENT"
VIOLATION = "SUCP-VIOLATION"
RADII_1D = tuple(2.0 ** -k for k in range(2, 7))


def _scalar_fn(c) -> Callable:
    if isinstance(c, Expr):
        return lambda t: evaluate(c, (np.asarray(t, dtype=float),))
    if callable(c):
        return c
    return lambda t: np.full(np.shape(t), float(c))


@dataclass
class OdeBasis:
    """Fundamental solutions of f'' + a f' + b f = 0 sampled on ``t``.

    ``abel_residual`` is the sup relative gap between the Wronskian
    f1 f2' - f2 f1' and exp(-int_0^t a).
    """

    a: Callable
    b: Callable
    t: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    df1: np.ndarray
    df2: np.ndarray
    tol: float
    abel_residual: float
    _dense: tuple = ()

    def wronskian(self) -> np.ndarray:
        return self.f1 * self.df2 - self.f2 * self.df1

    def __call__(self, t):
        """(f1, f2) at arbitrary t in the interval."""
        t = np.asarray(t, dtype=float)
        out = np.empty((2,) + t.shape)
        neg, pos = self._dense
        lo, hi = t < 0, t >= 0
        if lo.any():
            out[0][lo], out[1][lo] = neg(t[lo])[[0, 2]]
        if hi.any():
            out[0][hi], out[1][hi] = pos(t[hi])[[0, 2]]
        return out[0], out[1]


def ode_basis(a=0.0, b=0.0, interval: Sequence[float] = (-1.0, 1.0), tol: float = 1e-11,
              samples: int = 401) -> OdeBasis:
    """Integrate both fundamental solutions from t = 0 with DOP853.

    Raises
    ------
    StepFailure
        If the integrator fails, or the Abel identity misses 10 tol.
    """
    fa, fb = _scalar_fn(a), _scalar_fn(b)
    lo, hi = float(interval[0]), float(interval[1])
    if not lo <= 0 <= hi:
        raise ValueError("the interval must contain 0")

    def rhs(t, y):
        at, bt = float(fa(np.asarray(t))), float(fb(np.asarray(t)))
        return [y[1], -at * y[1] - bt * y[0], y[3], -at * y[3] - bt * y[2]]

    y0 = [1.0, 0.0, 0.0, 1.0]
    # local error control one decade below tol keeps the global Abel gap under 10 tol
    rtol = max(tol / 10, 1e-13)
    dense = []
    for end in (lo, hi):
        if end == 0:
            dense.append(lambda t: np.tile(np.array(y0)[:, None], np.size(t)))
            continue
        sol = solve_ivp(rhs, (0.0, end), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-2,
                        dense_output=True)
        if not sol.success:
            raise StepFailure(f"integration towards t = {end} failed: {sol.message}")
        dense.append(sol.sol)
    t = np.linspace(lo, hi, samples)
    Y = np.empty((4, samples))
    Y[:, t < 0] = dense[0](t[t < 0]) if np.any(t < 0) else Y[:, t < 0]
    Y[:, t >= 0] = dense[1](t[t >= 0])
    # Abel identity against an independent quadrature of a
    def a_int(s0, s1):
        return quad(lambda s: float(fa(np.asarray(s))), s0, s1, epsabs=0.0, epsrel=1e-13)[0]

    k0 = int(np.argmin(np.abs(t)))
    cum = np.zeros(samples)
    cum[k0] = a_int(0.0, t[k0])
    for k in range(k0 + 1, samples):
        cum[k] = cum[k - 1] + a_int(t[k - 1], t[k])
    for k in range(k0 - 1, -1, -1):
        cum[k] = cum[k + 1] - a_int(t[k], t[k + 1])
    expected = np.exp(-cum)
    W = Y[0] * Y[3] - Y[2] * Y[1]
    abel = float(np.max(np.abs(W - expected) / expected))
    basis = OdeBasis(fa, fb, t, Y[0], Y[2], Y[1], Y[3], tol, abel, tuple(dense))
    if abel > 10 * tol:
        raise StepFailure(f"Abel identity residual {abel:.3g} exceeds 10 tol")
    return basis


# -- determinant structure -----------------------------------------------------------

def _poly_det(rows):
    m = len(rows)
    if m == 1:
        return rows[0][0]
    total = 0
    for j in range(m):
        if rows[0][j] == 0:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * _poly_det(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total


def _exact(c):
    if isinstance(c, (int, np.integer)):
        return int(c)
    return Fraction(c).limit_denominator(10 ** 12) if isinstance(c, float) else c


@dataclass
class DetStructure:
    """det F = p(f1, f2) and the implication verdict.

    ``exact_order`` is the lowest power of z in q(z) = p(1, z) (None when
    p = 0); ``numeric_order`` is the ball-mass estimate of the vanishing
    order of the sampled det F at 0.
    """

    p: Poly
    q: list
    exact_order: int | None
    numeric_order: object
    det_sup: float
    verdict: str


def det_structure_check(basis: OdeBasis, C, D, *, zero_tol: float = 1e-9) -> DetStructure:
    """Verify the polynomial structure of det(C f1 + D f2) for integer or rational C, D.

    Raises
    ------
    MatrixDriftRefused
        If ``basis`` is not the basis of a scalar ODE (for example the
        planar or one-dimensional counterexamples with matrix drift).
    """
    if not isinstance(basis, OdeBasis):
        raise MatrixDriftRefused(
            f"{type(basis).__name__} is not a scalar second-order ODE basis; "
            "operators with a matrix drift are outside the polynomial argument")
    C = [[_exact(c) for c in row] for row in C]
    D = [[_exact(d) for d in row] for row in D]
    m = len(C)
    if any(len(r) != m for r in C) or len(D) != m or any(len(r) != m for r in D):
        raise ValueError("C and D must be square of the same size")
    f1, f2 = Poly.var(0), Poly.var(1)
    p = _poly_det([[C[i][j] * f1 + D[i][j] * f2 for j in range(m)] for i in range(m)])
    p = p if isinstance(p, Poly) else Poly.constant(p)
    q = [p.coeff((m - k, k)) for k in range(m + 1)]
    exact_order = next((k for k, c in enumerate(q) if c != 0), None)

    Cf, Df = np.array(C, dtype=float), np.array(D, dtype=float)

    def det_t(t):
        a1, a2 = basis(t)
        M = Cf * np.asarray(a1)[..., None, None] + Df * np.asarray(a2)[..., None, None]
        return np.linalg.det(M)

    det_vals = det_t(basis.t)
    det_sup = float(np.max(np.abs(det_vals)))
    scale = float(np.max(np.abs(Cf)) + np.max(np.abs(Df)) + 1) ** m
    if exact_order is None:
        numeric = None
        ok = det_sup <= zero_tol * scale
    else:
        est = vanishing_order(lambda t: det_t(t), (0.0,), radii=RADII_1D, n_max=m + 1)
        numeric = est.label
        ok = (not est.at_least) and est.order == exact_order and exact_order <= m
    return DetStructure(p, q, exact_order, numeric, det_sup, CONSISTENT if ok else VIOLATION)


# -- divergence type -----------------------------------------------------------------

@dataclass
class Div1DResult:
    """det F = p(f) with p of degree <= m, and the implication verdict."""

    p: Polynomial
    coefficients: list      # affine pairs (alpha, beta) per entry
    fit_residual: float
    root_multiplicity: int | None
    numeric_order: object
    verdict: str


def divergence_solution(a, interval: Sequence[float] = (-1.0, 1.0), tol: float = 1e-12):
    """f with (a f')' = 0, f(0) = 0, f' = 1 / a, as a callable on ``interval``.

    f' = 1 / a is integrated once in each direction from 0 with DOP853
    dense output, so evaluation at many points is cheap.
    """
    fa = _scalar_fn(a)
    lo, hi = float(interval[0]), float(interval[1])
    if not lo <= 0 <= hi:
        raise ValueError("the interval must contain 0")
    rtol = max(tol, 1e-13)

    def rhs(s, f):
        return [1.0 / float(fa(np.asarray(s)))]

    dense = []
    for end in (lo, hi):
        if end == 0:
            dense.append(None)
            continue
        sol = solve_ivp(rhs, (0.0, end), [0.0], method="DOP853", rtol=rtol, atol=rtol * 1e-2,
                        dense_output=True)
        if not sol.success:
            raise StepFailure(f"integration of 1 / a towards {end} failed: {sol.message}")
        dense.append(sol.sol)

    def f(t):
        t = np.asarray(t, dtype=float)
        if np.any(t < lo) or np.any(t > hi):
            raise ValueError(f"t outside the interval {interval}")
        out = np.zeros(t.shape)
        for mask, d in ((t < 0, dense[0]), (t > 0, dense[1])):
            if mask.any():
                out[mask] = d(t[mask])[0]
        return out
    return f


def _multiplicity(p: Polynomial, z0: float, tol: float) -> int | None:
    if np.all(np.abs(p.coef) <= tol):
        return None
    scale = float(np.max(np.abs(p.coef)))
    k, q = 0, p
    while k <= p.degree():
        if abs(q(z0)) > tol * scale * max(1.0, abs(z0)) ** (p.degree() - k):
            return k
        q, k = q.deriv(), k + 1
    return k


def div_1d_check(F, designated: tuple = (0, 0), *, interval=(-1.0, 1.0), samples: int = 201,
                 tol: float = 1e-8) -> Div1DResult:
    """det F as a polynomial in the designated entry f for affine entries.

    Parameters
    ----------
    F : m x m nested sequence of callables of t
        Every entry must be alpha f + beta for the designated entry f.

    Raises
    ------
    AffineStructureViolated
        If an entry is not affine in f to ``tol`` (relative), or f' vanishes.
    """
    m = len(F)
    t = np.linspace(interval[0], interval[1], samples)
    f = np.asarray(F[designated[0]][designated[1]](t), dtype=float)
    df = np.gradient(f, t)
    if np.any(np.abs(df) <= 1e-12 * max(1.0, float(np.max(np.abs(f))))):
        raise AffineStructureViolated("f' vanishes on the interval")
    basis = np.column_stack([f, np.ones_like(f)])
    coeffs, worst = [], 0.0
    for i in range(m):
        row = []
        for j in range(m):
            g = np.broadcast_to(np.asarray(F[i][j](t), dtype=float), t.shape)
            sol, *_ = np.linalg.lstsq(basis, g, rcond=None)
            r = float(np.max(np.abs(basis @ sol - g)) / max(1.0, float(np.max(np.abs(g)))))
            worst = max(worst, r)
            if r > tol:
                raise AffineStructureViolated(f"entry ({i}, {j}) is not affine in f: "
                                              f"residual {r:.3g}")
            row.append((float(sol[0]), float(sol[1])))
        coeffs.append(row)
    p = _poly_det([[Polynomial([b, a]) for a, b in row] for row in coeffs])
    p = p if isinstance(p, Polynomial) else Polynomial([p])
    p = p.trim(tol)
    k0 = int(np.argmin(np.abs(t)))
    z0 = float(F[designated[0]][designated[1]](np.array([0.0]))[0])
    mult = _multiplicity(p, z0, 1e-9)

    def det_t(s):
        M = np.stack([np.stack([np.broadcast_to(np.asarray(F[i][j](s), dtype=float),
                                                np.shape(s)) for j in range(m)], -1)
                      for i in range(m)], -2)
        return np.linalg.det(M)

    if mult is None:
        numeric = None
        ok = float(np.max(np.abs(det_t(t)))) <= 1e3 * tol
    else:
        est = vanishing_order(det_t, (0.0,), radii=RADII_1D, n_max=m + 1)
        numeric = est.label
        ok = (not est.at_least) and est.order == mult and mult <= m
    return Div1DResult(p, coeffs, worst, mult, numeric, CONSISTENT if ok else VIOLATION)
