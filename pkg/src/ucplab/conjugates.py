"""A-harmonic conjugates and the quotient, multiplier and product reductions.

A function u is A-harmonic when div(A grad u) = 0. Its conjugate v is
defined by grad v = J A grad u with J the rotation by +90 degrees, so for
A = Id the conjugate of x is y and the conjugate of y is -x.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (CriticalSetTooLarge, DomainError, GVanishes, NotHarmonic,
                     NotSymmetric, PathInconsistent, PsiNotPositive, SingularA)
from .field import (ONE, ZERO, Expr, GridField, add, as_expr, evaluate_many, fd_derivative,
                    grid_axes, mul, recip)
from .operators import EllipticOperator, apply, discrete_apply

J = np.array([[0.0, -1.0], [1.0, 0.0]])
IDENTITY = ((ONE, ZERO), (ZERO, ONE))
DEFAULT_BOX = ((-1.0, 1.0), (-1.0, 1.0))


def _matrix(A) -> tuple:
    if A is None:
        return IDENTITY
    A = tuple(tuple(as_expr(e) for e in row) for row in A)
    if len(A) != 2 or any(len(r) != 2 for r in A):
        raise ValueError("A must be a 2 x 2 matrix")
    return A


def _matrix_values(A, mesh) -> np.ndarray:
    vals = evaluate_many([e for r in A for e in r], mesh)
    return np.stack(vals, -1).reshape(mesh[0].shape + (2, 2))


def divergence_residual(u: Expr, A, mesh) -> np.ndarray:
    """div(A grad u) at the mesh nodes, exact."""
    return evaluate_many([apply(EllipticOperator(_matrix(A)), u)], mesh)[0]


# -- conjugates ----------------------------------------------------------------------

@dataclass
class ConjugatePair:
    """u, its conjugate v on the grid and the path-independence certificate.

    ``discrepancy`` is the sup difference of the two staircase integrals and
    ``bound`` the admissible value C h^2.
    """

    u: object
    v: GridField
    A: tuple
    basepoint: tuple
    discrepancy: float
    bound: float
    residual: float


def _staircases(w1, w2, xs, ys, i0, j0):
    """v by x-then-y and by y-then-x trapezoid integration from node (i0, j0)."""
    def cum(f, t, k, axis):
        c = cumulative_trapezoid(f, t, axis=axis, initial=0.0)
        return c - np.take(c, [k], axis=axis)

    row = cum(w1[:, j0], xs, i0, 0)             # along y = y0
    v_xy = row[:, None] + cum(w2, ys, j0, 1)    # then vertical
    col = cum(w2[i0, :], ys, j0, 0)             # along x = x0
    v_yx = col[None, :] + cum(w1, xs, i0, 0)    # then horizontal
    return v_xy, v_yx


def _path_constant(w1, w2, hx, hy, Lx, Ly) -> float:
    """C in the discrepancy bound C h^2 from grid derivatives of the 1-form.

    Trapezoid error along the legs contributes (Lx + Ly) M2 / 6; the
    discrete non-closedness of the form contributes Lx Ly M3 / 6.
    """
    def m(values, order, axis, h):
        d = np.diff(values, order, axis=axis) / h ** order
        return float(np.max(np.abs(d))) if d.size else 0.0
    M2 = max(m(w1, 2, 0, hx), m(w2, 2, 1, hy))
    M3 = max(m(w1, 3, 0, hx), m(w1, 3, 1, hy), m(w2, 3, 0, hx), m(w2, 3, 1, hy))
    return (Lx + Ly) * M2 / 6 + Lx * Ly * M3 / 6


def conjugate(u, A=None, basepoint: Sequence[float] = (0.0, 0.0), *,
              box=DEFAULT_BOX, resolution: int = 129, tol: float = 1e-8) -> ConjugatePair:
    """Conjugate v of an A-harmonic u with v(basepoint) = 0.

    Parameters
    ----------
    u : Expr or GridField
        Gradients are exact for expressions and second-order differences
        for grid fields (whose box and shape then fix the grid).
    A : 2 x 2 matrix of expressions, default identity
    tol : float
        Admissible harmonicity residual. For expressions this bounds
        sup |div(A grad u)|; for grid fields it bounds the discrete residual
        scaled by h^2 / sup|u|.

    Raises
    ------
    NotHarmonic
        If the residual exceeds ``tol``.
    PathInconsistent
        If the two staircase integrals differ by more than 10 C h^2.
    """
    A = _matrix(A)
    if isinstance(u, GridField):
        box, shape = u.box, u.shape
    else:
        u = as_expr(u)
        shape = (resolution, resolution)
    xs, ys = grid_axes(box, shape)
    mesh = np.meshgrid(xs, ys, indexing="ij")
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    if isinstance(u, GridField):
        uv = u.values
        res = discrete_apply(EllipticOperator(A), uv, box)
        scale = max(float(np.max(np.abs(uv))), 1e-300)
        residual = float(np.max(np.abs(res))) * max(hx, hy) ** 2 / scale
        grad = np.stack([fd_derivative(uv, hx, 0), fd_derivative(uv, hy, 1)], -1)
    else:
        residual = float(np.max(np.abs(divergence_residual(u, A, mesh))))
        grad = np.stack(evaluate_many([u.partial(0), u.partial(1)], mesh), -1)
    if residual > tol:
        raise NotHarmonic(f"div(A grad u) residual {residual:.3g} exceeds {tol:.3g}")
    Av = _matrix_values(A, mesh)
    w = np.einsum("ij,...jk,...k->...i", J, Av, grad)
    i0 = int(np.argmin(np.abs(xs - basepoint[0])))
    j0 = int(np.argmin(np.abs(ys - basepoint[1])))
    if abs(xs[i0] - basepoint[0]) > 1e-9 * (1 + abs(basepoint[0])) or \
            abs(ys[j0] - basepoint[1]) > 1e-9 * (1 + abs(basepoint[1])):
        raise DomainError(f"basepoint {tuple(basepoint)} is not a grid node")
    v1, v2 = _staircases(w[..., 0], w[..., 1], xs, ys, i0, j0)
    disc = float(np.max(np.abs(v1 - v2)))
    C = _path_constant(w[..., 0], w[..., 1], hx, hy, xs[-1] - xs[0], ys[-1] - ys[0])
    h2 = max(hx, hy) ** 2
    # round-off allowance for forms integrated exactly by the trapezoid rule
    floor = 1e-12 * (1.0 + float(np.max(np.abs(v1))))
    if disc > max(10 * C * h2, floor):
        raise PathInconsistent(f"staircase integrals differ by {disc:.3g} "
                               f"(bound 10 C h^2 = {10 * C * h2:.3g})")
    return ConjugatePair(u, GridField(box, 0.5 * (v1 + v2)), A, (float(xs[i0]), float(ys[j0])),
                         disc, C * h2, residual)


# -- the conjugate coefficient matrix ------------------------------------------------

def a_star(A, tol: float = 1e-12):
    """A* = -J A^{-1} J, cross-checked against A^T / det A.

    Parameters
    ----------
    A : array (..., 2, 2)

    Returns
    -------
    (A*, discrepancy)
    """
    A = np.asarray(A, dtype=float)
    det = np.linalg.det(A)
    scale = np.linalg.norm(A, axis=(-2, -1)) ** 2
    if np.any(np.abs(det) <= 1e-14 * scale):
        raise SingularA(f"det A = {float(np.min(np.abs(det))):.3g} is numerically zero")
    first = -np.einsum("ij,...jk,kl->...il", J, np.linalg.inv(A), J)
    second = np.swapaxes(A, -1, -2) / det[..., None, None]
    disc = float(np.max(np.abs(first - second) / np.sqrt(scale)[..., None, None]))
    if disc > tol:
        raise SingularA(f"the two formulas for A* disagree by {disc:.3g}")
    return second, disc


def a_star_exprs(A) -> tuple:
    """A^T / det A as expressions."""
    A = _matrix(A)
    inv_det = recip(add(mul(A[0][0], A[1][1]), mul(-1.0, A[0][1], A[1][0])))
    return tuple(tuple(mul(A[j][i], inv_det) for j in range(2)) for i in range(2))


# -- quotient reduction --------------------------------------------------------------

@dataclass
class QuotientReduction:
    coefficients: tuple   # g^2 A
    quotient: Expr        # f / g
    residual: float
    g_min: float


def quotient_reduce(f, g, A=None, *, box=DEFAULT_BOX, resolution: int = 65,
                    tol: float = 1e-10, g_floor: float = 1e-8) -> QuotientReduction:
    """f / g solves div(g^2 A grad(f / g)) = 0 whenever f and g are A-harmonic.

    Raises
    ------
    NotHarmonic
        If f or g is not A-harmonic to ``tol`` on the grid.
    GVanishes
        If |g| drops to ``g_floor`` somewhere on the grid.
    """
    A = _matrix(A)
    f, g = as_expr(f), as_expr(g)
    mesh = np.meshgrid(*grid_axes(box, (resolution,) * 2), indexing="ij")
    for name, e in (("f", f), ("g", g)):
        r = float(np.max(np.abs(divergence_residual(e, A, mesh))))
        if r > tol:
            raise NotHarmonic(f"{name} is not A-harmonic: residual {r:.3g}")
    gv = evaluate_many([g], mesh)[0]
    k = np.unravel_index(np.argmin(np.abs(gv)), gv.shape)
    g_min = float(np.abs(gv[k]))
    if g_min <= g_floor:
        raise GVanishes(f"|g| = {g_min:.3g} at {(float(mesh[0][k]), float(mesh[1][k]))}")
    g2 = mul(g, g)
    new_A = tuple(tuple(mul(g2, e) for e in row) for row in A)
    q = mul(f, recip(g))
    residual = float(np.max(np.abs(divergence_residual(q, new_A, mesh))))
    return QuotientReduction(new_A, q, residual, g_min)


# -- multiplier reduction ------------------------------------------------------------

@dataclass
class MultiplierCertificate:
    """Residual of d_i(psi^2 (a^{ij} d_j v + (b^i + c^i) v)) with v = phi / psi.

    ``L_phi`` and ``L_star_psi`` are the sup residuals of the hypotheses.
    """

    residual: float
    L_phi: float
    L_star_psi: float
    psi_min: float
    v: object
    h: float | None = None


def _grad_fd(values, h):
    return [fd_derivative(values, h[i], i) for i in range(2)]


def multiplier_reduce(A, b, c, d, phi, psi, *, box=DEFAULT_BOX,
                      resolution: int = 65) -> MultiplierCertificate:
    """Divergence-form residual of the multiplier reduction v = phi / psi.

    For symmetric a and L u = d_i(a^{ij} d_j u + b^i u) + c^i d_i u + d u,

        d_i(psi^2 (a^{ij} d_j v + (b^i + c^i) v)) = psi L phi - phi L* psi,

    so the left side vanishes when L phi = 0 and L* psi = 0.

    ``phi`` and ``psi`` are expressions (exact residual) or grid fields on
    a common grid (centered differences, O(h^2)).

    Raises
    ------
    PsiNotPositive
        If psi is not positive on the grid.
    NotSymmetric
        If a^{12} and a^{21} differ.
    """
    A = _matrix(A)
    b = tuple(as_expr(e) for e in (b or (0, 0)))
    c = tuple(as_expr(e) for e in (c or (0, 0)))
    d = as_expr(d or 0)
    op = EllipticOperator(A, b, c, d)
    grid = isinstance(phi, GridField)
    if grid:
        box, shape = phi.box, phi.shape
    else:
        shape = (resolution, resolution)
        phi, psi = as_expr(phi), as_expr(psi)
    mesh = np.meshgrid(*grid_axes(box, shape), indexing="ij")
    a12, a21 = evaluate_many([A[0][1], A[1][0]], mesh)
    if np.max(np.abs(a12 - a21)) > 1e-12 * (1 + np.max(np.abs(a12))):
        raise NotSymmetric("the multiplier identity needs a symmetric principal part")
    psi_v = psi.values if grid else evaluate_many([psi], mesh)[0]
    if not np.all(psi_v > 0):
        k = np.unravel_index(np.argmin(psi_v), psi_v.shape)
        raise PsiNotPositive(f"psi = {psi_v[k]:.3g} at {(float(mesh[0][k]), float(mesh[1][k]))}")
    drift = [add(b[i], c[i]) for i in range(2)]
    if not grid:
        v = mul(phi, recip(psi))
        psi2 = mul(psi, psi)
        red = EllipticOperator(tuple(tuple(mul(psi2, e) for e in r) for r in A),
                               tuple(mul(psi2, e) for e in drift))
        vals = evaluate_many([apply(red, v), apply(op, phi), apply(op.adjoint(), psi)], mesh)
        return MultiplierCertificate(*(float(np.max(np.abs(x))) for x in vals),
                                     float(psi_v.min()), v)
    h = phi.spacing
    Av = _matrix_values(A, mesh)
    Bv = evaluate_many(drift, mesh)
    v = phi.values / psi_v
    gv = _grad_fd(v, h)
    out = 0.0
    for i in range(2):
        flux = psi_v ** 2 * (Av[..., i, 0] * gv[0] + Av[..., i, 1] * gv[1] + Bv[i] * v)
        out = out + fd_derivative(flux, h[i], i)
    inner = (slice(2, -2), slice(2, -2))
    L_phi = _fd_apply(op, phi.values, Av, mesh, h)
    L_star = _fd_apply(op.adjoint(), psi_v, np.swapaxes(Av, -1, -2), mesh, h)
    return MultiplierCertificate(float(np.max(np.abs(out[inner]))),
                                 float(np.max(np.abs(L_phi[inner]))),
                                 float(np.max(np.abs(L_star[inner]))),
                                 float(psi_v.min()), GridField(box, v), float(max(h)))


def _fd_apply(op: EllipticOperator, u, Av, mesh, h):
    """Centered-difference L u for divergence-form data at the nodes."""
    b, c, d = (evaluate_many(list(op.b), mesh), evaluate_many(list(op.c), mesh),
               evaluate_many([op.d], mesh)[0])
    g = _grad_fd(u, h)
    out = d * u
    for i in range(2):
        flux = Av[..., i, 0] * g[0] + Av[..., i, 1] * g[1] + b[i] * u
        out = out + fd_derivative(flux, h[i], i) + c[i] * g[i]
    return out


# -- product verification ------------------------------------------------------------

@dataclass
class ProductVerdict:
    """Outcome of the checks behind w = u v with v conjugate to u.

    du = lam * (star dv) + mu * dv away from the critical set of v.
    """

    passed: bool
    mu_sup: float
    lam_mean: float
    lam_rel_std: float
    product_error: float
    critical_fraction: float
    residuals: dict = dc_field(default_factory=dict)

    @property
    def conjugate(self) -> bool:
        return self.passed


def product_sucp_verify(u, v, w, A=None, *, box=DEFAULT_BOX, resolution: int = 65,
                        tol: float = 1e-6, harmonic_tol: float = 1e-8,
                        critical_threshold: float = 1e-3,
                        max_critical_fraction: float = 0.05) -> ProductVerdict:
    """Check mu = 0, lam constant and w = u v for A-harmonic u, v, w with det A = 1.

    Here <p, q>_A = p^T A q and star dv = A^{-1} J^T grad v, which is
    A-orthogonal to dv and has the same A-length when det A = 1. Nodes with
    |grad v| below ``critical_threshold`` times its maximum are excluded.

    Raises
    ------
    NotHarmonic
        If u, v or w is not A-harmonic to ``harmonic_tol``.
    DomainError
        If det A differs from 1 by more than 1e-10.
    CriticalSetTooLarge
        If more than ``max_critical_fraction`` of the nodes are excluded.
    """
    A = _matrix(A)
    u, v, w = as_expr(u), as_expr(v), as_expr(w)
    mesh = np.meshgrid(*grid_axes(box, (resolution,) * 2), indexing="ij")
    Av = _matrix_values(A, mesh)
    det = np.linalg.det(Av)
    if np.max(np.abs(det - 1)) > 1e-10:
        raise DomainError(f"det A deviates from 1 by {np.max(np.abs(det - 1)):.3g}")
    residuals = {}
    for name, e in (("u", u), ("v", v), ("w", w)):
        residuals[name] = float(np.max(np.abs(divergence_residual(e, A, mesh))))
        if residuals[name] > harmonic_tol:
            raise NotHarmonic(f"{name} is not A-harmonic: residual {residuals[name]:.3g}")
    du = np.stack(evaluate_many([u.partial(0), u.partial(1)], mesh), -1)
    dv = np.stack(evaluate_many([v.partial(0), v.partial(1)], mesh), -1)
    uu, vv, ww = evaluate_many([u, v, w], mesh)
    norm = np.linalg.norm(dv, axis=-1)
    regular = norm > critical_threshold * max(float(norm.max()), 1e-300)
    frac = 1.0 - float(regular.mean())
    if frac > max_critical_fraction:
        raise CriticalSetTooLarge(f"grad v is below threshold on {frac:.1%} of the grid")
    star = np.einsum("...ij,kj,...k->...i", np.linalg.inv(Av), J, dv)  # A^{-1} J^T dv
    A_dot = lambda p, q: np.einsum("...i,...ij,...j->...", p, Av, q)
    mu = A_dot(du, dv)[regular] / A_dot(dv, dv)[regular]
    lam = A_dot(du, star)[regular] / A_dot(star, star)[regular]
    mu_sup = float(np.max(np.abs(mu)))
    lam_mean = float(np.mean(lam))
    lam_std = float(np.std(lam) / max(abs(lam_mean), 1e-300))
    prod_err = float(np.max(np.abs(ww - uu * vv)))
    passed = mu_sup <= tol and lam_std <= tol and prod_err <= tol
    return ProductVerdict(passed, mu_sup, lam_mean, lam_std, prod_err, frac, residuals)
