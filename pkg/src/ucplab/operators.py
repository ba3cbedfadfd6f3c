"""Second-order elliptic operators: symbolic application, residual norms and a
finite-difference Dirichlet solver in two dimensions.

Sign convention (used throughout the package)::

    divergence form     L u = d_i(a^{ij} d_j u + b^i u) + c^i d_i u + d u
    non-divergence form L u = a^{ij} d_i d_j u + c^i d_i u + d u

so the Laplacian is ``laplace(n)`` with a = Id and everything else zero.
The non-divergence form has no b term.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatch, EllipticityViolated, SingularSystem
from .field import (ZERO, Expr, GridField, add, as_expr, evaluate, evaluate_many,
                    grid_axes, mul, sample)

DIVERGENCE = "divergence"
NONDIVERGENCE = "nondivergence"


@dataclass(frozen=True, eq=False)
class EllipticOperator:
    """Coefficient bundle of a scalar second-order operator.

    Parameters
    ----------
    a : n x n nested sequence of expressions
        Principal coefficients a^{ij}.
    b : length-n sequence, optional
        Drift inside the divergence (divergence form only).
    c : length-n sequence, optional
        Drift outside the divergence.
    d : expression, optional
        Zero-order coefficient.
    form : {"divergence", "nondivergence"}
    """

    a: tuple
    b: tuple = None
    c: tuple = None
    d: Expr = None
    form: str = DIVERGENCE

    def __post_init__(self):
        a = tuple(tuple(as_expr(e) for e in row) for row in self.a)
        n = len(a)
        if n == 0 or any(len(r) != n for r in a):
            raise DimensionMismatch("principal part must be a square matrix")
        b = tuple(as_expr(e) for e in (self.b if self.b is not None else (0,) * n))
        c = tuple(as_expr(e) for e in (self.c if self.c is not None else (0,) * n))
        if len(b) != n or len(c) != n:
            raise DimensionMismatch("drift vectors must have length n")
        if self.form not in (DIVERGENCE, NONDIVERGENCE):
            raise ValueError(f"unknown form {self.form!r}")
        if self.form == NONDIVERGENCE and not all(e.is_zero() for e in b):
            raise ValueError("non-divergence form has no divergence drift b")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", as_expr(self.d if self.d is not None else 0))

    @property
    def n(self) -> int:
        return len(self.a)

    def adjoint(self) -> "EllipticOperator":
        """Formal L2 adjoint (divergence form only): a -> a^T, b -> -c, c -> -b."""
        if self.form != DIVERGENCE:
            raise ValueError("adjoint is implemented for divergence form only")
        n = self.n
        aT = tuple(tuple(self.a[j][i] for j in range(n)) for i in range(n))
        return EllipticOperator(aT, tuple(-e for e in self.c), tuple(-e for e in self.b),
                                self.d, DIVERGENCE)

    def principal_at(self, coords) -> np.ndarray:
        """Principal matrices at sample points, shape (..., n, n)."""
        vals = evaluate_many([e for row in self.a for e in row], coords)
        shape = vals[0].shape
        return np.stack(vals, -1).reshape(shape + (self.n, self.n))


def laplace(n: int) -> EllipticOperator:
    return EllipticOperator(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))


def diagonal_operator(diag: Sequence, c: Sequence | None = None, d=None,
                      form: str = NONDIVERGENCE) -> EllipticOperator:
    n = len(diag)
    a = tuple(tuple(diag[i] if i == j else 0 for j in range(n)) for i in range(n))
    return EllipticOperator(a, None, c, d, form)


def apply(op: EllipticOperator, u) -> Expr:
    """Exact symbolic L u."""
    u = as_expr(u)
    n = op.n
    if u.nvars > n:
        raise DimensionMismatch(f"{n}-d operator applied to a function of x{u.nvars - 1}")
    du = [u.partial(j) for j in range(n)]
    terms = []
    if op.form == DIVERGENCE:
        for i in range(n):
            flux = add(*(mul(op.a[i][j], du[j]) for j in range(n)), mul(op.b[i], u))
            terms.append(flux.partial(i))
    else:
        for i in range(n):
            for j in range(n):
                terms.append(mul(op.a[i][j], du[j].partial(i)))
    terms.extend(mul(op.c[i], du[i]) for i in range(n))
    terms.append(mul(op.d, u))
    return add(*terms)


def residual_norm(op: EllipticOperator, u, box, resolution) -> tuple[float, float]:
    """Sup norm and discrete L2 norm (cell-weighted node sum) of L u on a grid."""
    if len(box) != op.n:
        raise DimensionMismatch("box dimension differs from operator dimension")
    g = sample(apply(op, u), box, resolution)
    vol = float(np.prod(g.spacing))
    v = np.abs(g.values)
    return float(v.max()), float(np.sqrt(np.sum(v ** 2) * vol))


# -- Dirichlet solver --------------------------------------------------------------

@dataclass(frozen=True)
class DirichletProblem:
    op: EllipticOperator
    box: tuple
    boundary: Expr
    resolution: int | tuple = 65


@dataclass(frozen=True, eq=False)
class DirichletSolution(GridField):
    """Discrete solution together with its relative algebraic residual."""

    residual: float = 0.0
    min_eigenvalue: float = 0.0


def ellipticity_screen(op: EllipticOperator, coords) -> float:
    """Smallest eigenvalue of the symmetric principal part over the points.

    Raises EllipticityViolated at the first point where it is not positive.
    """
    A = op.principal_at(coords)
    sym = 0.5 * (A + np.swapaxes(A, -1, -2))
    lam = np.linalg.eigvalsh(sym)[..., 0]
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        k = int(np.argmin(np.where(np.isfinite(lam), lam, -np.inf)))
        where = tuple(float(np.ravel(c)[k]) for c in np.broadcast_arrays(*coords))
        raise EllipticityViolated(f"principal part not positive at {where} "
                                  f"(min eigenvalue {np.ravel(lam)[k]:.3g})")
    return float(lam.min())


def assemble(op: EllipticOperator, box, resolution):
    """Sparse matrix of the discrete operator on all nodes.

    Rows of boundary nodes are left empty; the caller eliminates them.
    Divergence form uses staggered fluxes with coefficients at cell-face
    midpoints and centered cross derivatives on each face.
    """
    if op.n != 2:
        raise DimensionMismatch("the finite-difference solver is two-dimensional")
    res = (resolution, resolution) if np.isscalar(resolution) else tuple(resolution)
    mx, my = res
    xs, ys = grid_axes(box, res)
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    index = np.arange(mx * my).reshape(mx, my)
    interior = (slice(1, -1), slice(1, -1))
    I, J = np.meshgrid(np.arange(1, mx - 1), np.arange(1, my - 1), indexing="ij")
    rows, cols, data = [], [], []

    def put(di, dj, coef):
        rows.append(index[I, J].ravel())
        cols.append(index[I + di, J + dj].ravel())
        data.append(np.broadcast_to(coef, I.shape).ravel())

    Xi, Yi = X[interior], Y[interior]
    if op.form == DIVERGENCE:
        (a11, a12), (a21, a22) = op.a
        for sgn in (+1, -1):
            # x faces at (x +- hx/2, y)
            f11, f12, fb1 = evaluate_many([a11, a12, op.b[0]], (Xi + sgn * hx / 2, Yi))
            # outward face flux a (u_n - u_c)/hx * sgn + f12 dy u + b (u_n + u_c)/2
            # enters L u as sgn * flux / hx
            put(sgn, 0, (f11 / hx + sgn * fb1 / 2) / hx)
            put(0, 0, (-f11 / hx + sgn * fb1 / 2) / hx)
            q = sgn * f12 / (4 * hy * hx)
            for di in (0, sgn):
                put(di, 1, q)
                put(di, -1, -q)
            # y faces
            f22, f21, fb2 = evaluate_many([a22, a21, op.b[1]], (Xi, Yi + sgn * hy / 2))
            put(0, sgn, (f22 / hy + sgn * fb2 / 2) / hy)
            put(0, 0, (-f22 / hy + sgn * fb2 / 2) / hy)
            q = sgn * f21 / (4 * hx * hy)
            for dj in (0, sgn):
                put(1, dj, q)
                put(-1, dj, -q)
    else:
        (a11, a12), (a21, a22) = op.a
        v11, v12, v21, v22 = evaluate_many([a11, a12, a21, a22], (Xi, Yi))
        put(1, 0, v11 / hx ** 2)
        put(-1, 0, v11 / hx ** 2)
        put(0, 0, -2 * v11 / hx ** 2)
        put(0, 1, v22 / hy ** 2)
        put(0, -1, v22 / hy ** 2)
        put(0, 0, -2 * v22 / hy ** 2)
        cross = (v12 + v21) / (4 * hx * hy)
        for di, dj, s in ((1, 1, 1), (-1, -1, 1), (1, -1, -1), (-1, 1, -1)):
            put(di, dj, s * cross)
    c1, c2, dd = evaluate_many([op.c[0], op.c[1], op.d], (Xi, Yi))
    put(1, 0, c1 / (2 * hx))
    put(-1, 0, -c1 / (2 * hx))
    put(0, 1, c2 / (2 * hy))
    put(0, -1, -c2 / (2 * hy))
    put(0, 0, dd)
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(mx * my, mx * my))
    A.sum_duplicates()
    return A, (X, Y), index


def dirichlet_solve(problem: DirichletProblem, rtol: float = 1e-10) -> DirichletSolution:
    """Solve L u = 0 in the box with u = boundary on its edges.

    The linear system is factorized directly (SuperLU); one step of
    iterative refinement is applied if the relative residual exceeds
    ``rtol``.
    """
    op, box = problem.op, problem.box
    if op.n != 2 or len(box) != 2:
        raise DimensionMismatch("dirichlet_solve is two-dimensional")
    A, (X, Y), index = assemble(op, box, problem.resolution)
    mx, my = X.shape
    lam_min = ellipticity_screen(op, (X, Y))
    is_bd = np.ones((mx, my), dtype=bool)
    is_bd[1:-1, 1:-1] = False
    g = np.asarray(evaluate(problem.boundary, (X, Y)), dtype=float)
    if not np.all(np.isfinite(g[is_bd])):
        raise ValueError("boundary data is not finite on the box boundary")
    ub = np.where(is_bd, g, 0.0).ravel()
    inner = index[1:-1, 1:-1].ravel()
    Aii = A[inner][:, inner].tocsc()
    rhs = -(A[inner] @ ub)
    try:
        lu = spla.splu(Aii)
    except RuntimeError as exc:
        raise SingularSystem(f"discrete operator is singular: {exc}") from exc
    sol = lu.solve(rhs)
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("factorization produced non-finite values")
    scale = max(np.linalg.norm(rhs), 1e-300)
    rel = np.linalg.norm(Aii @ sol - rhs) / scale
    if rel > rtol:
        sol = sol + lu.solve(rhs - Aii @ sol)
        rel = np.linalg.norm(Aii @ sol - rhs) / scale
    u = ub.copy()
    u[inner] = sol
    return DirichletSolution(box, u.reshape(mx, my), residual=float(rel),
                             min_eigenvalue=lam_min)


def discrete_apply(op: EllipticOperator, values: np.ndarray, box) -> np.ndarray:
    """Apply the assembled stencil to nodal values; interior nodes only."""
    A, _, index = assemble(op, box, values.shape)
    out = (A @ values.ravel()).reshape(values.shape)
    return out[1:-1, 1:-1]
