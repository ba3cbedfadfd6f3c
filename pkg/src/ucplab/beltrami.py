"""Beltrami coefficients of planar divergence-form operators and local charts.

For f = u + i v with v the A-conjugate of u,

    d f / d zbar = mu d f / d z + nu conj(d f / d z),

with mu and nu algebraic in A. Wirtinger derivatives are
d/dz = (d_x - i d_y) / 2 and d/dzbar = (d_x + i d_y) / 2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .conjugates import conjugate
from .errors import (DegenerateIplusA, EllipticityViolated, GradientVanishesAtBase,
                     NotPositive, NotSymmetric)
from .field import Expr, GridField, Var, add, as_expr, evaluate_many, fd_derivative
from .operators import DirichletProblem, EllipticOperator, dirichlet_solve


def _values(A, mesh=None) -> np.ndarray:
    """A as an array (..., 2, 2); expression entries are evaluated on ``mesh``."""
    if isinstance(A, np.ndarray):
        return A.astype(float)
    flat = [e for row in A for e in row]
    if any(isinstance(e, Expr) for e in flat):
        if mesh is None:
            raise ValueError("expression coefficients need a mesh")
        vals = evaluate_many(flat, mesh)
        return np.stack(vals, -1).reshape(vals[0].shape + (2, 2))
    return np.asarray(A, dtype=float)


@dataclass
class BeltramiPair:
    mu: np.ndarray
    nu: np.ndarray

    @property
    def k(self) -> float:
        return float(np.max(np.abs(self.mu) + np.abs(self.nu)))

    @property
    def admissible(self) -> bool:
        return self.k < 1


def beltrami_coeffs(A, mesh=None) -> BeltramiPair:
    """mu and nu of the Beltrami system of div(A grad u) = 0.

    Raises
    ------
    DegenerateIplusA
        If det(I + A) vanishes at a sample.
    """
    A = _values(A, mesh)
    a11, a12, a21, a22 = A[..., 0, 0], A[..., 0, 1], A[..., 1, 0], A[..., 1, 1]
    detA = a11 * a22 - a12 * a21
    dIA = (1 + a11) * (1 + a22) - a12 * a21
    if np.any(np.abs(dIA) <= 1e-14):
        raise DegenerateIplusA(f"det(I + A) = {float(np.min(np.abs(dIA))):.3g}")
    mu = (a22 - a11 - 1j * (a12 + a21)) / dIA
    nu = (1 - detA + 1j * (a12 - a21)) / dIA
    return BeltramiPair(mu, nu)


def reduced_lambda(pair: BeltramiPair) -> np.ndarray:
    """lam = -2 i nu / (1 + |nu|^2 - |mu|^2), checked against |lam| <= 2k/(k^2 + 1).

    The bound is checked pointwise with k = |mu| + |nu| at each sample,
    which implies the bound with the global k.

    Raises
    ------
    EllipticityViolated
        If the pair is not admissible or the bound fails somewhere.
    """
    kz = np.abs(pair.mu) + np.abs(pair.nu)
    if not np.all(kz < 1):
        raise EllipticityViolated(f"|mu| + |nu| reaches {float(np.max(kz)):.4g} >= 1")
    lam = -2j * pair.nu / (1 + np.abs(pair.nu) ** 2 - np.abs(pair.mu) ** 2)
    bound = 2 * kz / (kz ** 2 + 1)
    if np.any(np.abs(lam) > bound * (1 + 1e-12) + 1e-15):
        raise EllipticityViolated("|lambda| exceeds 2k / (k^2 + 1)")
    return lam


def tilde_A(lam) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients (A12, A22) of the reduced matrix [[1, A12], [0, A22]]."""
    lam = np.asarray(lam, dtype=complex)
    re, im = lam.real, lam.imag
    if np.any(re >= 1):
        raise EllipticityViolated("Re lambda >= 1")
    return -2 * im / (1 - re), (1 + re) / (1 - re)


def isotropic_mu(A, mesh=None, tol: float = 1e-12) -> np.ndarray:
    """Beltrami coefficient of isotropic coordinates for symmetric positive A.

    With G = sqrt(det A) A^{-1}, mu = (g11 - g22 + 2i g12) / (2 + g11 + g22).

    Raises
    ------
    NotSymmetric, NotPositive
    """
    A = _values(A, mesh)
    scale = 1 + np.max(np.abs(A))
    if np.max(np.abs(A[..., 0, 1] - A[..., 1, 0])) > tol * scale:
        raise NotSymmetric("isotropic coordinates need a symmetric A")
    if np.any(np.linalg.eigvalsh(A)[..., 0] <= 0):
        raise NotPositive("A is not positive definite")
    G = np.sqrt(np.linalg.det(A))[..., None, None] * np.linalg.inv(A)
    g11, g12, g22 = G[..., 0, 0], G[..., 0, 1], G[..., 1, 1]
    mu = (g11 - g22 + 2j * g12) / (2 + g11 + g22)
    if np.any(np.abs(mu) >= 1):
        raise NotPositive("|mu| >= 1")
    return mu


def wirtinger(f: np.ndarray, h) -> tuple[np.ndarray, np.ndarray]:
    """(d f / d z, d f / d zbar) by second-order differences."""
    fx = fd_derivative(f, h[0], 0)
    fy = fd_derivative(f, h[1], 1)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)


@dataclass
class Chart:
    """Local chart f = u + i v with its certificate.

    ``domain`` is the connected component of {Jacobian > 0} containing the
    base node; ``residual`` is the interior sup of the Beltrami residual.
    """

    f: GridField
    base: tuple
    jacobian: np.ndarray
    domain: np.ndarray
    residual: float
    nu_residual: float
    h: float

    def transport(self, values: np.ndarray, points) -> np.ndarray:
        """Nearest-sample transport of source-grid values to image points w."""
        fv = self.f.values[self.domain]
        tree = cKDTree(np.column_stack([fv.real, fv.imag]))
        w = np.asarray(points, dtype=complex).ravel()
        _, idx = tree.query(np.column_stack([w.real, w.imag]))
        return np.asarray(values)[self.domain][idx].reshape(np.shape(points))


def chart_build(A, basepoint=(0.0, 0.0), box=((-1.0, 1.0), (-1.0, 1.0)),
                resolution: int = 129, grad_threshold: float = 1e-6,
                interior: float = 0.75) -> Chart:
    """Generalized isothermal chart near ``basepoint``.

    u1 solves div(A grad u1) = 0 with boundary data x - x(p), v1 is its
    conjugate vanishing at p and f1 = u1 + i v1. The Beltrami residual is
    measured on the concentric box scaled by ``interior``, away from the
    corner singularities of the Dirichlet problem on a square.

    Raises
    ------
    GradientVanishesAtBase
        If |grad u1(p)| < ``grad_threshold``.
    """
    A = tuple(tuple(as_expr(e) for e in row) for row in A)
    x = Var(0)
    sol = dirichlet_solve(DirichletProblem(EllipticOperator(A), box,
                                           add(x, -float(basepoint[0])), resolution))
    u = GridField(box, sol.values)
    h = u.spacing
    xs, ys = u.axes()
    i0 = int(np.argmin(np.abs(xs - basepoint[0])))
    j0 = int(np.argmin(np.abs(ys - basepoint[1])))
    ux = fd_derivative(u.values, h[0], 0)
    uy = fd_derivative(u.values, h[1], 1)
    g0 = float(np.hypot(ux[i0, j0], uy[i0, j0]))
    if g0 < grad_threshold:
        raise GradientVanishesAtBase(f"|grad u1(p)| = {g0:.3g}")
    # u1 is discretely harmonic up to the solver residual
    pair = conjugate(u, A, (xs[i0], ys[j0]), tol=max(1e-8, 10 * sol.residual))
    f = u.values + 1j * pair.v.values
    fz, fzb = wirtinger(f, h)
    bel = beltrami_coeffs(A, u.mesh())
    res = fzb - bel.mu * fz - bel.nu * np.conj(fz)
    X, Y = u.mesh()
    (x0, x1), (y0, y1) = box
    inner = ((np.abs(X - (x0 + x1) / 2) <= interior * (x1 - x0) / 2 + 1e-12)
             & (np.abs(Y - (y0 + y1) / 2) <= interior * (y1 - y0) / 2 + 1e-12))
    jac = np.abs(fz) ** 2 - np.abs(fzb) ** 2
    labels, _ = ndimage.label(jac > 0)
    domain = labels == labels[i0, j0] if labels[i0, j0] else np.zeros_like(jac, bool)
    return Chart(GridField(box, f), (float(xs[i0]), float(ys[j0])), jac, domain,
                 float(np.max(np.abs(res[inner]))), float(np.max(np.abs(bel.nu))), float(max(h)))
