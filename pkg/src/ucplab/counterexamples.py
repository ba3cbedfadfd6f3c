"""Explicit matrix-valued solutions whose determinant violates unique continuation.

Four families are built here:

* a 2x2 solution of ``Delta F + X F = 0`` in the plane, with X a matrix of
  first-order operators and ``det F = c`` for any prescribed c;
* its one-dimensional analogue ``F'' + X F = 0``;
* diagonal second-order operators in dimension 4, 3 and 2 whose
  coefficients are read off the pointwise kernel of a 3 x 4 matrix, so that
  three prescribed functions f1, f2, f3 are solutions while f1 f2 - f3
  vanishes on a ball but not on the surrounding annulus;
* a divergence-form operator obtained from the 2D diagonal one by a
  positive multiplier psi solving the adjoint Dirichlet problem.

All Laplacians are the positive ones, d_x^2 + d_y^2 (see operators).
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from . import field as fld
from .errors import DegenerateFit, DenominatorVanishes, PositivityLost, RankDeficient
from .field import (ONE, ZERO, Expr, GridField, MatrixField, Var, add, annulus_bump,
                    as_expr, axis_integral, evaluate_many, grid_axes, laplacian, mul,
                    symbolic_det)
from .operators import (DirichletProblem, EllipticOperator, dirichlet_solve)

WUCP = "WUCP-violation"
SUCP = "SUCP-violation"
NOT_CEX = "NOT-a-counterexample"


# -- first-order operator matrices ---------------------------------------------------

@dataclass(frozen=True, eq=False)
class FirstOrderOp:
    """u -> sum_i coeffs[i] * d_i u + zero * u."""

    coeffs: tuple = ()
    zero: Expr = ZERO

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(as_expr(c) for c in self.coeffs))
        object.__setattr__(self, "zero", as_expr(self.zero))

    def __call__(self, u) -> Expr:
        u = as_expr(u)
        terms = [mul(c, u.partial(i)) for i, c in enumerate(self.coeffs)]
        terms.append(mul(self.zero, u))
        return add(*terms)

    def is_zero(self) -> bool:
        return self.zero.is_zero() and all(c.is_zero() for c in self.coeffs)


def d_dx(axis: int, coeff=1.0) -> FirstOrderOp:
    co = [0.0] * (axis + 1)
    co[axis] = coeff
    return FirstOrderOp(tuple(co))


def multiply_by(k) -> FirstOrderOp:
    return FirstOrderOp((), k)


ZERO_OP = FirstOrderOp()


@dataclass(frozen=True, eq=False)
class FirstOrderMatrixOp:
    """Square matrix of first-order operators acting on matrix fields."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(e if isinstance(e, FirstOrderOp) else multiply_by(e) for e in r)
                     for r in self.entries)
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("operator matrix must be square")
        object.__setattr__(self, "entries", rows)

    def __getitem__(self, ij):
        return self.entries[ij[0]][ij[1]]

    def apply(self, F: MatrixField) -> list:
        m = len(self.entries)
        return [[add(*(self.entries[i][k](F[k, j]) for k in range(m))) for j in range(m)]
                for i in range(m)]


@dataclass
class CexCertificate:
    """Numerical certificate of a counterexample construction.

    ``extras`` carries construction-specific diagnostics such as the
    denominator range or the multiplier minimum.
    """

    residual_sup: float
    det_identity_error: float
    inner_det_sup: float | None
    annulus_det_sup: float | None
    coefficient_min: float | None
    verdict: str
    extras: dict = dc_field(default_factory=dict)


def wucp_verdict(inner_sup, annulus_sup, tol) -> bool:
    return inner_sup is not None and inner_sup <= tol and annulus_sup > 10 * tol


def _radial_masks(mesh, r_inner, r_outer):
    r = np.sqrt(sum(m ** 2 for m in mesh))
    return r <= r_inner, (r > r_inner) & (r <= r_outer)


def _sucp_check(det_expr, n, tol, n_max):
    from .vanishing import vanishing_order
    est = vanishing_order(det_expr, (0.0,) * n, n_max=n_max)
    return est


def _verdict(det_vals, mesh, region, tol, det_expr, n, n_max, extras):
    inner = annulus = None
    if region is not None:
        inner_m, ann_m = _radial_masks(mesh, *region)
        inner = float(np.max(np.abs(det_vals[inner_m]))) if inner_m.any() else 0.0
        annulus = float(np.max(np.abs(det_vals[ann_m]))) if ann_m.any() else 0.0
        if wucp_verdict(inner, annulus, tol):
            return inner, annulus, WUCP
    if float(np.max(np.abs(det_vals))) <= tol:
        return inner, annulus, NOT_CEX
    try:
        est = _sucp_check(det_expr, n, tol, n_max)
    except DegenerateFit:
        # zero on a ball around 0 yet nonzero in the box: vanishes on an open set
        extras["vanishing_order"] = "identically zero near 0"
        return inner, annulus, WUCP
    extras["vanishing_order"] = est.label
    if est.at_least:
        return inner, annulus, SUCP
    return inner, annulus, NOT_CEX


def vanishing_bump(r_inner: float, r_outer: float, n: int = 2) -> Expr:
    """Smooth c with c = 0 on |x| <= r_inner and c = 1 on |x| >= r_outer."""
    return fld.hole((0.0,) * n, r_inner, r_outer)


def flat_radial(n: int = 2) -> Expr:
    """exp(-1/|x|^2), vanishing to infinite order at the origin."""
    return fld.flat_exp(fld.squared_radius((0.0,) * n))


# -- planar non-diagonal construction ------------------------------------------------

@dataclass
class CexResult:
    F: MatrixField
    X: FirstOrderMatrixOp
    cert: CexCertificate
    residual_entries: list
    denominator: Expr | None = None

    def __iter__(self):
        return iter((self.F, self.X, self.cert))


def cex_general(c, X12: FirstOrderOp | None = None, X22: FirstOrderOp | None = None, *,
                box=((-0.6, 0.6), (-0.6, 0.6)), resolution: int = 257,
                region: tuple | None = None, tol: float = 1e-12,
                denominator_floor: float = 1e-3, strict: bool = True,
                n_max: int = 20) -> CexResult:
    """Planar solution F = [[1, b], [0, c]] of Delta F + X F = 0 with det F = c.

    With g = Delta c + X22 c the construction is

        b   = y - int_0^x g dt
        D   = 1 - int_0^x d_y g dt             (= d_y b)
        X11 = (d_x g - X12 c + int_0^x d_y^2 g dt) / D
        X   = [[X11 d_y, X12], [d_x, X22]]

    Parameters
    ----------
    c : expression in (x, y)
    X12, X22 : first-order operators, default zero
    region : (r_inner, r_outer), optional
        Ball and annulus used for the weak-continuation verdict.
    denominator_floor : float
        D must exceed this at every sampled node. When it does not,
        ``strict`` raises DenominatorVanishes; otherwise the certificate is
        still computed and ``extras`` records where D fails.

    Returns
    -------
    CexResult
        Iterates as (F, X, cert).
    """
    c = as_expr(c)
    X12 = X12 or ZERO_OP
    X22 = X22 or ZERO_OP
    x, y = Var(0), Var(1)
    g = add(laplacian(c, 2), X22(c))
    int_g = axis_integral(g, 0)
    b = add(y, -int_g)
    gy = g.partial(1)
    den = add(ONE, -axis_integral(gy, 0))
    num = add(g.partial(0), -X12(c), axis_integral(gy.partial(1), 0))
    X11 = mul(num, fld.recip(den))
    F = MatrixField(((ONE, b), (ZERO, c)))
    X = FirstOrderMatrixOp(((FirstOrderOp((0.0, X11)), X12),
                            (d_dx(0), X22)))
    XF = X.apply(F)
    res = [[add(laplacian(F[i, j], 2), XF[i][j]) for j in range(2)] for i in range(2)]
    det_expr = F.det()
    det_err_expr = add(det_expr, -c)

    mesh = np.meshgrid(*grid_axes(box, (resolution,) * 2), indexing="ij")
    flat_res = [e for r in res for e in r]
    vals = evaluate_many([den, det_expr, det_err_expr] + flat_res, mesh)
    D, det_vals, det_err = vals[0], vals[1], vals[2]
    extras = {"denominator_min": float(D.min()), "denominator_max": float(D.max())}
    bad = ~(D > denominator_floor)
    if bad.any():
        r = np.hypot(*mesh)
        k = np.unravel_index(np.argmin(np.where(bad, r, np.inf)), D.shape)
        where = (float(mesh[0][k]), float(mesh[1][k]))
        extras["denominator_failure_point"] = where
        extras["regular_radius"] = float(np.hypot(*mesh)[bad].min())
        if strict:
            raise DenominatorVanishes(
                f"1 - int d_y(Delta c + X22 c) = {D[k]:.3g} <= {denominator_floor} at {where}")
    residual_sup = float(max(np.max(np.abs(v)) for v in vals[3:]))
    inner, annulus, verdict = _verdict(det_vals, mesh, region, tol, det_expr, 2, n_max, extras)
    if bad.any() and region is not None:
        # repeat the weak-continuation verdict on the disc where X11 is regular
        ok = np.hypot(*mesh) < extras["regular_radius"]
        inner_m, ann_m = _radial_masks(mesh, *region)
        ann_ok = ann_m & ok
        extras["annulus_det_sup_regular"] = (float(np.max(np.abs(det_vals[ann_ok])))
                                             if ann_ok.any() else 0.0)
        if verdict == WUCP and not wucp_verdict(inner, extras["annulus_det_sup_regular"], tol):
            verdict = NOT_CEX
    cert = CexCertificate(residual_sup, float(np.max(np.abs(det_err))), inner, annulus,
                          None, verdict, extras)
    return CexResult(F, X, cert, res, den)


def cex_simple(c, **kwargs) -> CexResult:
    """The construction of ``cex_general`` with X12 = X22 = 0."""
    return cex_general(c, None, None, **kwargs)


def cex_1d(c, *, interval=(-1.0, 1.0), resolution: int = 2001,
           region: tuple | None = None, tol: float = 1e-12, n_max: int = 20) -> CexResult:
    """F = [[1, t], [0, c]] with X = [[0, 0], [-c'' d/dt, 0]] solves F'' + X F = 0."""
    c = as_expr(c)
    t = Var(0)
    c2 = c.partial(0).partial(0)
    F = MatrixField(((ONE, t), (ZERO, c)))
    X = FirstOrderMatrixOp(((ZERO_OP, ZERO_OP), (FirstOrderOp((-c2,)), ZERO_OP)))
    XF = X.apply(F)
    res = [[add(F[i, j].partial(0).partial(0), XF[i][j]) for j in range(2)] for i in range(2)]
    det_expr = F.det()
    mesh = [np.linspace(interval[0], interval[1], resolution)]
    vals = evaluate_many([det_expr, add(det_expr, -c)] + [e for r in res for e in r], mesh)
    extras = {"X21_coefficient": -c2}
    inner, annulus, verdict = _verdict(vals[0], mesh, region, tol, det_expr, 1, n_max, extras)
    cert = CexCertificate(float(max(np.max(np.abs(v)) for v in vals[2:])),
                          float(np.max(np.abs(vals[1]))), inner, annulus, None, verdict, extras)
    return CexResult(F, X, cert, res)


# -- diagonal constructions ------------------------------------------------------------

# Derivative patterns: tuples of (multi-index, weight). The coefficient vector
# multiplies these columns, first coefficient designated for normalization.
PATTERNS = {
    "dim4-pure-diagonal": (4, (((2, 0, 0, 0), 1.0), ((0, 2, 0, 0), 1.0),
                               ((0, 0, 2, 0), 1.0), ((0, 0, 0, 2), 1.0))),
    "dim3-cross-term": (3, (((2, 0, 0), 1.0), ((0, 2, 0), 1.0), ((0, 0, 2), 1.0),
                            ((1, 1, 0), 2.0))),
    "dim2-first-order": (2, (((2, 0), 1.0), ((0, 2), 1.0), ((1, 0), 1.0), ((0, 1), 1.0))),
}

# Auxiliary functions g1, g2 (g3 = g1 g2) per pattern.
def auxiliary_functions(pattern: str):
    if pattern == "dim4-pure-diagonal":
        x, y, z, t = fld.variables(4)
        g1 = x ** 2 - y ** 2 + t + x
        g2 = x ** 2 - z ** 2 + t - x
    elif pattern == "dim3-cross-term":
        x, y, z = fld.variables(3)
        g1 = x ** 2 - y ** 2 + x
        g2 = x ** 2 - z ** 2 + x - 2 * y
    elif pattern == "dim2-first-order":
        x, y = fld.variables(2)
        g1 = x ** 2 + x + y
        g2 = x ** 2 + x - y
    else:
        raise ValueError(f"unknown pattern {pattern!r}")
    return g1, g2, mul(g1, g2)


# Default epsilon per pattern: largest dyadic-ish value for which the 1/2
# positivity floor holds on B_{2 eps} for the unperturbed kernel.
DEFAULT_EPS = {"dim4-pure-diagonal": 0.125, "dim3-cross-term": 0.08,
               "dim2-first-order": 0.04}


def pattern_matrix(fs: Sequence[Expr], pattern: str) -> list:
    """Rows [weight * D^alpha f for each column] for each f."""
    _, cols = PATTERNS[pattern]
    return [[mul(w, fld.derivative(as_expr(f), alpha)) for alpha, w in cols] for f in fs]


def cross_kernel_exprs(rows) -> list:
    """Generalized cross product of three length-4 rows: k_j = (-1)^j det(minor_j)."""
    out = []
    for j in range(4):
        minor = [[r[k] for k in range(4) if k != j] for r in rows]
        dj = symbolic_det(minor)
        out.append(dj if j % 2 == 0 else mul(-1.0, dj))
    return out


def _cross_kernel_numeric(M: np.ndarray) -> np.ndarray:
    cols = []
    for j in range(4):
        keep = [k for k in range(4) if k != j]
        cols.append((-1) ** j * np.linalg.det(M[..., keep]))
    return np.stack(cols, -1)


def _check_rank(M: np.ndarray, mesh=None):
    s = np.linalg.svd(M, compute_uv=False)
    ratio = s[..., -1] / np.maximum(s[..., 0], 1e-300)
    if np.any(ratio < 1e-10):
        k = np.unravel_index(np.argmin(ratio), ratio.shape)
        where = tuple(float(m[k]) for m in mesh) if mesh is not None else k
        raise RankDeficient(f"pattern matrix has a kernel of dimension > 1 at {where}; "
                            "try a smaller extension amplitude")
    return float(ratio.min())


def nullspace_coeffs(f1, f2, f3, point, pattern: str, designated: int = 0) -> np.ndarray:
    """Kernel vector of the pattern matrix of (f1, f2, f3) at one point.

    Four columns use the generalized cross product; other counts use the
    smallest right singular vector. The result is scaled so the designated
    component is 1 (which also makes the first component positive whenever
    the designated one is the first).
    """
    rows = pattern_matrix((f1, f2, f3), pattern)
    flat = [e for r in rows for e in r]
    vals = evaluate_many(flat, [np.asarray([p], dtype=float) for p in point])
    M = np.array([v[0] for v in vals]).reshape(3, -1)
    _check_rank(M)
    if M.shape[1] == 4:
        k = _cross_kernel_numeric(M)
    else:
        k = np.linalg.svd(M)[2][-1]
    if abs(k[designated]) < 1e-300:
        raise RankDeficient("designated kernel component vanishes at the base point")
    return k / k[designated]


@dataclass
class DiagonalCexSpec:
    pattern: str = "dim4-pure-diagonal"
    eps: float | None = None
    eta: float = 0.05
    resolution: int = 21
    floor: float | None = 0.5
    max_backtracks: int = 12
    tol: float = 1e-12

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.eps is None:
            self.eps = DEFAULT_EPS[self.pattern]
        if not self.eps > 0 or self.eta < 0:
            raise ValueError("need eps > 0 and eta >= 0")

    @property
    def n(self) -> int:
        return PATTERNS[self.pattern][0]

    @property
    def box(self):
        return tuple((-2 * self.eps, 2 * self.eps) for _ in range(self.n))


@dataclass
class DiagonalCexResult:
    coefficients: list  # GridFields, one per pattern column
    f: tuple            # (f1, f2, f3)
    cert: CexCertificate
    operator: EllipticOperator
    coefficient_exprs: list
    eta: float

    def __iter__(self):
        return iter((self.coefficients, *self.f, self.cert))


def _operator_from_pattern(pattern, coeffs) -> EllipticOperator:
    n, _ = PATTERNS[pattern]
    if pattern == "dim4-pure-diagonal":
        a = tuple(tuple(coeffs[i] if i == j else 0 for j in range(4)) for i in range(4))
        return EllipticOperator(a, form="nondivergence")
    if pattern == "dim3-cross-term":
        A, B, C, D = coeffs
        return EllipticOperator(((A, D, 0), (D, B, 0), (0, 0, C)), form="nondivergence")
    A, B, C, D = coeffs
    return EllipticOperator(((A, 0), (0, B)), c=(C, D), form="nondivergence")


def _principal_min(pattern, K, ball):
    """Minimum over the ball of the positivity-relevant coefficients."""
    if pattern == "dim2-first-order":
        diag = K[..., :2]
    else:
        diag = K[..., :3] if pattern == "dim3-cross-term" else K
    m = float(diag[ball].min())
    if pattern == "dim3-cross-term":
        gap = K[..., 0] * K[..., 1] - K[..., 3] ** 2
        return m, float(gap[ball].min())
    return m, None


def _build(spec: DiagonalCexSpec, eta: float):
    g1, g2, g3 = auxiliary_functions(spec.pattern)
    n, eps = spec.n, spec.eps
    chi = annulus_bump((0.0,) * n, 1.25 * eps, 1.75 * eps)
    f3 = mul(g3, add(ONE, mul(eta, chi))) if eta else g3
    fs = (g1, g2, f3)
    rows = pattern_matrix(fs, spec.pattern)
    return fs, rows


def diag_cex(spec: DiagonalCexSpec) -> DiagonalCexResult:
    """Diagonal-type counterexample: L f_k = 0 for k = 1, 2, 3 while
    f1 f2 - f3 vanishes on B_eps and not on the annulus B_{2 eps} minus B_eps.

    The extension amplitude is halved until the positivity floor holds on
    B_{2 eps}; ``floor=None`` disables the check.
    """
    n = spec.n
    mesh = np.meshgrid(*grid_axes(spec.box, (spec.resolution,) * n), indexing="ij")
    ball = np.sqrt(sum(m ** 2 for m in mesh)) <= 2 * spec.eps + 1e-12
    eta = spec.eta
    for attempt in range(spec.max_backtracks + 1):
        fs, rows = _build(spec, eta)
        flat = [e for r in rows for e in r]
        M = np.stack(evaluate_many(flat, mesh), -1).reshape(mesh[0].shape + (3, len(rows[0])))
        sv_ratio = _check_rank(M, mesh)
        if M.shape[-1] == 4:
            kexprs = cross_kernel_exprs(rows)
        else:
            raise NotImplementedError("only four-column patterns are supported")
        base = [np.zeros(1) for _ in range(n)]
        k0 = float(evaluate_many([kexprs[0]], base)[0][0])
        if abs(k0) < 1e-300:
            raise RankDeficient("designated coefficient vanishes at the origin")
        kexprs = [mul(1.0 / k0, e) for e in kexprs]
        K = np.stack(evaluate_many(kexprs, mesh), -1)
        cmin, gap = _principal_min(spec.pattern, K, ball)
        ok = spec.floor is None or (cmin > spec.floor and (gap is None or gap > 0))
        if ok or eta == 0:
            break
        eta *= 0.5
    else:
        ok = False
    if not ok:
        raise PositivityLost(f"coefficient minimum {cmin:.4g} on B_2eps does not exceed "
                             f"the floor {spec.floor} (eta backtracked to {eta:.3g})")
    op = _operator_from_pattern(spec.pattern, kexprs)
    from .operators import apply
    res_exprs = [apply(op, f) for f in fs]
    det_expr = add(fs[2], mul(-1.0, fs[0], fs[1]))  # det [[f3, f2], [f1, 1]]
    vals = evaluate_many(res_exprs + [det_expr], mesh)
    residual = float(max(np.max(np.abs(v)) for v in vals[:3]))
    det_vals = vals[3]
    Mn = np.linalg.norm(M, axis=(-2, -1))
    Mv = np.linalg.norm(np.einsum("...ij,...j->...i", M, K), axis=-1)
    rel = float(np.max(Mv / np.maximum(Mn * np.linalg.norm(K, axis=-1), 1e-300)))
    extras = {"eta": eta, "backtracks": attempt, "relative_kernel_residual": rel,
              "singular_value_ratio_min": sv_ratio,
              "coefficient_min_box": float(K[..., :(2 if n == 2 else (3 if n == 3 else 4))].min()),
              "origin_coefficients": [float(v[0]) for v in
                                      evaluate_many(kexprs, [np.zeros(1)] * n)]}
    if gap is not None:
        extras["ab_minus_d2_min"] = gap
    inner_m, ann_m = _radial_masks(mesh, spec.eps, 2 * spec.eps)
    inner = float(np.max(np.abs(det_vals[inner_m])))
    annulus = float(np.max(np.abs(det_vals[ann_m])))
    verdict = WUCP if wucp_verdict(inner, annulus, spec.tol) else NOT_CEX
    cert = CexCertificate(residual, 0.0, inner, annulus, cmin, verdict, extras)
    coeff_fields = [GridField(spec.box, K[..., j]) for j in range(K.shape[-1])]
    return DiagonalCexResult(coeff_fields, fs, cert, op, kexprs, eta)


# -- divergence-form construction ------------------------------------------------------

@dataclass
class DivCexResult:
    psi: GridField
    g: tuple           # GridFields g_k = f_k / psi
    cert: CexCertificate
    diag: DiagonalCexResult

    def __iter__(self):
        return iter((self.psi, *self.g, self.cert))


def divergence_coefficients(kexprs):
    """Divergence-form data of a f_xx + b f_yy + c f_x + d f_y.

    Returns (A diagonal entries, C) with C = (c - d_x a, d - d_y b), so the
    operator equals d_i(A_ii d_i f) + C . grad f.
    """
    a, b, c, d = kexprs
    return (a, b), (add(c, mul(-1.0, a.partial(0))), add(d, mul(-1.0, b.partial(1))))


def reduced_residual(psi: np.ndarray, gk: np.ndarray, A, C, h) -> np.ndarray:
    """Grid value of d_i(psi^2 (A_ii d_i g + C_i g)) by centered differences."""
    out = 0.0
    for i in range(2):
        flux = psi ** 2 * (A[i] * np.gradient(gk, h[i], axis=i) + C[i] * gk)
        out = out + np.gradient(flux, h[i], axis=i)
    return out


def div_cex(spec: DiagonalCexSpec | None = None, *, resolution: int = 129,
            interior: float = 0.75, diag: DiagonalCexResult | None = None,
            psi_tol: float = 1e-6) -> DivCexResult:
    """Multiplier reduction of the 2D diagonal counterexample to divergence form.

    psi solves the adjoint equation d_i(A_ii d_i psi - C_i psi) = 0 on the box
    B = [-2 eps, 2 eps]^2 with psi = 1 on its boundary. Then g_k = f_k / psi
    and 1 / psi solve d_i(psi^2 (A_ii d_i g + C_i g)) = 0. Residuals are
    measured on the concentric sub-box scaled by ``interior``.
    """
    spec = spec or DiagonalCexSpec("dim2-first-order")
    if spec.pattern != "dim2-first-order":
        raise ValueError("the divergence construction uses the 2D pattern")
    diag = diag or diag_cex(spec)
    (a, b), (C1, C2) = divergence_coefficients(diag.coefficient_exprs)
    adj = EllipticOperator(((a, 0), (0, b)), (mul(-1.0, C1), mul(-1.0, C2)))
    sol = dirichlet_solve(DirichletProblem(adj, spec.box, ONE, resolution))
    X, Y = sol.mesh()
    h = sol.spacing
    Av = evaluate_many([a, b], (X, Y))
    Cv = evaluate_many([C1, C2], (X, Y))
    fv = evaluate_many(list(diag.f), (X, Y))
    psi = sol.values
    gs = [v / psi for v in fv] + [1.0 / psi]
    half = interior * 2 * spec.eps
    keep = (np.abs(X) <= half + 1e-12) & (np.abs(Y) <= half + 1e-12)
    keep[[0, -1], :] = False
    keep[:, [0, -1]] = False
    res = [float(np.max(np.abs(reduced_residual(psi, gk, Av, Cv, h)[keep]))) for gk in gs]
    psi_min = float(psi.min())
    # det [[g3, g2], [g1, 1/psi]] = (f3 - f1 f2) / psi^2
    det_g = gs[2] * gs[3] - gs[0] * gs[1]
    inner_m, ann_m = _radial_masks((X, Y), spec.eps, 2 * spec.eps)
    inner = float(np.max(np.abs(det_g[inner_m])))
    annulus = float(np.max(np.abs(det_g[ann_m])))
    verdict = WUCP if (wucp_verdict(inner, annulus, spec.tol) and psi_min > 0) else NOT_CEX
    extras = {"psi_min": psi_min, "psi_max": float(psi.max()),
              "psi_ge_one": psi_min >= 1 - psi_tol,
              "residuals": res, "solver_residual": sol.residual, "h": max(h)}
    cert = CexCertificate(max(res), 0.0, inner, annulus, diag.cert.coefficient_min,
                          verdict, extras)
    return DivCexResult(GridField(spec.box, psi), tuple(GridField(spec.box, g) for g in gs[:3]),
                        cert, diag)
