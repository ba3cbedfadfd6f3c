"""Matrix connections A = A1 dx + A2 dy in isothermal coordinates g = lam Id.

Only residual identities are evaluated: the curvature
F12 = d1 A2 - d2 A1 + [A1, A2], the Coulomb and harmonic gauge residuals
and the twisted Laplacian

    d_A^* d_A F = Delta_g F - 2 g^{ij} A_i d_j F + (d^* A) F - g^{ij} A_i A_j F

with Delta_g = -(1/lam)(d1^2 + d2^2) and d^* A = -(1/lam)(d1 A1 + d2 A2).
Entries may be complex expressions.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MetricNotIsothermal
from .field import ONE, ZERO, Expr, add, as_expr, evaluate_many, grid_axes, mul, recip

DEFAULT_BOX = ((-1.0, 1.0), (-1.0, 1.0))


# -- nested-list matrix algebra on expressions ---------------------------------------

def mat(rows) -> tuple:
    return tuple(tuple(as_expr(e) for e in r) for r in rows)


def constant_matrix(M) -> tuple:
    M = np.asarray(M)
    return tuple(tuple(as_expr(complex(v) if np.iscomplexobj(M) else float(v)) for v in r)
                 for r in M)


def matmul(P, Q) -> tuple:
    m = len(P)
    return tuple(tuple(add(*(mul(P[i][k], Q[k][j]) for k in range(m))) for j in range(m))
                 for i in range(m))


def madd(*Ms) -> tuple:
    m = len(Ms[0])
    return tuple(tuple(add(*(M[i][j] for M in Ms)) for j in range(m)) for i in range(m))


def mscale(s, M) -> tuple:
    return tuple(tuple(mul(s, e) for e in r) for r in M)


def mpartial(M, axis: int) -> tuple:
    return tuple(tuple(e.partial(axis) for e in r) for r in M)


def zeros(m: int) -> tuple:
    return tuple(tuple(ZERO for _ in range(m)) for _ in range(m))


def mevaluate(M, coords) -> np.ndarray:
    """Values of a matrix expression, shape (..., m, m)."""
    m = len(M)
    vals = evaluate_many([e for r in M for e in r], coords)
    shape = np.broadcast(*coords).shape if len(coords) else ()
    arr = np.stack([np.broadcast_to(v, shape) for v in vals], -1)
    return arr.reshape(shape + (m, m))


# -- connections -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Connection2D:
    """A1, A2 (m x m expressions) and conformal factor lam of g = lam Id.

    With ``unitary`` set, A1 and A2 must be skew-Hermitian at the sample
    nodes of ``box`` to 1e-12.
    """

    A1: tuple
    A2: tuple
    lam: Expr = ONE
    unitary: bool = False
    box: tuple = DEFAULT_BOX

    def __post_init__(self):
        A1, A2 = mat(self.A1), mat(self.A2)
        m = len(A1)
        if any(len(r) != m for r in A1) or len(A2) != m or any(len(r) != m for r in A2):
            raise DimensionMismatch("A1 and A2 must be square of the same size")
        object.__setattr__(self, "A1", A1)
        object.__setattr__(self, "A2", A2)
        object.__setattr__(self, "lam", as_expr(self.lam))
        mesh = self.mesh(9)
        lam = evaluate_many([self.lam], mesh)[0]
        if not np.all(np.real(lam) > 0) or np.any(np.imag(lam) != 0):
            raise MetricNotIsothermal("conformal factor must be real and positive")
        if self.unitary:
            for name, A in (("A1", A1), ("A2", A2)):
                V = mevaluate(A, mesh)
                gap = np.max(np.abs(V + np.conj(np.swapaxes(V, -1, -2))))
                if gap > 1e-12:
                    raise ValueError(f"{name} is not skew-Hermitian (gap {gap:.3g})")

    @property
    def m(self) -> int:
        return len(self.A1)

    def mesh(self, resolution: int = 33):
        return np.meshgrid(*grid_axes(self.box, (resolution,) * 2), indexing="ij")


def curvature(conn: Connection2D) -> tuple:
    """F12 = d1 A2 - d2 A1 + A1 A2 - A2 A1."""
    A1, A2 = conn.A1, conn.A2
    return madd(mpartial(A2, 0), mscale(-1.0, mpartial(A1, 1)),
                matmul(A1, A2), mscale(-1.0, matmul(A2, A1)))


def gauge_transform(conn: Connection2D, H) -> Connection2D:
    """(H^{-1} A1 H, H^{-1} A2 H) for a constant invertible H."""
    H = np.asarray(H)
    Hm, Hi = constant_matrix(H), constant_matrix(np.linalg.inv(H))
    return Connection2D(matmul(Hi, matmul(conn.A1, Hm)), matmul(Hi, matmul(conn.A2, Hm)),
                        conn.lam, conn.unitary, conn.box)


@dataclass
class GaugeResiduals:
    coulomb: tuple
    harmonic: tuple
    coulomb_sup: float
    harmonic_sup: float


def gauge_residuals(conn: Connection2D, resolution: int = 33) -> GaugeResiduals:
    """coulomb = d1 A1 + d2 A2 and harmonic = coulomb + A1^2 + A2^2 with sup norms."""
    coul = madd(mpartial(conn.A1, 0), mpartial(conn.A2, 1))
    harm = madd(coul, matmul(conn.A1, conn.A1), matmul(conn.A2, conn.A2))
    mesh = conn.mesh(resolution)
    sups = [float(np.max(np.abs(mevaluate(M, mesh)))) for M in (coul, harm)]
    return GaugeResiduals(coul, harm, *sups)


def _isothermal_factor(conn: Connection2D, metric) -> Expr:
    if metric is None:
        return conn.lam
    g = mat(metric)
    mesh = conn.mesh(9)
    G = mevaluate(g, mesh)
    lam = G[..., 0, 0]
    off = np.max(np.abs(G[..., 0, 1])) + np.max(np.abs(G[..., 1, 0]))
    if off > 1e-12 or np.max(np.abs(G[..., 1, 1] - lam)) > 1e-12 * (1 + np.max(np.abs(lam))):
        raise MetricNotIsothermal("metric is not a multiple of the identity")
    return g[0][0]


def twisted_laplacian_apply(conn: Connection2D, F, metric=None) -> tuple:
    """d_A^* d_A F assembled term by term from the expanded formula."""
    F = mat(F)
    if len(F) != conn.m:
        raise DimensionMismatch("F and the connection have different sizes")
    lam = _isothermal_factor(conn, metric)
    il = mul(-1.0, recip(lam))                       # -1 / lam
    A1, A2 = conn.A1, conn.A2
    F1, F2 = mpartial(F, 0), mpartial(F, 1)
    lap = mscale(il, madd(mpartial(F1, 0), mpartial(F2, 1)))            # Delta_g F
    drift = mscale(mul(2.0, il), madd(matmul(A1, F1), matmul(A2, F2)))  # -2 g^{ij} A_i d_j F
    dstar = mscale(il, madd(mpartial(A1, 0), mpartial(A2, 1)))         # d^* A
    quad = mscale(il, madd(matmul(A1, A1), matmul(A2, A2)))            # -g^{ij} A_i A_j
    return madd(lap, drift, matmul(dstar, F), matmul(quad, F))


def expansion_oracle(conn: Connection2D, F, metric=None) -> tuple:
    """d_A^* applied to d_A F, with d_A^* w = d^* w - g^{ij} A_i w_j."""
    F = mat(F)
    lam = _isothermal_factor(conn, metric)
    il = mul(-1.0, recip(lam))
    w1 = madd(mpartial(F, 0), matmul(conn.A1, F))
    w2 = madd(mpartial(F, 1), matmul(conn.A2, F))
    return madd(mscale(il, madd(mpartial(w1, 0), mpartial(w2, 1))),
                mscale(il, madd(matmul(conn.A1, w1), matmul(conn.A2, w2))))


def oracle_gap(conn: Connection2D, F, points, metric=None) -> float:
    """Sup relative gap between the formula and the oracle at the given points."""
    a = mevaluate(twisted_laplacian_apply(conn, F, metric), points)
    b = mevaluate(expansion_oracle(conn, F, metric), points)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))
