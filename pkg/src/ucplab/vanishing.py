"""Order of vanishing from ball masses, and the leading Taylor stratum.

The L2 mass M(r) of a function vanishing to order N at a point behaves like
r^(2N + n), so N is read off the slope of log M against log r.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .errors import DegenerateFit, NormalizationFailed
from .field import Expr, as_expr, derivative, evaluate, evaluate_many
from .harmpoly import Poly

N_MAX = 20
DEFAULT_RADII = tuple(2.0 ** -k for k in range(3, 8))
POINTS_PER_AXIS = {1: 64, 2: 64, 3: 64, 4: 24}


@dataclass
class VanishingEstimate:
    """``order`` is the estimate; ``at_least`` marks the open-ended result >= order."""

    order: int
    at_least: bool
    slope: float
    local_slopes: list
    fit_residual: float
    radii: list
    masses: list

    @property
    def label(self) -> str:
        return f">= {self.order}" if self.at_least else str(self.order)


def _ball_nodes(n: int, m: int):
    """Midpoint nodes of the unit cube [-1, 1]^n inside the unit ball, and the cell volume."""
    t = (np.arange(m) + 0.5) / m * 2 - 1
    mesh = np.meshgrid(*([t] * n), indexing="ij")
    inside = sum(g ** 2 for g in mesh) <= 1.0
    return [g[inside] for g in mesh], (2.0 / m) ** n


def ball_mass(u, point: Sequence[float], r: float, m: int | None = None) -> float:
    """Midpoint-rule integral of |u|^2 over the ball B(point, r).

    The nodes are a fixed pattern scaled with r, so homogeneous functions
    give masses in the exact ratio r^(2N + n).
    """
    n = len(point)
    m = m or POINTS_PER_AXIS[n]
    nodes, vol = _ball_nodes(n, m)
    coords = [p + r * g for p, g in zip(point, nodes)]
    vals = evaluate(u, coords) if isinstance(u, Expr) else u(*coords)
    return float(np.sum(np.abs(vals) ** 2) * vol * r ** n)


def vanishing_order(u, point: Sequence[float], radii: Sequence[float] = DEFAULT_RADII,
                    n_max: int = N_MAX, m: int | None = None) -> VanishingEstimate:
    """Least N with ball mass O(r^(2N + n)), estimated from a log-log fit.

    Raises
    ------
    DegenerateFit
        If every mass underflows (u is zero to round-off near the point).
    """
    radii = sorted(float(r) for r in radii)
    if len(radii) < 4:
        raise ValueError("at least four radii are required")
    n = len(point)
    u = u if callable(u) and not isinstance(u, Expr) else as_expr(u)
    masses = [ball_mass(u, point, r, m) for r in radii]
    pos = [M > 0 and math.isfinite(M) for M in masses]
    if not any(pos):
        raise DegenerateFit("ball masses vanish at every radius")
    if not all(pos):
        # mass underflows at small radii only when the decay beats every power
        return VanishingEstimate(n_max, True, math.inf, [], 0.0, radii, masses)
    lr, lm = np.log(radii), np.log(masses)
    slope, icpt = np.polyfit(lr, lm, 1)
    fit_res = float(np.max(np.abs(lm - (slope * lr + icpt))))
    local = list(np.diff(lm) / np.diff(lr))
    # the smallest radii dominate: use the local slope there for the integer order
    s = float(local[0])
    if s > 2 * n_max + n:
        return VanishingEstimate(n_max, True, float(slope), local, fit_res, radii, masses)
    N = max(int(round((s - n) / 2)), 0)
    return VanishingEstimate(N, False, float(slope), local, fit_res, radii, masses)


# -- blow-up ---------------------------------------------------------------------------

@dataclass
class BlowupCertificate:
    order: int
    p_N: Poly               # leading Taylor polynomial in the original coordinates
    normalized: Poly        # p_N(L xi) with a(0) = L L^T
    laplacian: Poly         # Laplacian of ``normalized``
    passed: bool
    witness: object = None
    transform: np.ndarray | None = None


def taylor_stratum(u, point: Sequence[float], N: int, exact_tol: float = 0.0) -> Poly:
    """Homogeneous degree-N Taylor polynomial of u at point (centered coordinates)."""
    u = as_expr(u)
    n = len(point)
    terms = {}
    base = [np.asarray([p], dtype=float) for p in point]
    alphas = [a for a in itertools.product(range(N + 1), repeat=n) if sum(a) == N]
    vals = evaluate_many([derivative(u, a) for a in alphas], base)
    for a, v in zip(alphas, vals):
        c = float(v[0]) / math.prod(math.factorial(k) for k in a)
        if abs(c) > exact_tol:
            terms[a] = _snap(c)
    return Poly(terms, n)


def _snap(c: float):
    """Integers stay integers so exact Laplacians stay exact."""
    r = round(c)
    return int(r) if c == r else c


def taylor_order(u, point, max_order: int = 12, tol: float = 1e-12) -> int:
    for N in range(max_order + 1):
        if not taylor_stratum(u, point, N, tol).is_zero(tol):
            return N
    raise DegenerateFit(f"all Taylor coefficients up to order {max_order} vanish")


def blowup_leading(u, op, point: Sequence[float], max_order: int = 12,
                   tol: float = 1e-12) -> BlowupCertificate:
    """Leading Taylor polynomial after normalizing the principal part at the point.

    With a(point) = L L^T (Cholesky) and x = L xi the principal part at the
    point becomes the Laplacian in xi. The certificate passes when the
    Laplacian of p_N(L xi) vanishes coefficientwise (exactly for integer
    data, to ``tol`` times the coefficient scale otherwise).
    """
    n = len(point)
    a0 = op.principal_at([np.asarray([p], dtype=float) for p in point])[0]
    a0 = 0.5 * (a0 + a0.T)
    try:
        L = np.linalg.cholesky(a0)
    except np.linalg.LinAlgError as exc:
        raise NormalizationFailed(f"a(point) is not positive definite: {a0.tolist()}") from exc
    N = taylor_order(u, point, max_order, tol)
    p = taylor_stratum(u, point, N, tol)
    Ls = [[_snap(float(v)) for v in row] for row in L]
    q = p.substitute_linear(np.array(Ls, dtype=object))
    lap = q.laplacian()
    exact = all(isinstance(c, int) for c in q.terms.values())
    scale = max((abs(c) for c in q.terms.values()), default=1.0)
    w = lap.leading_nonzero(0.0 if exact else tol * max(scale, 1.0) * 100)
    return BlowupCertificate(N, p, q, lap, w is None, w, L)
