"""Second-order Taylor term of the squared distance to a curve.

For a curve through 0 with tangent t and a metric g, the squared distance
to the curve is q^T P^T g(0) P q + O(|q|^3), where P projects onto the
g(0)-orthogonal complement of t along t. The brute-force oracles here are
an exact point-to-parabola distance, a scan-and-refine minimization for
Euclidean curves and shortest paths on an 8-connected metric lattice.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .errors import DegenerateMetric, DomainError, OracleNonConvergent
from .field import Expr, Var, as_expr, evaluate_many

J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _check_metric(g0) -> np.ndarray:
    g0 = np.asarray(g0, dtype=float)
    if g0.shape != (2, 2) or not np.all(np.isfinite(g0)):
        raise DegenerateMetric("metric must be a finite 2 x 2 matrix")
    if np.max(np.abs(g0 - g0.T)) > 1e-12 * (1 + np.max(np.abs(g0))):
        raise DegenerateMetric("metric is not symmetric")
    if np.linalg.eigvalsh(g0)[0] <= 0:
        raise DegenerateMetric("metric is not positive definite")
    return 0.5 * (g0 + g0.T)


def projection_form(g0, tangent) -> np.ndarray:
    """P^T g0 P for P the projection onto star(tangent) along the tangent.

    star(t) = g0^{-1} J t is the g0-orthogonal direction, so the result
    is the squared g0-distance to the line spanned by the tangent.
    """
    g0 = _check_metric(g0)
    t = np.asarray(tangent, dtype=float)
    nt = np.linalg.norm(t)
    if nt == 0 or not np.isfinite(nt):
        raise DegenerateMetric("tangent vector vanishes")
    t = t / nt
    n = np.linalg.solve(g0, J @ t)
    w = J @ t / float((J @ t) @ n)      # w.t = 0, w.n = 1
    return np.outer(w, w) * float(n @ g0 @ n)


def line_distance_form(g0, tangent) -> np.ndarray:
    """Closed form g0 - g0 t t^T g0 / (t^T g0 t) of the squared distance to a line."""
    g0 = _check_metric(g0)
    t = np.asarray(tangent, dtype=float)
    gt = g0 @ t
    return g0 - np.outer(gt, gt) / float(t @ gt)


# -- curves ---------------------------------------------------------------------------

@dataclass
class CurveSpec:
    """Plane curve s -> (x(s), y(s)) with expressions in x0 = s.

    ``kind`` selects an exact distance oracle when one is available.
    """

    x: Expr
    y: Expr
    interval: tuple = (-1.0, 1.0)
    t0: float = 0.0
    kind: str = "generic"

    def __post_init__(self):
        self.x, self.y = as_expr(self.x), as_expr(self.y)
        s = np.linspace(*self.interval, 2001)
        dx, dy = evaluate_many([self.x.partial(0), self.y.partial(0)], (s,))
        if np.any(np.hypot(dx, dy) <= 0):
            raise DomainError("curve is not regular")
        p = self.point(self.t0)
        if np.hypot(*p) > 1e-12:
            raise DomainError(f"curve does not pass through 0 at t0 (gamma(t0) = {p})")

    def point(self, s):
        x, y = evaluate_many([self.x, self.y], (np.asarray(s, dtype=float),))
        return x, y

    def tangent(self) -> np.ndarray:
        dx, dy = evaluate_many([self.x.partial(0), self.y.partial(0)],
                               (np.asarray([self.t0]),))
        return np.array([dx[0], dy[0]])


def line(theta: float = 0.0, half_length: float = 1.0) -> CurveSpec:
    c, s = np.cos(theta), np.sin(theta)
    t = Var(0)
    return CurveSpec(c * t, s * t, (-half_length, half_length), kind="line")


def parabola(half_length: float = 1.0) -> CurveSpec:
    t = Var(0)
    return CurveSpec(t, t * t, (-half_length, half_length), kind="parabola")


def parabola_distance2(x, y) -> np.ndarray:
    """Exact squared distance from (x, y) to y = s^2 (real roots of a cubic)."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    out = np.empty(x.shape)
    for k in np.ndindex(x.shape):
        roots = np.roots([4.0, 0.0, 2.0 - 4.0 * y[k], -2.0 * x[k]])
        s = roots[np.abs(roots.imag) < 1e-9].real
        out[k] = float(np.min((x[k] - s) ** 2 + (y[k] - s ** 2) ** 2))
    return out


def euclidean_distance2(curve: CurveSpec, x, y, scan: int = 4001) -> np.ndarray:
    """min_s |q - gamma(s)|^2 by a dense scan refined with minimize_scalar."""
    s = np.linspace(*curve.interval, scan)
    cx, cy = curve.point(s)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    out = np.empty(x.shape)
    ds = s[1] - s[0]
    for k in np.ndindex(x.shape):
        d2 = (cx - x[k]) ** 2 + (cy - y[k]) ** 2
        i = int(np.argmin(d2))
        lo, hi = max(s[0], s[i] - ds), min(s[-1], s[i] + ds)

        def fun(t):
            px, py = curve.point(np.array([t]))
            return float((px[0] - x[k]) ** 2 + (py[0] - y[k]) ** 2)
        res = minimize_scalar(fun, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14})
        out[k] = min(res.fun, float(d2[i]))
    return out


# -- lattice oracle -------------------------------------------------------------------

_STEPS = [(1, 0), (0, 1), (1, 1), (1, -1)]


def _metric_values(metric, X, Y) -> np.ndarray:
    vals = evaluate_many([e for r in metric for e in r], (X, Y))
    return np.stack(vals, -1).reshape(np.shape(X) + (2, 2))


def lattice_distance2(metric, curve: CurveSpec, half_width: float, h: float):
    """Squared metric distance to the curve at the nodes of an 8-connected lattice.

    Edge lengths use the metric at edge midpoints. A virtual source joins
    every node within 1.5 h of the curve at the metric length of its offset
    to the nearest curve sample.

    Returns
    -------
    (xs, ys, d2) with d2 of shape (len(xs), len(ys)).
    """
    m = int(round(2 * half_width / h)) + 1
    xs = np.linspace(-half_width, half_width, m)
    ys = xs.copy()
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    index = np.arange(m * m).reshape(m, m)
    rows, cols, wts = [], [], []
    for di, dj in _STEPS:
        i0, i1 = max(0, -di), m - max(0, di)
        j0, j1 = max(0, -dj), m - max(0, dj)
        a = index[i0:i1, j0:j1]
        b = index[i0 + di:i1 + di, j0 + dj:j1 + dj]
        mx = X[i0:i1, j0:j1] + di * h / 2
        my = Y[i0:i1, j0:j1] + dj * h / 2
        G = _metric_values(metric, mx, my)
        v = np.array([di * h, dj * h])
        w = np.sqrt(np.einsum("i,...ij,j->...", v, G, v))
        rows += [a.ravel()]
        cols += [b.ravel()]
        wts += [w.ravel()]
    # virtual source
    s = np.linspace(*curve.interval, max(4001, int(8 * (curve.interval[1] - curve.interval[0]) / h)))
    cx, cy = curve.point(s)
    inside = (np.abs(cx) <= half_width + 2 * h) & (np.abs(cy) <= half_width + 2 * h)
    cx, cy = cx[inside], cy[inside]
    src = m * m
    tree = cKDTree(np.column_stack([cx, cy]))
    near = tree.query_ball_point(np.column_stack([X.ravel(), Y.ravel()]), 1.5 * h)
    si, sw = [], []
    for node, cand in enumerate(near):
        if not cand:
            continue
        off = np.column_stack([X.ravel()[node] - cx[cand], Y.ravel()[node] - cy[cand]])
        G = _metric_values(metric, np.array([X.ravel()[node]]), np.array([Y.ravel()[node]]))[0]
        lens = np.sqrt(np.einsum("ki,ij,kj->k", off, G, off))
        si.append(node)
        sw.append(float(lens.min()))
    rows.append(np.full(len(si), src))
    cols.append(np.asarray(si))
    wts.append(np.asarray(sw))
    r, c, w = (np.concatenate(v) for v in (rows, cols, wts))
    # zero-length source edges must survive the sparse format
    w = np.maximum(w, 1e-300)
    graph = sp.coo_matrix((w, (r, c)), shape=(m * m + 1, m * m + 1)).tocsr()
    d = dijkstra(graph, directed=False, indices=src)
    return xs, ys, (d[:m * m] ** 2).reshape(m, m)


# -- the comparison --------------------------------------------------------------------

@dataclass
class DistanceReport:
    """Predicted and fitted quadratic forms and the cubic remainder study.

    ``remainder_ratios[k]`` is max |oracle - q^T F q| / |q|^3 over the sample
    annulus at radius / 2^k.
    """

    predicted: np.ndarray
    fitted: np.ndarray
    relative_error: float
    remainder_ratios: list
    oracle: str
    refinement_change: float | None = None
    extras: dict = dc_field(default_factory=dict)


def _annulus_samples(radius, n_r=4, n_theta=24):
    r = np.linspace(radius / 2, radius, n_r)
    th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    R, T = np.meshgrid(r, th, indexing="ij")
    return (R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()


def _fit_form(x, y, f) -> np.ndarray:
    A = np.column_stack([x * x, 2 * x * y, y * y])
    (a, b, c), *_ = np.linalg.lstsq(A, f, rcond=None)
    return np.array([[a, b], [b, c]])


def _is_euclidean(metric) -> bool:
    ident = ((1.0, 0.0), (0.0, 1.0))
    return all(isinstance(as_expr(metric[i][j]), Expr) and not as_expr(metric[i][j]).free_vars
               and float(evaluate_many([metric[i][j]], ())[0]) == ident[i][j]
               for i in range(2) for j in range(2))


def distance_taylor_check(metric=None, curve: CurveSpec | None = None, radius: float = 0.05,
                          *, halvings: int = 2, lattice_cells: int = 80,
                          refine_tol: float = 0.05) -> DistanceReport:
    """Compare q^T P^T g(0) P q with a brute-force squared distance.

    Euclidean metrics use the exact parabola formula when the curve is the
    standard parabola and the scan-and-refine minimizer otherwise; other
    metrics use the lattice oracle at spacing radius / ``lattice_cells`` and
    at half that spacing.

    Raises
    ------
    OracleNonConvergent
        If lattice refinement changes the sampled values by more than
        ``refine_tol`` (relative).
    """
    metric = metric or ((1.0, 0.0), (0.0, 1.0))
    metric = tuple(tuple(as_expr(e) for e in r) for r in metric)
    curve = curve or line()
    g0 = _metric_values(metric, np.zeros(1), np.zeros(1))[0]
    F = projection_form(g0, curve.tangent())
    euclid = _is_euclidean(metric)
    ratios, change, fitted = [], None, None
    for k in range(halvings + 1):
        r = radius / 2 ** k
        if euclid:
            x, y = _annulus_samples(r)
            if curve.kind == "parabola":
                f = parabola_distance2(x, y)
                name = "exact-parabola"
            else:
                f = euclidean_distance2(curve, x, y)
                name = "scan-minimize"
        else:
            name = "lattice-dijkstra"
            h = r / lattice_cells
            xs, ys, d2 = lattice_distance2(metric, curve, 1.25 * r, h)
            X, Y = np.meshgrid(xs, ys, indexing="ij")
            rho = np.hypot(X, Y)
            sel = (rho >= r / 2) & (rho <= r)
            x, y, f = X[sel], Y[sel], d2[sel]
            if k == 0:
                xs2, ys2, d2f = lattice_distance2(metric, curve, 1.25 * r, h / 2)
                fine = d2f[::2, ::2][sel]
                scale = max(float(np.max(np.abs(fine))), 1e-300)
                change = float(np.max(np.abs(fine - f)) / scale)
                if change > refine_tol:
                    raise OracleNonConvergent(f"lattice refinement changes distances by {change:.1%}")
                f = fine
        if k == 0:
            fitted = _fit_form(x, y, f)
        q = np.hypot(x, y)
        pred = F[0, 0] * x * x + 2 * F[0, 1] * x * y + F[1, 1] * y * y
        ratios.append(float(np.max(np.abs(f - pred) / q ** 3)))
    rel = float(np.linalg.norm(fitted - F) / max(np.linalg.norm(F), 1e-300))
    return DistanceReport(F, fitted, rel, ratios, name, change)
