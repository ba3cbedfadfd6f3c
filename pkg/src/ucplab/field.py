"""Exact expression trees and sampled grid fields.

Expressions are immutable trees over the variables ``x0..x3`` with exact
partial differentiation. Evaluation is vectorised over numpy arrays and
memoised per call, so shared subtrees (which differentiation produces in
abundance) are computed once.

The node set is deliberately small: constants, variables, sums, products,
integer powers, ``exp``, reciprocals, two flat special functions used to
build mollifiers, and a definite integral along one axis.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass, field as dc_field
from math import comb
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, DomainError

MAX_VARS = 4
QUAD_TOL = 1e-12
NOISE_REL = 1e-12


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ("_partials", "_free", "__weakref__")

    def __init__(self):
        self._partials = {}
        self._free = None

    # -- structure -------------------------------------------------------
    def children(self) -> tuple:
        return ()

    @property
    def free_vars(self) -> frozenset:
        if self._free is None:
            out = frozenset()
            for ch in self.children():
                out = out | ch.free_vars
            self._free = out | self._own_vars()
        return self._free

    def _own_vars(self) -> frozenset:
        return frozenset()

    @property
    def nvars(self) -> int:
        return max(self.free_vars) + 1 if self.free_vars else 0

    # -- calculus --------------------------------------------------------
    def partial(self, axis: int) -> "Expr":
        if not 0 <= axis < MAX_VARS:
            raise DimensionMismatch(f"axis {axis} outside 0..{MAX_VARS - 1}")
        d = self._partials.get(axis)
        if d is None:
            d = ZERO if axis not in self.free_vars else self._diff(axis)
            self._partials[axis] = d
        return d

    def _diff(self, axis: int) -> "Expr":
        raise NotImplementedError

    # -- evaluation ------------------------------------------------------
    def _ev(self, env, memo):
        key = id(self)
        val = memo.get(key)
        if val is None:
            val = self._compute(env, memo)
            memo[key] = val
        return val

    def _compute(self, env, memo):
        raise NotImplementedError

    def __call__(self, *coords):
        return evaluate(self, coords)

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __truediv__(self, other):
        return mul(self, recip(as_expr(other)))

    def __rtruediv__(self, other):
        return mul(as_expr(other), recip(self))

    def __pow__(self, n):
        if not isinstance(n, (int, np.integer)):
            raise TypeError("only integer powers are supported")
        return power(self, int(n))

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        super().__init__()
        self.value = value

    def _diff(self, axis):
        return ZERO

    def _compute(self, env, memo):
        return self.value

    def __repr__(self):
        return f"Const({self.value!r})"


class Var(Expr):
    __slots__ = ("index",)

    def __init__(self, index: int):
        if not 0 <= index < MAX_VARS:
            raise DimensionMismatch(f"variable index {index} outside 0..{MAX_VARS - 1}")
        super().__init__()
        self.index = index

    def _own_vars(self):
        return frozenset((self.index,))

    def _diff(self, axis):
        return ONE if axis == self.index else ZERO

    def _compute(self, env, memo):
        if self.index >= len(env):
            raise DimensionMismatch(
                f"x{self.index} needed but only {len(env)} coordinates given")
        return env[self.index]

    def __repr__(self):
        return f"x{self.index}"


class Sum(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        super().__init__()
        self.terms = tuple(terms)

    def children(self):
        return self.terms

    def _diff(self, axis):
        return add(*(t.partial(axis) for t in self.terms))

    def _compute(self, env, memo):
        it = iter(self.terms)
        acc = next(it)._ev(env, memo)
        for t in it:
            acc = acc + t._ev(env, memo)
        return acc

    def __repr__(self):
        return "(" + " + ".join(map(repr, self.terms)) + ")"


class Prod(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        super().__init__()
        self.factors = tuple(factors)

    def children(self):
        return self.factors

    def _diff(self, axis):
        fs = self.factors
        terms = []
        for k, f in enumerate(fs):
            df = f.partial(axis)
            if df.is_zero():
                continue
            terms.append(mul(*(df if j == k else g for j, g in enumerate(fs))))
        return add(*terms)

    def _compute(self, env, memo):
        it = iter(self.factors)
        acc = next(it)._ev(env, memo)
        for f in it:
            acc = acc * f._ev(env, memo)
        return acc

    def __repr__(self):
        return "*".join(map(repr, self.factors))


class Pow(Expr):
    __slots__ = ("base", "n")

    def __init__(self, base: Expr, n: int):
        super().__init__()
        self.base, self.n = base, n

    def children(self):
        return (self.base,)

    def _diff(self, axis):
        return mul(Const(self.n), power(self.base, self.n - 1), self.base.partial(axis))

    def _compute(self, env, memo):
        b = self.base._ev(env, memo)
        if self.n < 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.reciprocal(np.asarray(b, dtype=np.result_type(b, float))) ** (-self.n)
        return b ** self.n

    def __repr__(self):
        return f"({self.base!r})**{self.n}"


class Exp(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        super().__init__()
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _diff(self, axis):
        return mul(self, self.arg.partial(axis))

    def _compute(self, env, memo):
        with np.errstate(over="ignore"):
            return np.exp(self.arg._ev(env, memo))

    def __repr__(self):
        return f"exp({self.arg!r})"


class Recip(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        super().__init__()
        self.arg = arg

    def children(self):
        return (self.arg,)

    def _diff(self, axis):
        return mul(Const(-1), power(self, 2), self.arg.partial(axis))

    def _compute(self, env, memo):
        a = self.arg._ev(env, memo)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1.0 / np.asarray(a, dtype=np.result_type(a, float))

    def __repr__(self):
        return f"1/({self.arg!r})"


# -- flat special functions ---------------------------------------------------

def _flat_polys(kmax: int) -> list[np.ndarray]:
    """Coefficients (ascending in w = 1/s) of P_k with h^(k)(s) = P_k(1/s) e^{-1/s}."""
    polys = [np.array([1.0])]
    for _ in range(kmax):
        p = polys[-1]
        dp = np.polynomial.polynomial.polyder(p) if p.size > 1 else np.array([0.0])
        q = np.zeros(p.size + 2)
        q[2:2 + p.size] += p
        q[2:2 + dp.size] -= dp
        polys.append(q)
    return polys


_FLAT_POLYS = _flat_polys(16)


def flat_exp_derivative(s, order: int = 0) -> np.ndarray:
    """Order-th derivative of h(s) = exp(-1/s) for s > 0, extended by 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape)
    live = s > 1.0 / 700.0
    if np.any(live):
        w = 1.0 / s[live]
        out[live] = np.polynomial.polynomial.polyval(w, _FLAT_POLYS[order]) * np.exp(-w)
    return out


def smooth_step_derivative(t, order: int = 0) -> np.ndarray:
    """Order-th derivative of S(t) = h(1-t) / (h(1-t) + h(t)).

    S is 1 for t <= 0, 0 for t >= 1 and C-infinity in between.
    """
    t = np.asarray(t, dtype=float)
    u = [(-1) ** j * flat_exp_derivative(1.0 - t, j) for j in range(order + 1)]
    v = [flat_exp_derivative(t, j) for j in range(order + 1)]
    den = [uj + vj for uj, vj in zip(u, v)]
    q = []
    for k in range(order + 1):
        acc = u[k].copy()
        for j in range(k):
            acc -= comb(k, j) * q[j] * den[k - j]
        q.append(acc / den[0])
    return q[order]


class FlatExp(Expr):
    """Derivative of order ``order`` of exp(-1/s), zero for s <= 0, at s = arg."""

    __slots__ = ("arg", "order")

    def __init__(self, arg, order=0):
        super().__init__()
        self.arg, self.order = arg, order

    def children(self):
        return (self.arg,)

    def _diff(self, axis):
        return mul(FlatExp(self.arg, self.order + 1), self.arg.partial(axis))

    def _compute(self, env, memo):
        return flat_exp_derivative(self.arg._ev(env, memo), self.order)

    def __repr__(self):
        return f"h{self.order}({self.arg!r})"


class Step(Expr):
    """Derivative of order ``order`` of the smooth step S at arg."""

    __slots__ = ("arg", "order")

    def __init__(self, arg, order=0):
        super().__init__()
        self.arg, self.order = arg, order

    def children(self):
        return (self.arg,)

    def _diff(self, axis):
        return mul(Step(self.arg, self.order + 1), self.arg.partial(axis))

    def _compute(self, env, memo):
        return smooth_step_derivative(self.arg._ev(env, memo), self.order)

    def __repr__(self):
        return f"S{self.order}({self.arg!r})"


# -- axis integral --------------------------------------------------------------

# Gauss-Kronrod 15/7 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327])

GK_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
GK_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
G_WEIGHTS = np.zeros(15)
G_WEIGHTS[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


def adaptive_gk(fun: Callable, lo, hi, tol=QUAD_TOL, max_rounds: int = 30):
    """Vectorised adaptive Gauss-Kronrod integration of many 1D integrals.

    ``fun(t, idx)`` must return integrand values at abscissae ``t`` for the
    integrals numbered ``idx`` (flat arrays of equal length). ``tol`` is an
    absolute tolerance, scalar or one per integral; each subinterval gets a
    share proportional to its length. An interval is also accepted once its
    error estimate drops below ``NOISE_REL`` times its peak integrand size
    times its length: high derivatives carry cancellation noise well above
    machine epsilon, and bisecting noise never converges.

    Returns
    -------
    values, errors : ndarray
        Integral values and accumulated error estimates, shaped like ``lo``.
    """
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    total_len = np.abs(hi - lo)
    tols = np.broadcast_to(np.asarray(tol, dtype=float), lo.shape)
    result = None
    err = np.zeros(lo.shape)
    idx = np.nonzero(total_len > 0)[0]
    a, b = lo[idx], hi[idx]
    rounds = 0
    while idx.size:
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        t = mid[:, None] + half[:, None] * GK_NODES[None, :]
        vals = np.asarray(fun(t.ravel(), np.repeat(idx, 15)))
        vals = np.broadcast_to(vals, t.shape) if vals.ndim == 0 else vals.reshape(t.shape)
        if result is None:
            result = np.zeros(lo.shape, dtype=np.result_type(vals, float))
        k = vals @ GK_WEIGHTS * half
        g = vals @ G_WEIGHTS * half
        e = np.abs(k - g)
        rounds += 1
        share = tols[idx] * np.abs(b - a) / total_len[idx]
        floor = NOISE_REL * np.abs(vals).max(axis=1) * np.abs(half)
        done = (e <= np.maximum(share, floor)) | (rounds >= max_rounds)
        np.add.at(result, idx[done], k[done])
        np.add.at(err, idx[done], e[done])
        keep = ~done
        idx, a, b, mid = idx[keep], a[keep], b[keep], mid[keep]
        idx = np.concatenate([idx, idx])
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
    if result is None:
        result = np.zeros(lo.shape)
    return result, err


def cumulative_axis_quadrature(integrand: "Expr", env, axis: int, tol=QUAD_TOL):
    """Integral from 0 to env[axis] of ``integrand`` along ``axis`` at every point.

    Points sharing their other coordinates lie on one line; their upper
    limits are sorted and the integral is accumulated over consecutive
    gaps, so a grid line of m nodes costs m short integrals instead of m
    long ones.
    """
    shape = np.broadcast(*env).shape
    flat = [np.broadcast_to(e, shape).ravel() for e in env]
    upper = flat[axis]
    npts = upper.size
    if npts == 0:
        return np.zeros(shape)
    others = [f for i, f in enumerate(flat) if i != axis]
    if others:
        _, gid = np.unique(np.stack(others, axis=1), axis=0, return_inverse=True)
        gid = gid.ravel()
    else:
        gid = np.zeros(npts, dtype=np.intp)
    ngroups = int(gid.max()) + 1
    first = np.zeros(ngroups, dtype=np.intp)
    first[gid[::-1]] = np.arange(npts)[::-1]
    # append one zero node per group, then sort by (group, upper)
    g_all = np.concatenate([gid, np.arange(ngroups)])
    u_all = np.concatenate([upper, np.zeros(ngroups)])
    order = np.lexsort((u_all, g_all))
    gs, us = g_all[order], u_all[order]
    same = gs[1:] == gs[:-1]
    lo, hi = us[:-1][same], us[1:][same]
    seg_group = gs[:-1][same]
    span = np.zeros(ngroups)
    np.maximum.at(span, gs, np.abs(us))
    seg_tol = tol * np.abs(hi - lo) / np.maximum(2 * span[seg_group], 1e-300)
    rep = first[seg_group]

    def fun(t, idx):
        sub = [f[rep[idx]] for f in flat]
        sub[axis] = t
        return integrand._ev(tuple(sub), {})

    seg_vals, _ = adaptive_gk(fun, lo, hi, seg_tol)
    steps = np.zeros(gs.size, dtype=seg_vals.dtype)
    steps[1:][same] = seg_vals
    prefix = np.cumsum(steps)
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    zero_pos = inv[npts:]
    vals = prefix[inv[:npts]] - prefix[zero_pos[gid]]
    return vals.reshape(shape)


class AxisIntegral(Expr):
    """The map x -> integral from 0 to x[axis] of integrand(x with x[axis] = t) dt."""

    __slots__ = ("integrand", "axis", "tol")

    def __init__(self, integrand: Expr, axis: int, tol: float = QUAD_TOL):
        super().__init__()
        self.integrand, self.axis, self.tol = integrand, axis, tol

    def children(self):
        return (self.integrand,)

    def _own_vars(self):
        return frozenset((self.axis,))

    def _diff(self, axis):
        if axis == self.axis:
            return self.integrand
        return axis_integral(self.integrand.partial(axis), self.axis, self.tol)

    def _compute(self, env, memo):
        if self.axis >= len(env):
            raise DimensionMismatch(f"integration axis x{self.axis} not supplied")
        return cumulative_axis_quadrature(self.integrand, env, self.axis, self.tol)

    def __repr__(self):
        return f"Int_x{self.axis}[{self.integrand!r}]"


_INTEGRALS: "weakref.WeakValueDictionary" = weakref.WeakValueDictionary()


def axis_integral(integrand, axis: int, tol: float = QUAD_TOL) -> Expr:
    """Interned constructor for AxisIntegral (same integrand object, same node)."""
    integrand = as_expr(integrand)
    if integrand.is_zero():
        return ZERO
    if isinstance(integrand, Const) or axis not in integrand.free_vars:
        # integrand constant along the axis: integral is integrand * x_axis
        return mul(integrand, Var(axis))
    key = (id(integrand), axis, tol)
    node = _INTEGRALS.get(key)
    if node is None or node.integrand is not integrand:
        node = AxisIntegral(integrand, axis, tol)
        _INTEGRALS[key] = node
    return node


# -- simplifying constructors ---------------------------------------------------

ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, float, complex, np.number)):
        if v == 0:
            return ZERO
        if v == 1:
            return ONE
        return Const(v)
    raise TypeError(f"cannot convert {type(v).__name__} to an expression")


def add(*terms) -> Expr:
    flat = []
    c = 0
    for t in terms:
        t = as_expr(t)
        if isinstance(t, Sum):
            for s in t.terms:
                if isinstance(s, Const):
                    c = c + s.value
                else:
                    flat.append(s)
        elif isinstance(t, Const):
            c = c + t.value
        else:
            flat.append(t)
    if c != 0:
        flat.insert(0, Const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(flat)


def mul(*factors) -> Expr:
    flat = []
    c = 1
    for f in factors:
        f = as_expr(f)
        if isinstance(f, Prod):
            for g in f.factors:
                if isinstance(g, Const):
                    c = c * g.value
                else:
                    flat.append(g)
        elif isinstance(f, Const):
            c = c * f.value
        else:
            flat.append(f)
        if c == 0:
            return ZERO
    if not flat:
        return as_expr(c)
    if c != 1:
        flat.insert(0, Const(c))
    if len(flat) == 1:
        return flat[0]
    return Prod(flat)


def neg(e: Expr) -> Expr:
    return mul(Const(-1.0), e)


def power(base: Expr, n: int) -> Expr:
    base = as_expr(base)
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        return as_expr(base.value ** n)
    if n == -1:
        return recip(base)
    if isinstance(base, Pow):
        return power(base.base, base.n * n)
    return Pow(base, n)


def recip(e: Expr) -> Expr:
    e = as_expr(e)
    if isinstance(e, Const):
        return as_expr(1.0 / e.value)
    if isinstance(e, Recip):
        return e.arg
    return Recip(e)


def exp(e) -> Expr:
    e = as_expr(e)
    if isinstance(e, Const):
        return as_expr(np.exp(e.value))
    return Exp(e)


def variables(n: int = MAX_VARS) -> tuple[Var, ...]:
    return tuple(Var(i) for i in range(n))


def squared_radius(center: Sequence[float], n: int | None = None) -> Expr:
    n = len(center) if n is None else n
    return add(*(power(Var(i) - center[i], 2) for i in range(n)))


def bump(center: Sequence[float], r_inner: float, r_outer: float) -> Expr:
    """Mollifier equal to 1 for |x - c| <= r_inner and 0 for |x - c| >= r_outer.

    The transition is the smooth step S in the squared radius, built from
    exp(-1/s) so every derivative is available in closed form.
    """
    if not 0 <= r_inner < r_outer:
        raise ValueError("need 0 <= r_inner < r_outer")
    rho = squared_radius(center)
    width = r_outer ** 2 - r_inner ** 2
    return Step(mul(Const(1.0 / width), rho - r_inner ** 2))


def hole(center: Sequence[float], r_inner: float, r_outer: float) -> Expr:
    """1 - bump: zero on the inner ball, one outside the outer ball."""
    return 1 - bump(center, r_inner, r_outer)


def annulus_bump(center, r_lo: float, r_hi: float) -> Expr:
    """Smooth bump supported in the open annulus r_lo < |x - c| < r_hi."""
    r_mid = 0.5 * (r_lo + r_hi)
    return mul(hole(center, r_lo, r_mid), bump(center, r_mid, r_hi))


def flat_exp(e) -> Expr:
    """exp(-1/e) for e > 0, extended by zero."""
    return FlatExp(as_expr(e), 0)


def laplacian(u: Expr, n: int) -> Expr:
    return add(*(u.partial(i).partial(i) for i in range(n)))


def gradient(u: Expr, n: int) -> tuple[Expr, ...]:
    return tuple(u.partial(i) for i in range(n))


def derivative(u: Expr, multi_index: Sequence[int]) -> Expr:
    """Mixed partial with multiplicity multi_index[i] in axis i."""
    for axis, k in enumerate(multi_index):
        for _ in range(k):
            u = u.partial(axis)
    return u


def evaluate(expr, coords, ncoords: int | None = None):
    """Evaluate one expression at broadcastable coordinate arrays."""
    return evaluate_many([expr], coords)[0]


def evaluate_many(exprs, coords):
    """Evaluate several expressions with a shared memo."""
    env = tuple(np.asarray(c, dtype=float) for c in coords)
    if env:
        env = tuple(np.broadcast_arrays(*env))
        shape = env[0].shape
    else:
        shape = ()
    memo: dict = {}
    out = []
    for e in exprs:
        v = as_expr(e)._ev(env, memo)
        out.append(np.array(np.broadcast_to(v, shape)))
    return out


# -- grid fields -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of a scalar (real or complex) function on a rectangular lattice.

    ``box`` holds per-axis (min, max); nodes include both endpoints.
    """

    box: tuple
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "values", vals)
        if vals.ndim != len(box):
            raise DimensionMismatch(f"{vals.ndim}-d samples on a {len(box)}-d box")
        if not 1 <= vals.ndim <= MAX_VARS:
            raise DimensionMismatch("grid dimension must be 1..4")
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid field contains non-finite samples")

    @property
    def n(self) -> int:
        return len(self.box)

    @property
    def shape(self) -> tuple:
        return self.values.shape

    @property
    def spacing(self) -> tuple:
        return tuple((hi - lo) / (m - 1) if m > 1 else 0.0
                     for (lo, hi), m in zip(self.box, self.shape))

    def axes(self) -> list[np.ndarray]:
        return grid_axes(self.box, self.shape)

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes(), indexing="ij")

    def with_values(self, values) -> "GridField":
        return GridField(self.box, values)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def grid_axes(box, resolutions) -> list[np.ndarray]:
    return [np.linspace(lo, hi, m) for (lo, hi), m in zip(box, resolutions)]


def _as_resolutions(box, resolutions):
    if isinstance(resolutions, (int, np.integer)):
        return (int(resolutions),) * len(box)
    res = tuple(int(r) for r in resolutions)
    if len(res) != len(box):
        raise DimensionMismatch("one resolution per axis required")
    return res


def sample(expr, box, resolutions) -> GridField:
    """Evaluate ``expr`` at every lattice node of ``box``."""
    res = _as_resolutions(box, resolutions)
    if as_expr(expr).nvars > len(box):
        raise DimensionMismatch(
            f"expression uses x{as_expr(expr).nvars - 1} but box is {len(box)}-d")
    mesh = np.meshgrid(*grid_axes(box, res), indexing="ij")
    vals = evaluate(expr, mesh)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        where = tuple(float(m[np.unravel_index(np.argmax(bad), bad.shape)]) for m in mesh)
        raise DomainError(f"non-finite value at {where}")
    return GridField(box, vals)


def fd_derivative(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """Second-order finite difference (centered inside, one-sided at edges)."""
    return np.gradient(values, spacing, axis=axis, edge_order=2)


@dataclass
class ConvergenceRecord:
    spacings: list
    errors: dict  # axis -> list of max errors
    orders: dict  # axis -> fitted order (None when all errors vanish)

    @property
    def min_order(self):
        vals = [o for o in self.orders.values() if o is not None]
        return min(vals) if vals else None

    @property
    def max_error(self) -> float:
        return max(max(v) for v in self.errors.values())


def fit_order(spacings, errors) -> float | None:
    """Least-squares slope of log(error) against log(h); None if errors vanish."""
    h = np.asarray(spacings, dtype=float)
    e = np.asarray(errors, dtype=float)
    if np.all(e == 0):
        return None
    keep = e > 0
    if keep.sum() < 2:
        return None
    return float(np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)[0])


def fd_crosscheck(expr, box, resolutions_list) -> ConvergenceRecord:
    """Compare exact partials with centered differences at interior nodes."""
    if len(resolutions_list) < 3:
        raise ValueError("at least three resolutions are needed")
    n = len(box)
    spacings, errors = [], {i: [] for i in range(n)}
    for res in resolutions_list:
        res = _as_resolutions(box, res)
        g = sample(expr, box, res)
        h = g.spacing
        spacings.append(max(h))
        mesh = g.mesh()
        exact = evaluate_many([as_expr(expr).partial(i) for i in range(n)], mesh)
        inner = tuple(slice(1, -1) for _ in range(n))
        for i in range(n):
            approx = fd_derivative(g.values, h[i], i)
            errors[i].append(float(np.max(np.abs(approx - exact[i])[inner])))
    orders = {i: fit_order(spacings, errors[i]) for i in range(n)}
    return ConvergenceRecord(spacings, errors, orders)


# -- matrix fields ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixField:
    """Square array of expressions or of grid fields (never mixed)."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        m = len(rows)
        if m == 0 or any(len(r) != m for r in rows):
            raise DimensionMismatch("matrix field must be square and non-empty")
        flat = [e for r in rows for e in r]
        if all(isinstance(e, GridField) for e in flat):
            boxes = {e.box for e in flat}
            shapes = {e.shape for e in flat}
            if len(boxes) != 1 or len(shapes) != 1:
                raise DimensionMismatch("grid entries must share box and resolution")
        else:
            rows = tuple(tuple(as_expr(e) for e in r) for r in rows)
        object.__setattr__(self, "entries", rows)

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def symbolic(self) -> bool:
        return isinstance(self.entries[0][0], Expr)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def det(self):
        if self.symbolic:
            return symbolic_det([list(r) for r in self.entries])
        vals = np.stack([np.stack([e.values for e in r], -1) for r in self.entries], -2)
        return self.entries[0][0].with_values(np.linalg.det(vals))

    def map(self, fn) -> "MatrixField":
        return MatrixField(tuple(tuple(fn(e) for e in r) for r in self.entries))


def symbolic_det(rows) -> Expr:
    """Laplace expansion along the first row (fine for m <= 4)."""
    m = len(rows)
    if m == 1:
        return as_expr(rows[0][0])
    if m == 2:
        return add(mul(rows[0][0], rows[1][1]), neg(mul(rows[0][1], rows[1][0])))
    terms = []
    for j in range(m):
        if as_expr(rows[0][j]).is_zero():
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        t = mul(rows[0][j], symbolic_det(minor))
        terms.append(t if j % 2 == 0 else neg(t))
    return add(*terms)
