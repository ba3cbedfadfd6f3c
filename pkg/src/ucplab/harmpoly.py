"""Exact polynomial algebra and harmonic homogeneous polynomials in the plane.

Polynomials are sparse dictionaries {exponent tuple: coefficient}. Integer
and ``Fraction`` coefficients keep products and Laplacians exact; floats
are accepted where the caller supplies them.

A harmonic homogeneous polynomial of degree k is ``alpha Re z^k + beta Im z^k``.
Quadruples p11, p12, p21, p22 of such polynomials with p11 p22 = p12 p21
fall into two families: the diagonal pair is a reciprocal rescaling of the
off-diagonal pair, or one entry is constant, the off-diagonal entries are
``A Re z^k + B Im z^k`` and ``C Re z^k + D Im z^k`` with AC + BD = 0, and the
remaining entry is their product.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from numbers import Number, Rational

import numpy as np

from .errors import OrthogonalityViolated, ZeroPolynomial

TRIVIAL = "trivial-case"
CONJUGATE = "conjugate-product-case"
IDENTITY_FAILS = "identity-fails"
UNCLASSIFIED = "unclassified"


def _exact(c):
    if isinstance(c, bool):
        return int(c)
    if isinstance(c, (int, Fraction)):
        return c
    if isinstance(c, Rational):
        return Fraction(c)
    return c


class Poly:
    """Sparse multivariate polynomial with exact arithmetic where possible."""

    __slots__ = ("nvars", "terms")

    def __init__(self, terms=None, nvars: int = 2):
        self.nvars = nvars
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(v) for v in e)
            if len(e) != nvars:
                raise ValueError("exponent length differs from nvars")
            c = _exact(c)
            if c != 0:
                clean[e] = clean.get(e, 0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0}

    # constructors
    @classmethod
    def constant(cls, c, nvars: int = 2):
        return cls({(0,) * nvars: c}, nvars)

    @classmethod
    def var(cls, i: int, nvars: int = 2):
        e = [0] * nvars
        e[i] = 1
        return cls({tuple(e): 1}, nvars)

    def _coerce(self, other):
        if isinstance(other, Poly):
            if other.nvars != self.nvars:
                raise ValueError("polynomials in different numbers of variables")
            return other
        return Poly.constant(other, self.nvars)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return Poly(out, self.nvars)

    __radd__ = __add__

    def __neg__(self):
        return Poly({e: -c for e, c in self.terms.items()}, self.nvars)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly(out, self.nvars)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = Poly.constant(1, self.nvars)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Number):
            other = Poly.constant(other, self.nvars)
        if not isinstance(other, Poly):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        return hash(self.key())

    def key(self):
        return (self.nvars, tuple(sorted(self.terms.items())))

    def __repr__(self):
        if not self.terms:
            return "0"
        names = "xyzt"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"{names[i]}^{k}" if k > 1 else names[i]
                            for i, k in enumerate(e) if k)
            parts.append(f"{c}" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def min_degree(self) -> int:
        return min((sum(e) for e in self.terms), default=-1)

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def coeff(self, e) -> Number:
        return self.terms.get(tuple(e), 0)

    def partial(self, i: int) -> "Poly":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = c * e[i]
        return Poly(out, self.nvars)

    def laplacian(self) -> "Poly":
        out = Poly({}, self.nvars)
        for i in range(self.nvars):
            out = out + self.partial(i).partial(i)
        return out

    def leading_nonzero(self, tol: float = 0.0):
        """First (monomial, coefficient) with |coefficient| > tol in sorted order."""
        for e, c in sorted(self.terms.items()):
            if abs(c) > tol:
                return e, c
        return None

    def __call__(self, *xs):
        xs = [np.asarray(x, dtype=float) for x in xs]
        out = 0.0
        for e, c in self.terms.items():
            term = float(c)
            for x, k in zip(xs, e):
                term = term * x ** k
            out = out + term
        return out

    def substitute_linear(self, L) -> "Poly":
        """p(L xi) as a polynomial in xi, for a square matrix L."""
        L = np.asarray(L, dtype=object)
        n = self.nvars
        lin = [sum((Poly.var(j, n) * _exact(L[i, j]) for j in range(n)), Poly({}, n))
               for i in range(n)]
        out = Poly({}, n)
        for e, c in self.terms.items():
            term = Poly.constant(c, n)
            for i, k in enumerate(e):
                if k:
                    term = term * lin[i] ** k
            out = out + term
        return out


class BivarPoly(Poly):
    """Polynomial in (x, y); ``dense()`` returns the coefficient grid c[i][j] of x^i y^j."""

    def __init__(self, terms=None, nvars: int = 2):
        if nvars != 2:
            raise ValueError("BivarPoly is bivariate")
        super().__init__(terms, 2)

    @classmethod
    def from_poly(cls, p: Poly) -> "BivarPoly":
        return cls(p.terms)

    def dense(self) -> np.ndarray:
        d = max(self.degree(), 0)
        grid = np.zeros((d + 1, d + 1), dtype=object)
        for (i, j), c in self.terms.items():
            grid[i, j] = c
        return grid


def re_im_zk(k: int) -> tuple[BivarPoly, BivarPoly]:
    """Re z^k and Im z^k with integer coefficients."""
    re, im = {}, {}
    for j in range(k + 1):
        c = comb(k, j)
        if j % 2 == 0:
            re[(k - j, j)] = c * (-1) ** (j // 2)
        else:
            im[(k - j, j)] = c * (-1) ** ((j - 1) // 2)
    return BivarPoly(re), BivarPoly(im)


@dataclass(frozen=True)
class HarmHomPoly:
    """alpha Re z^k + beta Im z^k."""

    k: int
    alpha: Number = 1
    beta: Number = 0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("degree must be non-negative")
        object.__setattr__(self, "alpha", _exact(self.alpha))
        object.__setattr__(self, "beta", _exact(self.beta) if self.k > 0 else 0)

    def to_poly(self) -> BivarPoly:
        re, im = re_im_zk(self.k)
        return BivarPoly.from_poly(re * self.alpha + im * self.beta)

    def is_zero(self) -> bool:
        return self.alpha == 0 and self.beta == 0

    @property
    def polar(self) -> tuple[float, float]:
        """(r, phi0) with alpha Re z^k + beta Im z^k = r rho^k cos(k phi + phi0)."""
        return math.hypot(float(self.alpha), float(self.beta)), math.atan2(-float(self.beta),
                                                                            float(self.alpha))

    def polar_eval(self, x, y):
        r, phi0 = self.polar
        rho, phi = np.hypot(x, y), np.arctan2(y, x)
        return r * rho ** self.k * np.cos(self.k * phi + phi0)

    def __call__(self, x, y):
        return self.to_poly()(x, y)

    def scaled(self, t) -> "HarmHomPoly":
        return HarmHomPoly(self.k, self.alpha * t, self.beta * t)


def harmonic_space_dimension(k: int) -> int:
    """Kernel dimension of the Laplacian on homogeneous degree-k polynomials (exact rank)."""
    if k < 2:
        return k + 1
    rows = []
    # Laplacian maps x^(k-j) y^j to degree k-2; build the matrix column by column
    for j in range(k + 1):
        lap = BivarPoly({(k - j, j): 1}).laplacian()
        rows.append([Fraction(lap.coeff((k - 2 - i, i))) for i in range(k - 1)])
    return (k + 1) - _exact_rank(rows)


def _exact_rank(rows) -> int:
    M = [list(r) for r in rows]
    rank = 0
    ncols = len(M[0]) if M else 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(M)) if M[r][col] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for r in range(len(M)):
            if r != rank and M[r][col] != 0:
                f = M[r][col] / M[rank][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[rank])]
        rank += 1
    return rank


def decompose(p: Poly, k: int | None = None) -> tuple[HarmHomPoly, Poly]:
    """Write a homogeneous harmonic p as alpha Re z^k + beta Im z^k; return the residual too."""
    if p.is_zero():
        raise ZeroPolynomial("cannot decompose the zero polynomial")
    k = p.degree() if k is None else k
    alpha = p.coeff((k, 0))
    beta = Fraction(_exact(p.coeff((k - 1, 1)))) / k if k >= 1 else 0
    if isinstance(beta, Fraction) and beta.denominator == 1:
        beta = beta.numerator
    h = HarmHomPoly(k, alpha, beta)
    return h, p - h.to_poly()


def product_is_harmonic(p, q, tol: float = 1e-12):
    """Whether p q is harmonic; witness is the first nonzero Laplacian coefficient."""
    P = p.to_poly() if isinstance(p, HarmHomPoly) else p
    Q = q.to_poly() if isinstance(q, HarmHomPoly) else q
    lap = (P * Q).laplacian()
    exact = all(isinstance(c, (int, Fraction)) for c in lap.terms.values())
    w = lap.leading_nonzero(0.0 if exact else tol)
    return w is None, w


@dataclass(frozen=True)
class Classification:
    outcome: str
    witness: object = None
    params: tuple | None = None   # (A, B, C, D, k) in the conjugate-product case
    layout: tuple | None = None   # (constant, product, factor1, factor2) entry names


def _proportional(p: Poly, q: Poly):
    """t with p = t q exactly, or None."""
    if p.is_zero() or q.is_zero():
        return None
    e, c = next(iter(sorted(q.terms.items())))
    pc = p.coeff(e)
    if pc == 0:
        return None
    t = Fraction(pc) / Fraction(c) if isinstance(pc, (int, Fraction)) and isinstance(c, (int, Fraction)) else pc / c
    return t if (p - q * t).is_zero() else None


def _as_poly(p):
    return p.to_poly() if isinstance(p, HarmHomPoly) else p


def classify_quadruple(p11, p12, p21, p22) -> Classification:
    """Sort a harmonic quadruple into the two families of the product identity.

    Returns ``identity-fails`` (with the first monomial of p11 p22 - p12 p21
    as witness) when the identity does not hold, ``trivial-case`` when the
    diagonal pair rescales the off-diagonal pair, ``conjugate-product-case``
    with parameters (A, B, C, D, k) when one entry is constant, and
    ``unclassified`` for anything else.
    """
    names = ("p11", "p12", "p21", "p22")
    P = dict(zip(names, map(_as_poly, (p11, p12, p21, p22))))
    for nm, p in P.items():
        if p.is_zero():
            raise ZeroPolynomial(f"{nm} is the zero polynomial")
    diff = P["p11"] * P["p22"] - P["p12"] * P["p21"]
    if not diff.is_zero():
        return Classification(IDENTITY_FAILS, diff.leading_nonzero())
    for a, b in (("p12", "p21"), ("p21", "p12")):
        t = _proportional(P["p11"], P[a])
        if t is not None and _proportional(P["p22"], P[b]) is not None:
            return Classification(TRIVIAL, witness=(a, t))
    # conjugate-product family: one constant entry, its diagonal partner the product
    partner = {"p11": "p22", "p22": "p11", "p12": "p21", "p21": "p12"}
    others = {"p11": ("p12", "p21"), "p22": ("p12", "p21"),
              "p12": ("p11", "p22"), "p21": ("p11", "p22")}
    for nm in names:
        if P[nm].degree() != 0:
            continue
        f1, f2 = others[nm]
        k1, k2 = P[f1].degree(), P[f2].degree()
        if k1 != k2 or k1 < 1:
            continue
        k = k1
        (A, B), (C, D) = _ab(P[f1], k), _ab(P[f2], k)
        if A * C + B * D != 0 and abs(A * C + B * D) > 1e-10 * (abs(A) + abs(B)) * (abs(C) + abs(D)):
            return Classification(UNCLASSIFIED, witness=("AC+BD", A * C + B * D))
        return Classification(CONJUGATE, params=(A, B, C, D, k),
                              layout=(nm, partner[nm], f1, f2))
    return Classification(UNCLASSIFIED, witness="no lemma pattern matched")


def _ab(p: Poly, k: int):
    h, _ = decompose(p, k)
    return h.alpha, h.beta


def construct_quadruple(A, B, C, D, k: int):
    """p22 = 1, p12 = A Re z^k + B Im z^k, p21 = C Re z^k + D Im z^k, p11 = p12 p21."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if (A == 0 and B == 0) or (C == 0 and D == 0):
        raise ZeroPolynomial("(A, B) and (C, D) must be nonzero")
    dot = A * C + B * D
    if abs(dot) > 1e-12 * (abs(A) + abs(B)) * (abs(C) + abs(D)):
        raise OrthogonalityViolated(f"AC + BD = {dot} is not zero")
    p12 = HarmHomPoly(k, A, B)
    p21 = HarmHomPoly(k, C, D)
    p11 = BivarPoly.from_poly(p12.to_poly() * p21.to_poly())
    return p11, p12, p21, HarmHomPoly(0, 1)


def small_family(kmax: int = 3, coeffs=range(-2, 3)):
    """Every nonzero alpha Re z^k + beta Im z^k with k <= kmax and integer coefficients."""
    out = []
    for k in range(kmax + 1):
        if k == 0:
            out.extend(HarmHomPoly(0, a) for a in coeffs if a != 0)
        else:
            out.extend(HarmHomPoly(k, a, b) for a in coeffs for b in coeffs if (a, b) != (0, 0))
    return out


@dataclass
class ScanReport:
    family_size: int
    identity_count: int
    outcomes: dict
    exceptions: list


def exhaustive_scan(kmax: int = 3, coeffs=range(-2, 3)) -> ScanReport:
    """Classify every quadruple from ``small_family`` satisfying p11 p22 = p12 p21.

    Pairs are grouped by their exact product, so only quadruples that satisfy
    the identity are visited.
    """
    fam = small_family(kmax, coeffs)
    polys = [h.to_poly() for h in fam]
    groups: dict = {}
    for i, j in itertools.product(range(len(fam)), repeat=2):
        groups.setdefault((polys[i] * polys[j]).key(), []).append((i, j))
    outcomes: dict = {}
    exceptions = []
    count = 0
    for pairs in groups.values():
        for (i11, i22), (i12, i21) in itertools.product(pairs, repeat=2):
            count += 1
            cl = classify_quadruple(polys[i11], polys[i12], polys[i21], polys[i22])
            outcomes[cl.outcome] = outcomes.get(cl.outcome, 0) + 1
            if cl.outcome not in (TRIVIAL, CONJUGATE):
                exceptions.append((fam[i11], fam[i12], fam[i21], fam[i22], cl))
    return ScanReport(len(fam), count, outcomes, exceptions)
