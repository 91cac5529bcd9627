"""Elliptic modular forms and their oldform copies.

Level-1 Eisenstein and cusp bases (echelonized from E4^a E6^b monomials),
Hecke eigenforms in exact or high-precision arithmetic, Satake parameters,
and the exact inner-product ratios <g|B_L, g|B_M> / <g, g> that control
oldform Gram matrices at square-free level.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd

import mpmath as mp
import sympy

from .core import (
    PrecisionError, QSeries, divisors, factorize, is_prime, is_squarefree,
    mpf_to_fraction, op_B, op_T, prime_divisors, rref, solve_exact,
)

__all__ = [
    "e2_series", "e4_series", "e6_series", "delta_series",
    "dim_cusp_level1", "victor_miller_basis", "t2_matrix",
    "NewformGL2", "eigenbasis_level1", "DegenerateSpectrumError",
    "SatakeParams", "satake",
    "old_basis", "OldClassDescriptor", "OldformGram",
    "eta_value", "gram_ratio", "pilot_ratio",
]


def _to_mp(x):
    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / x.denominator
    if isinstance(x, int):
        return mp.mpf(x)
    return x


@lru_cache(maxsize=64)
def _divisor_power_sums(r: int, P: int) -> tuple:
    s = [0] * P
    for d in range(1, P):
        dr = d ** r
        for m in range(d, P, d):
            s[m] += dr
    return tuple(s)


def e2_series(P: int) -> QSeries:
    """1 - 24 sum sigma_1(n) q^n.  Quasi-modular; tagged weight 2 anyway."""
    s = _divisor_power_sums(1, P)
    return QSeries({0: 1, **{n: -24 * s[n] for n in range(1, P)}}, P, 2, 1)


def e4_series(P: int) -> QSeries:
    s = _divisor_power_sums(3, P)
    return QSeries({0: 1, **{n: 240 * s[n] for n in range(1, P)}}, P, 4, 1)


def e6_series(P: int) -> QSeries:
    s = _divisor_power_sums(5, P)
    return QSeries({0: 1, **{n: -504 * s[n] for n in range(1, P)}}, P, 6, 1)


def delta_series(P: int) -> QSeries:
    """The discriminant cusp form (E4^3 - E6^2)/1728, integer coefficients."""
    diff = e4_series(P) ** 3 - e6_series(P) ** 2
    for n, c in diff.coeffs.items():
        if c % 1728:
            raise RuntimeError(f"discriminant numerator not divisible at q^{n}")
    return diff.map_coeffs(lambda c: c // 1728)


def dim_cusp_level1(w: int) -> int:
    if w % 2 or w < 12:
        return 0
    full = w // 12 + (0 if w % 12 == 2 else 1)
    return full - 1


@lru_cache(maxsize=64)
def _vm_rows(w: int, P: int) -> tuple:
    if w < 4 or w % 2:
        raise ValueError(f"weight must be even and >= 4, got {w}")
    dim_full = w // 12 + (0 if w % 12 == 2 else 1)
    if P < dim_full + 1:
        raise ValueError(f"precision {P} cannot echelonize {dim_full} forms")
    e4 = e4_series(P)
    e6 = e6_series(P)
    monos = []
    for b in range(w // 6 + 1):
        rem = w - 6 * b
        if rem % 4:
            continue
        monos.append((e4 ** (rem // 4)) * (e6 ** b))
    if len(monos) != dim_full:
        raise RuntimeError("monomial count disagrees with the dimension formula")
    rows, pivots = rref([m.coeff_list() for m in monos])
    if pivots != list(range(dim_full)):
        raise RuntimeError(f"unexpected pivot layout {pivots}")
    out = []
    for row in rows[1:]:
        if any(c.denominator != 1 for c in row):
            raise RuntimeError("echelon basis came out non-integral")
        out.append(tuple(c.numerator for c in row))
    return tuple(out)


def victor_miller_basis(w: int, P: int) -> list[QSeries]:
    """Echelonized integral cusp basis of weight w, level 1: row i starts q^{i+1}."""
    return [QSeries.from_list(r, weight=w, level=1) for r in _vm_rows(w, P)]


@lru_cache(maxsize=64)
def _t2_entries(w: int) -> tuple:
    d = dim_cusp_level1(w)
    if d == 0:
        return ()
    basis = victor_miller_basis(w, 2 * d + 2)
    cols = []
    for b in basis:
        tb = op_T(b, 2, w)
        cols.append([tb[i] for i in range(1, d + 1)])
    return tuple(tuple(cols[j][i] for j in range(d)) for i in range(d))


def t2_matrix(w: int) -> list[list[int]]:
    """Integer matrix of the n=2 Hecke operator on the echelon cusp basis."""
    return [list(r) for r in _t2_entries(w)]


class DegenerateSpectrumError(RuntimeError):
    """The n=2 Hecke operator failed to separate the space; reported, not tie-broken."""


class NewformGL2:
    """Normalized Hecke newform: arithmetic coefficients a(n), a(1) = 1.

    Exact instances keep int/Fraction coefficients; inexact ones carry
    mpmath reals produced by a floating eigen-decomposition at `digits`
    working digits.  Analytic values lam(n) = a(n)/n^{(w-1)/2} are derived
    on demand, never stored, so the two normalizations cannot drift apart.
    """

    def __init__(self, weight: int, level: int, coeffs, al_signs=None,
                 exact=None, digits=None, validate: bool = True):
        self.w = int(weight)
        if self.w % 2 or self.w < 2:
            raise ValueError(f"weight must be a positive even integer, got {weight}")
        self.level = int(level)
        if self.level < 1 or not is_squarefree(self.level):
            raise ValueError(f"level must be square-free, got {level}")
        seq = list(coeffs)
        if len(seq) < 2:
            raise ValueError("need at least the a(1) coefficient")
        seq[0] = 0
        if exact is None:
            exact = all(isinstance(c, (int, Fraction)) for c in seq)
        self.exact = bool(exact)
        self.digits = int(digits) if digits is not None else mp.mp.dps
        self._a = seq
        self.al = dict(al_signs) if al_signs else {}
        for p in prime_divisors(self.level):
            if p not in self.al:
                self.al[p] = self._derive_al(p)
        for p, s in self.al.items():
            if self.level % p or s not in (1, -1):
                raise ValueError(f"bad sign table entry {p}: {s}")
        if validate:
            self._validate()

    @property
    def prec(self) -> int:
        return len(self._a)

    def _derive_al(self, p: int) -> int:
        if p >= len(self._a):
            raise ValueError(f"too few coefficients to derive the sign at {p}")
        scale = p ** ((self.w - 2) // 2)
        if self.exact:
            s = Fraction(-self._a[p], scale)
            if s not in (1, -1):
                raise ValueError(f"a({p}) = {self._a[p]} incompatible with square-free level")
            return int(s)
        s = -_to_mp(self._a[p]) / scale
        si = 1 if s > 0 else -1
        if abs(s - si) > mp.mpf(10) ** (-(self.digits - 10)):
            raise ValueError(f"a({p}) not within tolerance of +-{scale}")
        return si

    def _validate(self):
        tol = mp.mpf(10) ** (-(self.digits - 10))
        if self.exact:
            if self._a[1] != 1:
                raise ValueError("coefficients must be normalized with a(1) = 1")
        elif abs(_to_mp(self._a[1]) - 1) > tol:
            raise ValueError("a(1) differs from 1 beyond tolerance")
        for p, s in self.al.items():
            if p >= self.prec:
                continue
            want = -s * p ** ((self.w - 2) // 2)
            if self.exact:
                if self._a[p] != want:
                    raise ValueError(f"a({p}) inconsistent with its sign")
            elif abs(_to_mp(self._a[p]) - want) > tol * max(1, abs(want)):
                raise ValueError(f"a({p}) inconsistent with its sign")
        for p in (2, 3, 5, 7):
            if self.level % p == 0 or p >= self.prec:
                continue
            pw = p ** (self.w - 1)
            for r in range(1, 7):
                if p ** (r + 1) >= self.prec:
                    break
                delta = (self._a[p ** (r + 1)]
                         - self._a[p] * self._a[p ** r]
                         + pw * self._a[p ** (r - 1)])
                if self.exact:
                    if delta != 0:
                        raise ValueError(f"coefficient recurrence fails at {p}^{r + 1}")
                else:
                    scale = mp.power(p, Fraction(r + 1) * (self.w - 1) / 2)
                    if abs(_to_mp(delta)) > 4 * tol * scale:
                        raise ValueError(f"coefficient recurrence fails at {p}^{r + 1}")

    # -- coefficient accessors -------------------------------------------

    def a(self, n: int):
        if n < 1:
            raise ValueError("coefficients indexed from 1")
        if n < self.prec:
            return self._a[n]
        val = 1
        for p, e in factorize(n).items():
            val = val * self._a_prime_power(p, e)
        return val

    def _a_prime_power(self, p: int, e: int):
        if p ** e < self.prec:
            return self._a[p ** e]
        if p >= self.prec:
            raise PrecisionError(f"a({p}) not stored; cannot extend multiplicatively")
        ap = self._a[p]
        if self.level % p == 0:
            return ap ** e
        pw = p ** (self.w - 1)
        prev, cur = 1, ap
        for _ in range(e - 1):
            prev, cur = cur, ap * cur - pw * prev
        return cur

    def lam(self, n: int):
        """Analytic normalization a(n) / n^{(w-1)/2} at the ambient precision."""
        return _to_mp(self.a(n)) / mp.power(n, mp.mpf(self.w - 1) / 2)

    def lam1(self, n: int):
        """Multiplicative 'depth one' coefficients.

        At good p: a(p^e) - p^{w-2} a(p^{e-2}); at p dividing the level:
        a(p)^e.  Exact for exact forms.
        """
        if n < 1:
            raise ValueError("indexed from 1")
        val = 1
        for p, e in factorize(n).items():
            if self.level % p == 0:
                term = self._a_prime_power(p, 1) ** e
            elif e == 1:
                term = self.a(p)
            else:
                term = self.a(p ** e) - p ** (self.w - 2) * self.a(p ** (e - 2))
            val = val * term
        return val

    def al_sign(self, p: int) -> int:
        if self.level % p:
            raise ValueError(f"{p} does not divide the level")
        return self.al[p]

    def q_expansion(self, P: int | None = None) -> QSeries:
        P = self.prec if P is None else P
        if P > self.prec:
            raise PrecisionError(f"only {self.prec} coefficients stored")
        kind = "exact" if self.exact else "approx"
        return QSeries.from_list(self._a[:P], weight=self.w,
                                 level=self.level, kind=kind)

    def satake(self, p: int) -> "SatakeParams":
        if self.level % p == 0:
            raise ValueError("Satake pair defined away from the level")
        return satake(self.a(p), p, self.w)

    def __repr__(self):
        tag = "exact" if self.exact else f"~{self.digits}d"
        return (f"NewformGL2(w={self.w}, level={self.level}, "
                f"a2={self._a[2] if self.prec > 2 else '?'}, {tag})")


def _exact_kernel(M: list[list[int]], lam: Fraction) -> list[Fraction]:
    d = len(M)
    rows = [[Fraction(M[i][j]) - (lam if i == j else 0) for j in range(d)]
            for i in range(d)]
    red, pivots = rref(rows)
    red = [r for r in red if any(r)]
    free = [j for j in range(d) if j not in pivots[:len(red)]]
    if len(free) != 1:
        raise DegenerateSpectrumError(f"eigenvalue {lam} has multiplicity {len(free)}")
    j0 = free[0]
    v = [Fraction(0)] * d
    v[j0] = Fraction(1)
    for row, pc in zip(red, pivots):
        v[pc] = -row[j0]
    return v


def _inverse_iteration(M: list[list[int]], lam) -> list:
    # lam is a floating approximation, so M - lam*I is exactly invertible
    # over Q; one exact solve amplifies the eigendirection enormously.
    d = len(M)
    lam_fr = mpf_to_fraction(lam)
    A = [[Fraction(M[i][j]) - (lam_fr if i == j else 0) for j in range(d)]
         for i in range(d)]
    x = [Fraction(1)] * d
    for _ in range(2):
        x = solve_exact(A, x)
        top = max(x, key=abs)
        x = [c / top for c in x]
    if x[0] == 0:
        raise RuntimeError("eigenvector has vanishing leading coefficient")
    lead = x[0]
    return [_to_mp(c / lead) for c in x]


_EIGEN_CACHE: dict = {}


def eigenbasis_level1(w: int, P: int | None = None, digits: int = 50) -> list[NewformGL2]:
    """Simultaneous eigenforms of weight w at level 1, sorted by a(2).

    One-dimensional spaces come out exact; otherwise roots of the exact
    characteristic polynomial are taken at `digits` working digits and the
    eigenvectors recovered by inverse iteration.
    """
    d = dim_cusp_level1(w)
    if d == 0:
        return []
    if P is None:
        P = max(30, 2 * d + 2)
    key = (w, P, digits)
    if key in _EIGEN_CACHE:
        return list(_EIGEN_CACHE[key])
    basis = victor_miller_basis(w, max(P, 2 * d + 2))
    out: list[NewformGL2] = []
    if d == 1:
        coeffs = [int(c) for c in basis[0].coeff_list(P)]
        out.append(NewformGL2(w, 1, coeffs, digits=digits))
    else:
        M = t2_matrix(w)
        x = sympy.Symbol("x")
        charpoly = sympy.Matrix(M).charpoly(x)
        _, facs = sympy.factor_list(charpoly.as_expr())
        for fac, mult in facs:
            if mult > 1:
                raise DegenerateSpectrumError(f"repeated factor {fac}")
        scale = max(1, max(abs(c) for row in M for c in row))
        for fac, _mult in sorted(facs, key=lambda t: sympy.Poly(t[0], x).degree()):
            poly = sympy.Poly(fac, x)
            if poly.degree() == 1:
                c1, c0 = poly.all_coeffs()
                lam = Fraction(int(-c0), int(c1))
                v = _exact_kernel(M, lam)
                v = [c / v[0] for c in v]
                coeffs = [sum(v[i] * basis[i][n] for i in range(d))
                          for n in range(P)]
                ints = []
                for c in coeffs:
                    c = Fraction(c)
                    if c.denominator != 1:
                        raise RuntimeError("rational eigenform should be integral")
                    ints.append(c.numerator)
                out.append(NewformGL2(w, 1, ints, digits=digits))
            else:
                pc = [int(c) for c in poly.all_coeffs()]
                with mp.workdps(digits + 20):
                    roots = mp.polyroots([mp.mpf(c) for c in pc],
                                         maxsteps=200, extraprec=120)
                    tol = mp.mpf(10) ** (-(digits - 10))
                    for root in roots:
                        if abs(mp.im(root)) > tol * scale:
                            raise DegenerateSpectrumError("nonreal eigenvalue of a real operator")
                        lam = mp.re(root)
                        v = _inverse_iteration(M, lam)
                        resid = max(abs(sum(M[i][j] * v[j] for j in range(d)) - lam * v[i])
                                    for i in range(d))
                        if resid > tol * scale:
                            raise RuntimeError(f"eigen residual {resid} too large")
                        coeffs = [mp.fsum(v[i] * basis[i][n] for i in range(d))
                                  for n in range(P)]
                        out.append(NewformGL2(w, 1, coeffs, exact=False,
                                              digits=digits))
    a2s = sorted(_to_mp(f.a(2)) for f in out)
    for u, v in zip(a2s, a2s[1:]):
        if abs(u - v) < mp.mpf(10) ** (-digits // 2) * max(1, abs(u)):
            raise DegenerateSpectrumError("colliding a(2) values across factors")
    out.sort(key=lambda f: (_to_mp(f.a(2)), 0))
    _EIGEN_CACHE[key] = list(out)
    return list(out)


@dataclass
class SatakeParams:
    """Unitary pair with alpha + beta = a(p), alpha * beta = p^{w-1}."""
    alpha: object
    beta: object
    p: int
    w: int

    def a_pt(self, t: int):
        """Coefficient a(p^t) reconstructed from the parameter pair."""
        if t < 0:
            return mp.mpf(0)
        d = self.alpha - self.beta
        if abs(d) < mp.mpf(10) ** (-mp.mp.dps + 8) * max(1, abs(self.alpha)):
            return (t + 1) * self.alpha ** t
        return (self.alpha ** (t + 1) - self.beta ** (t + 1)) / d


def satake(a_p, p: int, w: int) -> SatakeParams:
    """Solve x^2 - a_p x + p^{w-1}; requires the unitary (good-prime) range."""
    a = _to_mp(a_p)
    disc = mp.mpc(a * a - 4 * mp.power(p, w - 1))
    root = mp.sqrt(disc)
    alpha = (a + root) / 2
    beta = (a - root) / 2
    size = mp.power(p, mp.mpf(w - 1) / 2)
    tol = mp.mpf(10) ** (-(mp.mp.dps - 10))
    if abs(abs(alpha) - size) > tol * size or abs(abs(beta) - size) > tol * size:
        raise ValueError(f"|a_p| = {abs(a)} leaves the unitary range at {p}")
    return SatakeParams(alpha, beta, p, w)


# -- oldform structure at square-free level ------------------------------


def old_basis(g: NewformGL2, N: int, P: int | None = None) -> dict:
    """Sign-indexed orthogonal spanning set sum_{d|L} sigma(d) g|B_d, L = N/level.

    Keys are sign tuples over the sorted primes of L; values are q-expansions
    tagged at the ambient level.
    """
    if not is_squarefree(N):
        raise ValueError(f"ambient level {N} must be square-free")
    if N % g.level:
        raise ValueError(f"{g.level} does not divide {N}")
    L = N // g.level
    if P is None:
        P = g.prec
    base = g.q_expansion(P)
    shifted = {}
    for dd in divisors(L):
        s = op_B(base, dd, w=g.w)
        shifted[dd] = s if s.prec == P else s.truncate(P)
    ps = prime_divisors(L)
    out = {}
    for signs in itertools.product((1, -1), repeat=len(ps)):
        sig = dict(zip(ps, signs))
        acc = QSeries.zero(P, weight=g.w, level=g.level, kind=base.kind)
        for dd, ser in shifted.items():
            s = 1
            for p in prime_divisors(dd):
                s *= sig[p]
            acc = acc + (ser if s == 1 else -ser)
        out[signs] = acc.with_tags(level=N)
    return out


@dataclass(frozen=True)
class OldClassDescriptor:
    """One sign character worth of oldform data for g inside level N."""
    g: NewformGL2
    N: int
    signs: tuple

    def __post_init__(self):
        if not is_squarefree(self.N):
            raise ValueError(f"{self.N} must be square-free")
        if self.N % self.g.level:
            raise ValueError(f"{self.g.level} does not divide {self.N}")
        ps = prime_divisors(self.L)
        if len(ps) != len(self.signs) or any(s not in (1, -1) for s in self.signs):
            raise ValueError(f"sign tuple {self.signs} does not match primes {ps}")

    @property
    def L(self) -> int:
        return self.N // self.g.level

    def sigma(self, d: int) -> int:
        if d < 1 or self.L % d:
            raise ValueError(f"{d} does not divide {self.L}")
        s = 1
        for p, sg in zip(prime_divisors(self.L), self.signs):
            if d % p == 0:
                s *= sg
        return s

    def series(self, P: int | None = None) -> QSeries:
        return old_basis(self.g, self.N, P)[self.signs]

    def norm_ratio(self):
        """<g_sigma, g_sigma> / <g, g>, exact for exact g."""
        tot = 0
        for d1 in divisors(self.L):
            for d2 in divisors(self.L):
                tot += (self.sigma(d1) * self.sigma(d2)
                        * pilot_ratio(self.g, d1, d2))
        return tot


def eta_value(g: NewformGL2, p: int, t: int, N: int):
    """Three-case local inner-product factor at a prime of the ambient level.

    t = 0 gives 1.  Otherwise lam1(p^t) p^{-wt/2}, with an extra p/(p+1)
    when p divides N but not the level of g.
    """
    if t < 0:
        raise ValueError("negative depth")
    one = Fraction(1) if g.exact else mp.mpf(1)
    if t == 0:
        return one
    if N % g.level:
        raise ValueError(f"{g.level} does not divide {N}")
    if not is_prime(p) or N % p:
        raise ValueError(f"{p} is not a prime of the ambient level {N}")
    lam1 = g.lam1(p ** t)
    if g.exact:
        val = Fraction(lam1) / p ** ((g.w // 2) * t)
        if g.level % p:
            val *= Fraction(p, p + 1)
    else:
        val = _to_mp(lam1) / mp.power(p, (g.w // 2) * t)
        if g.level % p:
            val *= mp.mpf(p) / (p + 1)
    return val


def gram_ratio(g: NewformGL2, L: int, M: int, N: int):
    """<g|B_L, g|B_M> / <g, g> as a product of local eta factors.

    Needs square-free N, level(g) | N, M | N/level(g), and L supported on
    primes of N.
    """
    if L < 1:
        raise ValueError("L must be positive")
    if not is_squarefree(N):
        raise ValueError(f"{N} must be square-free")
    if N % g.level:
        raise ValueError(f"{g.level} does not divide {N}")
    Mg = N // g.level
    if M < 1 or Mg % M:
        raise ValueError(f"{M} does not divide {Mg}")
    val = Fraction(1) if g.exact else mp.mpf(1)
    for q, t in factorize(L).items():
        if N % q:
            raise ValueError(f"prime {q} of L lies outside the ambient level")
        if g.level % q == 0:
            val *= eta_value(g, q, t, N)
        elif M % q == 0:
            val *= eta_value(g, q, t - 1, N)
        else:
            val *= eta_value(g, q, t, N)
    for q in prime_divisors(M):
        if L % q:
            val *= eta_value(g, q, 1, N)
    return val


def pilot_ratio(g: NewformGL2, X: int, M: int):
    """<g|B_X, g|B_M> / <g, g> by the closed gcd formula (square-free M).

    With l = (X, M): l^w lam1(X/l) lam1(M/l) / (XM)^{w/2} times
    prod q/(q+1) over primes q | XM/l^2 away from the level of g.
    """
    if X < 1 or M < 1:
        raise ValueError("positive shift indices only")
    if not is_squarefree(M):
        raise ValueError("the closed formula needs square-free M")
    l = gcd(X, M)
    wt = g.w
    lamX = g.lam1(X // l)
    lamM = g.lam1(M // l)
    if g.exact:
        val = Fraction(l ** wt, (X * M) ** (wt // 2)) * lamX * lamM
        for q in prime_divisors((X // l) * (M // l)):
            if g.level % q:
                val *= Fraction(q, q + 1)
        return val
    val = (mp.power(l, wt) * _to_mp(lamX) * _to_mp(lamM)
           / mp.power(X * M, wt // 2))
    for q in prime_divisors((X // l) * (M // l)):
        if g.level % q:
            val *= mp.mpf(q) / (q + 1)
    return val


class OldformGram:
    """Cached local-factor table plus the pairwise ratio evaluators for one g."""

    def __init__(self, g: NewformGL2, N: int):
        if not is_squarefree(N):
            raise ValueError(f"{N} must be square-free")
        if N % g.level:
            raise ValueError(f"{g.level} does not divide {N}")
        self.g = g
        self.N = N
        self.Mg = N // g.level
        self._eta: dict = {}

    def eta(self, p: int, t: int):
        key = (p, t)
        if key not in self._eta:
            self._eta[key] = eta_value(self.g, p, t, self.N)
        return self._eta[key]

    def lam1(self, n: int):
        return self.g.lam1(n)

    def ratio(self, L: int, M: int):
        return gram_ratio(self.g, L, M, self.N)

    def direct_ratio(self, X: int, M: int):
        return pilot_ratio(self.g, X, M)

    def __repr__(self):
        return f"OldformGram(g={self.g!r}, N={self.N})"
