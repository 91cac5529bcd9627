"""Half-integral weight forms on Gamma_0(4) and their plus subspace.

The graded ring of forms on Gamma_0(4) with the theta multiplier is free on
two generators: the unary theta series (weight 1/2) and the odd-divisor-sum
Eisenstein series F2 (weight 2).  Cusp forms of weight k + 1/2 whose
coefficients vanish outside D = 0, 3 (mod 4) are carved out of that span by
exact linear algebra; for odd k the resulting space mirrors the level-1 cusp
space of weight 2k eigenvalue by eigenvalue, which is what the rest of the
package leans on.
"""
from __future__ import annotations

from fractions import Fraction

import mpmath as mp
from sympy import jacobi_symbol

from .core import (
    PrecisionError, QSeries, is_prime, kernel_basis, mpf_to_fraction,
    op_U, rref, solve_exact,
)
from .gl2 import dim_cusp_level1

__all__ = [
    "theta_pair", "f2_series", "HalfIntForm", "plus_basis_level4",
    "kohnen_T_p2", "hecke_eigenvalue", "t_p2_matrix", "plus_eigen_for",
    "shimura_match",
]


def theta_pair(P: int) -> tuple[QSeries, QSeries]:
    """(theta0, theta1) to precision P: sum q^{n^2} and its -q twist."""
    if P < 1:
        raise ValueError("precision must be positive")
    t0 = {0: 1}
    t1 = {0: 1}
    n = 1
    while n * n < P:
        t0[n * n] = 2
        t1[n * n] = -2 if n % 2 else 2
        n += 1
    w = Fraction(1, 2)
    return QSeries(t0, P, w, 4), QSeries(t1, P, w, 4)


def f2_series(P: int) -> QSeries:
    """Weight-2 generator: sum of sigma_1(n) q^n over odd n only."""
    s = [0] * P
    for d in range(1, P, 2):
        for n in range(d, P, 2 * d):
            s[n] += d
    return QSeries({n: c for n, c in enumerate(s) if c}, P, 2, 4)


class HalfIntForm:
    """Cusp form of weight k + 1/2 with plus-type Fourier support.

    Coefficients are indexed by the discriminant-like exponent D, so
    c(D) is the q^D coefficient.  Construction checks that c(0) = 0 and
    that nothing lives on D = 1, 2 (mod 4); pass validate=False only for
    images of operators that genuinely leave the plus span.
    """

    __slots__ = ("k", "level", "series")

    def __init__(self, series: QSeries, k: int, level: int = 4,
                 validate: bool = True):
        if k < 1 or k % 2 == 0:
            raise ValueError(f"weight index must be odd and positive, got {k}")
        if level % 4:
            raise ValueError(f"level must be divisible by 4, got {level}")
        self.k = k
        self.level = level
        self.series = QSeries(series.coeffs, series.prec,
                              Fraction(2 * k + 1, 2), level, series.kind)
        if validate:
            self._validate()

    def _validate(self):
        if self.series.kind == "exact":
            bad = [n for n, c in self.series.coeffs.items()
                   if c and (n == 0 or n % 4 in (1, 2))]
            if bad:
                raise ValueError(f"plus support violated at exponents {sorted(bad)[:4]}")
            return
        mags = [abs(c) for c in self.series.coeffs.values()]
        scale = max(mags) if mags else mp.mpf(1)
        tol = mp.mpf(10) ** (8 - mp.mp.dps)
        bad = [n for n, c in self.series.coeffs.items()
               if abs(c) > tol * scale and (n == 0 or n % 4 in (1, 2))]
        if bad:
            raise ValueError(f"plus support violated at exponents {sorted(bad)[:4]}")

    # -- coefficient access ---------------------------------------------

    def c(self, D: int):
        if D < 0:
            return 0
        return self.series[D]

    __getitem__ = c

    @property
    def prec(self) -> int:
        return self.series.prec

    @property
    def kind(self) -> str:
        return self.series.kind

    def valuation(self) -> int:
        return self.series.valuation()

    # -- linear structure ------------------------------------------------

    def _check_compatible(self, other: "HalfIntForm"):
        if self.k != other.k or self.level != other.level:
            raise ValueError("forms live in different spaces")

    def __add__(self, other):
        if not isinstance(other, HalfIntForm):
            return NotImplemented
        self._check_compatible(other)
        return HalfIntForm(self.series + other.series, self.k, self.level,
                           validate=False)

    def __sub__(self, other):
        if not isinstance(other, HalfIntForm):
            return NotImplemented
        self._check_compatible(other)
        return HalfIntForm(self.series - other.series, self.k, self.level,
                           validate=False)

    def scale(self, x) -> "HalfIntForm":
        return HalfIntForm(self.series.scale(x), self.k, self.level,
                           validate=False)

    def normalized(self) -> "HalfIntForm":
        """Rescale so the first (significant) coefficient is 1."""
        if self.kind == "exact":
            v = self.valuation()
            if v >= self.prec:
                raise ValueError("cannot normalize the zero form")
            lead = self.series[v]
            return self.scale(Fraction(1) / Fraction(lead))
        mags = [abs(c) for c in self.series.coeffs.values()]
        if not mags:
            raise ValueError("cannot normalize the zero form")
        tol = max(mags) * mp.mpf(10) ** (8 - mp.mp.dps)
        v = min(n for n, c in self.series.coeffs.items() if abs(c) > tol)
        return self.scale(1 / self.series[v])

    def to_approx(self) -> "HalfIntForm":
        return HalfIntForm(self.series.to_approx(), self.k, self.level,
                           validate=False)

    def __eq__(self, other):
        if not isinstance(other, HalfIntForm):
            return NotImplemented
        return self.k == other.k and self.level == other.level \
            and self.series == other.series

    def __hash__(self):
        raise TypeError("HalfIntForm is unhashable")

    def __repr__(self):
        v = self.valuation()
        lead = "0" if v >= self.prec else f"c({v})={self.series[v]}"
        return (f"HalfIntForm(k={self.k}, level={self.level}, {lead}, "
                f"prec={self.prec})")


def _plus_monomials(k: int, P: int) -> list[QSeries]:
    # theta0^a F2^b with a + 4b = 2k + 1 spans weight k + 1/2 on Gamma_0(4)
    t0, _ = theta_pair(P)
    f2 = f2_series(P)
    amax = 2 * k + 1
    tp = [QSeries.one(P, 0, 4)]
    for _ in range(amax):
        tp.append((tp[-1] * t0).truncate(P))
    out = []
    fb = QSeries.one(P, 0, 4)
    b = 0
    while 4 * b <= amax:
        out.append((tp[amax - 4 * b] * fb).truncate(P))
        fb = (fb * f2).truncate(P)
        b += 1
    return out


_BASIS_CACHE: dict = {}


def plus_basis_level4(k: int, P: int | None = None) -> list[HalfIntForm]:
    """Echelon basis of the weight k + 1/2 cusp plus space on Gamma_0(4).

    Linear constraints (constant term zero, nothing on exponents 1, 2 mod 4)
    are imposed on the monomial span up to a Sturm-scale bound; the kernel
    dimension must reproduce the level-1 weight-2k cusp dimension or the
    construction aborts.  Pivot coefficients are normalized to 1.
    """
    if k % 2 == 0 or k < 3:
        raise ValueError(f"weight index must be odd and >= 3, got {k}")
    bound = 2 * k + 8
    if P is None:
        P = bound + 40
    if P <= bound:
        raise ValueError(f"precision {P} below the constraint bound {bound}")
    key = (k, P)
    if key in _BASIS_CACHE:
        return list(_BASIS_CACHE[key])
    target = dim_cusp_level1(2 * k)
    monos = [m.coeff_list() for m in _plus_monomials(k, P)]
    constrained = [0] + [n for n in range(1, bound) if n % 4 in (1, 2)]
    matrix = [[col[n] for col in monos] for n in constrained]
    kern = kernel_basis(matrix)
    if len(kern) != target:
        raise RuntimeError(
            f"plus-space solver found dimension {len(kern)} at weight index "
            f"{k}, expected {target}")
    rows = []
    for v in kern:
        acc = [Fraction(0)] * P
        for x, col in zip(v, monos):
            if x:
                for n, cv in enumerate(col):
                    if cv:
                        acc[n] += x * cv
        rows.append(acc)
    red, _ = rref(rows) if rows else ([], [])
    out = [HalfIntForm(QSeries.from_list(row, 0, 4), k) for row in red]
    _BASIS_CACHE[key] = out
    return list(out)


def kohnen_T_p2(h: HalfIntForm, p: int, k: int | None = None) -> HalfIntForm:
    """Hecke operator at p^2 on weight k + 1/2 plus forms.

    Odd p acts by c(n) -> c(p^2 n) + p^{k-1} ((-1)^k n | p) c(n)
    + p^{2k-1} c(n / p^2) and preserves the plus span.  At p = 2 this is
    the raw coefficient extraction c(n) -> c(4n), which usually leaves the
    plus span, so the result is returned unvalidated and carries no
    eigenvalue semantics.
    """
    if k is None:
        k = h.k
    elif k != h.k:
        raise ValueError(f"weight index {k} does not match the form ({h.k})")
    if h.level != 4:
        raise ValueError("operator implemented for level 4 only")
    if p == 2:
        return HalfIntForm(op_U(h.series, 4), k, h.level, validate=False)
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    P2 = h.prec // (p * p)
    if P2 < 1:
        raise PrecisionError(f"precision {h.prec} too small for T({p}^2)")
    eps = -1 if k % 2 else 1
    mid = p ** (k - 1)
    top = p ** (2 * k - 1)
    out = {}
    for n in range(P2):
        val = h.c(p * p * n)
        cn = h.c(n)
        if cn:
            chi = int(jacobi_symbol(eps * n, p))
            if chi:
                val = val + mid * chi * cn
        if n % (p * p) == 0:
            low = h.c(n // (p * p))
            if low:
                val = val + top * low
        if val:
            out[n] = val
    return HalfIntForm(QSeries(out, P2, 0, h.level, h.series.kind), k, h.level)


def hecke_eigenvalue(h: HalfIntForm, p: int):
    """(lambda, residual) of T(p^2) on h, residual relative to the image size.

    residual 0 (exact) or below working tolerance means h really is an
    eigenform; anything larger is a quantitative proportionality failure.
    """
    th = kohnen_T_p2(h, p)
    D0 = h.valuation()
    if D0 >= th.prec:
        raise PrecisionError("form precision too small to read an eigenvalue")
    lam = th.c(D0) / h.c(D0) if h.kind == "approx" \
        else Fraction(th.c(D0)) / Fraction(h.c(D0))
    if isinstance(lam, Fraction) and lam.denominator == 1:
        lam = lam.numerator
    mags = [abs(th.c(D)) for D in range(th.prec)]
    scale = max([m for m in mags] + [1 if h.kind == "exact" else mp.mpf(1)])
    resid = max(abs(th.c(D) - lam * h.c(D)) for D in range(th.prec)) / scale
    return lam, resid


def t_p2_matrix(basis: list[HalfIntForm], p: int) -> list[list[Fraction]]:
    """Exact matrix of T(p^2) on an echelonized plus basis.

    Entry [i][j] is the coordinate of T(p^2) basis_j along basis_i; the
    reconstruction is checked against the full image series, which verifies
    that the operator really stabilizes the computed space.
    """
    if not basis:
        return []
    pivots = [h.valuation() for h in basis]
    if sorted(set(pivots)) != pivots:
        raise ValueError("basis is not in echelon form")
    cols = []
    for h in basis:
        th = kohnen_T_p2(h, p)
        if th.prec <= pivots[-1]:
            raise PrecisionError(
                f"image precision {th.prec} cannot see pivot {pivots[-1]}")
        coords = [Fraction(th.c(D)) for D in pivots]
        recon = [sum(coords[i] * basis[i].c(D) for i in range(len(basis)))
                 for D in range(th.prec)]
        if any(recon[D] != th.c(D) for D in range(th.prec)):
            raise RuntimeError(f"T({p}^2) image left the plus space")
        cols.append(coords)
    d = len(basis)
    return [[cols[j][i] for j in range(d)] for i in range(d)]


def plus_eigen_for(f, P: int | None = None, digits: int | None = None,
                   p: int = 3):
    """The plus-space eigenform whose T(p^2) eigenvalue tracks a_f(p).

    f must be a level-1 eigenform of weight 2k with k odd.  For a
    one-dimensional space the exact generator is returned; otherwise the
    eigenvector is pinned by inverse iteration at the approximate
    eigenvalue, solved exactly over Q, and returned at working precision.
    """
    if f.level != 1:
        raise ValueError("construction only covers level 4, i.e. newform level 1")
    if f.w % 4 != 2:
        raise ValueError(f"weight {f.w} has even weight index; no plus pairing here")
    k = f.w // 2
    basis = plus_basis_level4(k, P)
    if not basis:
        raise ValueError(f"plus space at weight index {k} is trivial")
    digits = digits if digits is not None else (f.digits or mp.mp.dps)
    tol = mp.mpf(10) ** (10 - digits)
    if len(basis) == 1:
        h = basis[0]
        lam, resid = hecke_eigenvalue(h, p)
        if f.exact:
            if resid != 0 or lam != f.a(p):
                raise RuntimeError(
                    f"eigenvalue {lam} does not match a({p}) = {f.a(p)}")
        elif abs(lam - f.a(p)) > tol * max(1, abs(f.a(p))):
            raise RuntimeError("eigenvalue does not match a(p) at tolerance")
        return h
    M = t_p2_matrix(basis, p)
    d = len(basis)
    target = f.a(p)
    if f.exact:
        shifted = [[M[i][j] - (Fraction(target) if i == j else 0)
                    for j in range(d)] for i in range(d)]
        kern = kernel_basis(shifted)
        if len(kern) != 1:
            raise RuntimeError(f"eigenvalue multiplicity {len(kern)}, need 1")
        v = kern[0]
    else:
        with mp.workdps(digits + 20):
            lam_fr = mpf_to_fraction(target)
            A = [[Fraction(M[i][j]) - (lam_fr if i == j else 0)
                  for j in range(d)] for i in range(d)]
            v = [Fraction(1)] * d
            for _ in range(2):
                v = solve_exact(A, v)
                top = max(v, key=abs)
                v = [c / top for c in v]
    i0 = next(i for i in range(d) if v[i])
    v = [c / v[i0] for c in v]
    acc = basis[i0].scale(v[i0])
    for i in range(d):
        if i != i0 and v[i]:
            acc = acc + basis[i].scale(v[i])
    if f.exact:
        return acc
    with mp.workdps(digits + 10):
        h = acc.to_approx().normalized()
        lam, resid = hecke_eigenvalue(h, p)
        if abs(lam - target) > tol * max(1, abs(target)) or resid > tol:
            raise RuntimeError("inverse iteration failed to pin the eigenform")
    return h


def shimura_match(h: HalfIntForm, f, primes=(3, 5),
                  digits: int | None = None) -> dict:
    """Compare T(p^2) eigenvalues of h with the Hecke data of the newform f.

    Away from the level of f the eigenvalue should be a_f(p); at primes
    dividing it, minus the Atkin-Lehner sign times p^{k-1}.  The report
    carries measured against expected values and the proportionality
    residual per prime, so a non-eigenform shows up quantitatively rather
    than as a bare failure.
    """
    k = h.k
    if f.w != 2 * k:
        raise ValueError(
            f"weight index {k} pairs with integral weight {2 * k}, got {f.w}")
    if h.level != 4 * f.level:
        raise ValueError(f"level {h.level} does not sit over 4*{f.level}")
    strict = h.kind == "exact" and f.exact
    if digits is None:
        digits = f.digits or mp.mp.dps
    tol = mp.mpf(10) ** (10 - digits)
    report = {"k": k, "weight": 2 * k, "newform_level": f.level,
              "strict": strict, "primes": {}, "ok": True}
    for p in primes:
        if p == 2:
            raise ValueError("no eigenvalue convention at p = 2; use odd primes")
        lam, resid = hecke_eigenvalue(h, p)
        if f.level % p == 0:
            expected = -f.al_sign(p) * p ** (k - 1)
        else:
            expected = f.a(p)
        if strict:
            match = resid == 0 and lam == expected
        else:
            sc = max(1, abs(expected))
            match = bool(abs(lam - expected) <= tol * sc and resid <= tol)
        report["primes"][p] = {"measured": lam, "expected": expected,
                               "residual": resid, "match": match}
        report["ok"] = report["ok"] and match
    return report
