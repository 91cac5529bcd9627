"""Degree-2 lift coefficients from the divisor-sum relation.

The lift of a plus-space form h is pinned down by a_F(T) depending only on
the discriminant and content of T, through an explicit divisor sum in c_h.
Nothing degree-2 is ever materialized; consumers read a_F(T), the diagonal
restriction a(n, m), and the equivariance of the latter under Hecke
operators in either slot.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from .core import PrecisionError, divisors, is_prime, op_U
from .kohnen import HalfIntForm

__all__ = [
    "QuadIndex", "SKLift", "maass_coeff", "pullback_coeff",
    "hecke_equivariance_check",
]


@dataclass(frozen=True)
class QuadIndex:
    """Half-integral binary form [n, r/2; r/2, m], required positive definite."""

    n: int
    r: int
    m: int

    def __post_init__(self):
        if self.n < 1 or self.m < 1 or 4 * self.n * self.m - self.r ** 2 <= 0:
            raise ValueError(
                f"(n, r, m) = ({self.n}, {self.r}, {self.m}) is not positive definite")

    @property
    def disc(self) -> int:
        return 4 * self.n * self.m - self.r * self.r

    @property
    def content(self) -> int:
        return gcd(gcd(self.n, abs(self.r)), self.m)

    def transpose(self) -> "QuadIndex":
        return QuadIndex(self.m, self.r, self.n)


def maass_coeff(h: HalfIntForm, N: int, k: int, T: QuadIndex):
    """a_F(T) = sum over d | content(T), (d, N) = 1 of d^k c_h(disc(T)/d^2)."""
    total = 0
    D = T.disc
    for d in divisors(T.content):
        if gcd(d, N) == 1:
            total = total + d ** k * h.c(D // (d * d))
    return total


def pullback_coeff(h: HalfIntForm, N: int, k: int, n: int, m: int):
    """Diagonal coefficient a(n, m): sum of a_F((n, r, m)) over r^2 < 4nm."""
    if n < 1 or m < 1:
        raise ValueError("indices must be positive")
    total = maass_coeff(h, N, k, QuadIndex(n, 0, m))
    for r in range(1, isqrt(4 * n * m - 1) + 1):
        total = total + 2 * maass_coeff(h, N, k, QuadIndex(n, r, m))
    return total


def hecke_equivariance_check(h: HalfIntForm, N: int, k: int, q: int,
                             bound: int) -> dict:
    """Compare T(q) acting on the first and second diagonal index.

    The two actions agree exactly when the table a(n, m) really is the
    diagonal restriction of a degree-2 form; the report lists any index
    pair where they do not.
    """
    if not is_prime(q):
        raise ValueError(f"{q} is not prime")
    if N % q == 0:
        raise ValueError(f"q = {q} must be coprime to the level {N}")
    e = q ** k

    def a(i, j):
        if i < 1 or j < 1:
            return 0
        return pullback_coeff(h, N, k, i, j)

    failures = []
    for n in range(1, bound + 1):
        for m in range(1, bound + 1):
            left = a(q * n, m) + (e * a(n // q, m) if n % q == 0 else 0)
            right = a(n, q * m) + (e * a(n, m // q) if m % q == 0 else 0)
            if left != right:
                failures.append((n, m, left, right))
    return {"q": q, "bound": bound, "ok": not failures, "failures": failures}


class SKLift:
    """Lift attached to a plus-space form: T-indexed coefficients only.

    At square-free odd level the p | N Siegel eigenvalue equals the p^2
    eigenvalue of the source, which at those primes is plain coefficient
    extraction; `us_eigenvalue` measures it and insists on proportionality.
    """

    __slots__ = ("h", "N", "k")

    def __init__(self, h: HalfIntForm, N: int = 1, k: int | None = None):
        if k is None:
            k = h.k
        elif k != h.k:
            raise ValueError(f"weight index {k} does not match the source ({h.k})")
        if h.level != 4 * N:
            raise ValueError(f"source level {h.level} is not 4*{N}")
        self.h = h
        self.N = N
        self.k = k

    @property
    def weight(self) -> int:
        return self.k + 1

    def a(self, T) -> object:
        if not isinstance(T, QuadIndex):
            T = QuadIndex(*T)
        return maass_coeff(self.h, self.N, self.k, T)

    def pullback(self, n: int, m: int):
        return pullback_coeff(self.h, self.N, self.k, n, m)

    def us_eigenvalue(self, p: int):
        if self.N % p or not is_prime(p):
            raise ValueError(f"U_S eigenvalue only defined at primes dividing {self.N}")
        img = op_U(self.h.series, p * p)
        if img.prec < 1:
            raise PrecisionError("source precision too small")
        v = self.h.series.valuation()
        if v >= img.prec or self.h.c(v) == 0:
            raise PrecisionError("cannot read a leading coefficient")
        if self.h.kind == "exact":
            lam = Fraction(img[v]) / Fraction(self.h.c(v))
            if lam.denominator == 1:
                lam = lam.numerator
        else:
            lam = img[v] / self.h.c(v)
        for D in range(img.prec):
            if img[D] != lam * self.h.c(D):
                raise ValueError(f"U({p}^2) image is not proportional at D={D}")
        return lam

    def __repr__(self):
        return f"SKLift(k+1={self.weight}, N={self.N}, prec={self.h.prec})"
