"""Index-1 Jacobi cusp forms through their discriminant data.

A form phi is never stored as a two-variable expansion: its coefficient at
(n, r) only depends on 4n - r^2 (and r mod 2), so the half-integral source
series carries everything.  The operators here (index raising V_m, the two
development maps D0 and D2, restriction to z = 0 followed by level and
Hecke operators) all act on that table.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt

from .core import QSeries, divisors, op_T, op_U, prime_divisors
from .kohnen import HalfIntForm

__all__ = [
    "JacobiForm", "from_half_integral", "op_Vm", "D0", "D2",
    "fj_pullback_coeff",
]


class JacobiForm:
    """Weight k+1, index 1 Jacobi cusp form wrapping a plus-space series."""

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

    @property
    def index(self) -> int:
        return 1

    @property
    def kind(self) -> str:
        return self.h.kind

    def c(self, n: int, r: int):
        D = 4 * n - r * r
        if D <= 0:
            raise ValueError(f"(n={n}, r={r}) is not positive definite")
        return self.h.c(D)

    def h_component(self, j: int) -> QSeries:
        """Theta component h_j: the sub-series on exponents D = -j^2 (mod 4)."""
        if j not in (0, 1):
            raise ValueError("component index must be 0 or 1")
        want = (-j * j) % 4
        out = {D: c for D, c in self.h.series.coeffs.items() if D % 4 == want}
        return QSeries(out, self.h.prec, Fraction(2 * self.k + 1, 2),
                       self.h.level, self.h.kind)

    def d0_prec(self) -> int:
        return (self.h.prec + 3) // 4

    def __repr__(self):
        return f"JacobiForm(k={self.k}, N={self.N}, prec={self.h.prec})"


def from_half_integral(h: HalfIntForm, N: int = 1,
                       k: int | None = None) -> JacobiForm:
    return JacobiForm(h, N, k)


class VmImage:
    """Coefficient table of phi|V_m; index multiplies, weight is kept."""

    __slots__ = ("base", "m", "N")

    def __init__(self, base, m: int, N: int):
        if m < 1:
            raise ValueError("V_m needs m >= 1")
        self.base = base
        self.m = m
        self.N = N

    @property
    def weight(self) -> int:
        return self.base.weight

    @property
    def index(self) -> int:
        return self.base.index * self.m

    @property
    def kind(self) -> str:
        return self.base.kind

    def c(self, n: int, r: int):
        if 4 * n * self.index - r * r <= 0:
            raise ValueError(f"(n={n}, r={r}) is not positive definite at index {self.index}")
        g = gcd(gcd(n, abs(r)), self.m)
        e = self.weight - 1
        total = 0
        for a in divisors(g):
            if gcd(a, self.N) == 1:
                total = total + a ** e * self.base.c(n * self.m // (a * a), r // a)
        return total

    def d0_prec(self) -> int:
        return self.base.d0_prec() // self.m


def op_Vm(phi, m: int, N: int | None = None) -> VmImage:
    if N is None:
        N = getattr(phi, "N", 1)
    return VmImage(phi, m, N)


def D0(phi, P: int | None = None) -> QSeries:
    """Restriction to z = 0: coefficient at n is the sum of c(n, r) over r.

    Lands in weight (index-1 weight) + 0 at the ambient level.
    """
    P = phi.d0_prec() if P is None else min(P, phi.d0_prec())
    t = phi.index
    out = {}
    for n in range(1, P):
        acc = 0
        for r in range(1, isqrt(4 * n * t - 1) + 1):
            acc = acc + 2 * phi.c(n, r)
        acc = acc + phi.c(n, 0)
        if acc:
            out[n] = acc
    level = getattr(phi, "N", 1)
    return QSeries(out, P, phi.weight, max(level, 1), phi.kind)


def D2(phi, P: int | None = None) -> QSeries:
    """Second development map, scalar pinned to sum (k r^2 - 2n) c(n, r).

    Only the kernel and rank of (D0, D2) are consumed downstream, and on
    ker D0 every scalar convention collapses to the same map, so the bare
    rational combination is used.
    """
    if phi.index != 1:
        raise ValueError("second development map implemented at index 1 only")
    k = phi.weight - 1
    P = phi.d0_prec() if P is None else min(P, phi.d0_prec())
    out = {}
    for n in range(1, P):
        acc = -2 * n * phi.c(n, 0)
        for r in range(1, isqrt(4 * n - 1) + 1):
            acc = acc + 2 * (k * r * r - 2 * n) * phi.c(n, r)
        if acc:
            out[n] = acc
    level = getattr(phi, "N", 1)
    return QSeries(out, P, phi.weight + 2, max(level, 1), phi.kind)


def fj_pullback_coeff(h: HalfIntForm, N: int, k: int, n: int, m: int):
    """Coefficient of q^n in the m-th Fourier-Jacobi slice at z = 0.

    Splits m = d*m1 with d supported on the level and (m1, N) = 1; the
    slice is then the z = 0 restriction hit by U(d) and the weight-(k+1)
    Hecke operator T(m1).  Independent of the double divisor sum in the
    direct route, which is the point of having it.
    """
    if n < 1 or m < 1:
        raise ValueError("indices must be positive")
    phi = JacobiForm(h, N, k)
    d = 1
    m1 = m
    for p in prime_divisors(N):
        while m1 % p == 0:
            m1 //= p
            d *= p
    need = m * (n + 1)
    base = D0(phi, P=need)
    out = op_T(op_U(base, d), m1, k + 1)
    return out[n]
