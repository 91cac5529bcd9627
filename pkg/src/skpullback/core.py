"""Truncated q-expansions with strict precision bookkeeping, plus the
elementary number-theory helpers every other module leans on.

Coefficients are exact (int / Fraction) by default.  A parallel approximate
mode carries mpmath numbers at whatever working precision the caller set;
mixing the two kinds without an explicit promotion is an error.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable

import mpmath as mp

__all__ = [
    "PrecisionError", "QSeries", "series_mul", "op_U", "op_B", "op_T",
    "divisors", "factorize", "prime_divisors", "mobius", "omega",
    "euler_phi", "sigma", "is_squarefree", "is_prime", "primes_up_to",
    "index_sl2", "index_sp4", "zeta_level", "ArithContext",
    "rref", "kernel_basis", "solve_exact", "mpf_to_fraction",
]


class PrecisionError(Exception):
    """Raised when a coefficient beyond the declared precision is read."""


_EXACT_TYPES = (int, Fraction)


def _is_exact(x) -> bool:
    return isinstance(x, _EXACT_TYPES)


class QSeries:
    """A q-expansion known for exponents < prec, tagged with weight and level.

    Reading an exponent at or past `prec` raises PrecisionError, never
    returns a silent zero.  Instances are treated as immutable.
    """

    __slots__ = ("coeffs", "prec", "weight", "level", "kind")

    def __init__(self, coeffs: dict, prec: int, weight=0, level: int = 1,
                 kind: str = "exact"):
        if prec < 0:
            raise ValueError("precision must be nonnegative")
        if level < 1:
            raise ValueError("level must be positive")
        if kind not in ("exact", "approx"):
            raise ValueError("kind must be 'exact' or 'approx'")
        self.coeffs = {n: c for n, c in coeffs.items() if _nonzero(c)}
        self.prec = prec
        self.weight = Fraction(weight)
        self.level = level
        self.kind = kind

    # -- construction helpers -------------------------------------------

    @classmethod
    def from_list(cls, items: Iterable, weight=0, level: int = 1,
                  kind: str = "exact") -> "QSeries":
        items = list(items)
        return cls({n: c for n, c in enumerate(items)}, len(items),
                   weight, level, kind)

    @classmethod
    def zero(cls, prec: int, weight=0, level: int = 1,
             kind: str = "exact") -> "QSeries":
        return cls({}, prec, weight, level, kind)

    @classmethod
    def one(cls, prec: int, weight=0, level: int = 1,
            kind: str = "exact") -> "QSeries":
        return cls({0: 1}, prec, weight, level, kind)

    # -- coefficient access ---------------------------------------------

    def __getitem__(self, n: int):
        if n < 0:
            return 0
        if n >= self.prec:
            raise PrecisionError(
                f"coefficient {n} requested but series only known below {self.prec}")
        return self.coeffs.get(n, 0)

    def valuation(self) -> int:
        """Exponent of the first nonzero known coefficient (prec if none)."""
        live = [n for n in self.coeffs if n < self.prec]
        return min(live) if live else self.prec

    def is_zero(self) -> bool:
        return all(n >= self.prec for n in self.coeffs)

    def coeff_list(self, upto: int | None = None) -> list:
        upto = self.prec if upto is None else upto
        return [self[n] for n in range(upto)]

    # -- ring structure --------------------------------------------------

    def _check_addable(self, other: "QSeries"):
        if self.weight != other.weight:
            raise ValueError(f"weight mismatch: {self.weight} vs {other.weight}")
        if self.level != other.level:
            raise ValueError(f"level mismatch: {self.level} vs {other.level}")
        if self.kind != other.kind:
            raise ValueError("cannot mix exact and approx series; promote first")

    def __add__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        self._check_addable(other)
        prec = min(self.prec, other.prec)
        out = {}
        for n in set(self.coeffs) | set(other.coeffs):
            if n < prec:
                out[n] = self.coeffs.get(n, 0) + other.coeffs.get(n, 0)
        return QSeries(out, prec, self.weight, self.level, self.kind)

    def __sub__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return QSeries({n: -c for n, c in self.coeffs.items()}, self.prec,
                       self.weight, self.level, self.kind)

    def scale(self, c) -> "QSeries":
        if self.kind == "exact" and not _is_exact(c):
            raise ValueError("scaling an exact series by an inexact scalar; "
                             "promote the series first")
        return QSeries({n: c * v for n, v in self.coeffs.items()}, self.prec,
                       self.weight, self.level, self.kind)

    def __mul__(self, other):
        if isinstance(other, QSeries):
            return series_mul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __pow__(self, e: int):
        if e < 0:
            raise ValueError("negative powers not supported")
        result = QSeries.one(self.prec, 0, self.level, self.kind)
        base = self
        while e:
            if e & 1:
                result = result * base
            e >>= 1
            if e:
                base = base * base
        return result

    def shift(self, n0: int) -> "QSeries":
        """Multiply by q^n0."""
        return QSeries({n + n0: c for n, c in self.coeffs.items()},
                       self.prec + n0, self.weight, self.level, self.kind)

    def truncate(self, prec: int) -> "QSeries":
        if prec > self.prec:
            raise PrecisionError(f"cannot extend precision {self.prec} to {prec}")
        return QSeries({n: c for n, c in self.coeffs.items() if n < prec},
                       prec, self.weight, self.level, self.kind)

    def with_tags(self, weight=None, level=None) -> "QSeries":
        return QSeries(self.coeffs, self.prec,
                       self.weight if weight is None else weight,
                       self.level if level is None else level, self.kind)

    def to_approx(self, ctx=mp) -> "QSeries":
        if self.kind == "approx":
            return self
        conv = {n: ctx.mpf(c.numerator) / c.denominator
                if isinstance(c, Fraction) else ctx.mpf(c)
                for n, c in self.coeffs.items()}
        return QSeries(conv, self.prec, self.weight, self.level, "approx")

    def map_coeffs(self, fn: Callable, kind: str | None = None) -> "QSeries":
        return QSeries({n: fn(c) for n, c in self.coeffs.items()}, self.prec,
                       self.weight, self.level, kind or self.kind)

    def __repr__(self):
        head = []
        for n in sorted(self.coeffs)[:6]:
            head.append(f"{self.coeffs[n]}*q^{n}")
        body = " + ".join(head) if head else "0"
        return f"QSeries({body} + O(q^{self.prec}), wt={self.weight}, N={self.level})"

    def __eq__(self, other):
        if not isinstance(other, QSeries):
            return NotImplemented
        p = min(self.prec, other.prec)
        return all(self[n] == other[n] for n in range(p)) and \
            self.weight == other.weight and self.level == other.level

    def __hash__(self):
        raise TypeError("QSeries is unhashable")


def _nonzero(c) -> bool:
    try:
        return c != 0
    except TypeError:
        return True


def _mul_prec(a: QSeries, b: QSeries) -> int:
    # The product coefficient at n needs a up to n - val(b) and b up to
    # n - val(a); the min rule below is exactly what those constraints allow.
    return min(a.prec + b.valuation(), b.prec + a.valuation())


def _kronecker_convolve(av: list[int], bv: list[int]) -> list[int]:
    """Integer convolution through one big-int multiply per sign block.

    Field width is byte-aligned so packing and unpacking are linear-time
    bytes operations rather than quadratic shift chains.
    """
    def split(v):
        pos = [c if c > 0 else 0 for c in v]
        neg = [-c if c < 0 else 0 for c in v]
        return pos, neg

    la, lb = len(av), len(bv)
    ma = max((abs(c) for c in av), default=0)
    mb = max((abs(c) for c in bv), default=0)
    if ma == 0 or mb == 0:
        return [0] * (la + lb - 1)
    bits = (ma * mb * min(la, lb)).bit_length() + 2
    stride = (bits + 7) // 8

    def pack(v):
        return int.from_bytes(
            b"".join(c.to_bytes(stride, "little") for c in v), "little")

    ap, an = split(av)
    bp, bn = split(bv)
    out_len = la + lb - 1
    res = [0] * out_len
    blob_len = (out_len + 1) * stride
    for sign, u, v in ((1, ap, bp), (1, an, bn), (-1, ap, bn), (-1, an, bp)):
        if not any(u) or not any(v):
            continue
        blob = (pack(u) * pack(v)).to_bytes(blob_len, "little")
        for i in range(out_len):
            c = int.from_bytes(blob[i * stride:(i + 1) * stride], "little")
            if c:
                res[i] += sign * c
    return res


def series_mul(a: QSeries, b: QSeries) -> QSeries:
    """Cauchy product truncated to the precision the inputs support."""
    if a.kind != b.kind:
        raise ValueError("cannot mix exact and approx series; promote first")
    if a.prec == 0 or b.prec == 0:
        raise PrecisionError("multiplying a series of precision 0")
    prec = _mul_prec(a, b)
    weight = a.weight + b.weight
    level = _lcm(a.level, b.level)
    # Fast integer path: exact series with pure int coefficients.
    if a.kind == "exact" and prec > 64 \
            and all(isinstance(c, int) for c in a.coeffs.values()) \
            and all(isinstance(c, int) for c in b.coeffs.values()):
        av = [a.coeffs.get(n, 0) for n in range(min(a.prec, prec))]
        bv = [b.coeffs.get(n, 0) for n in range(min(b.prec, prec))]
        cv = _kronecker_convolve(av, bv)
        return QSeries({n: c for n, c in enumerate(cv[:prec])}, prec,
                       weight, level, a.kind)
    out: dict = {}
    for i, ci in a.coeffs.items():
        if i >= prec:
            continue
        for j, cj in b.coeffs.items():
            n = i + j
            if n < prec and j < b.prec and i < a.prec:
                out[n] = out.get(n, 0) + ci * cj
    return QSeries(out, prec, weight, level, a.kind)


def op_U(a: QSeries, d: int) -> QSeries:
    """U(d): pick every d-th coefficient, c(n) -> c(dn)."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if d == 1:
        return a
    prec = a.prec // d
    out = {n // d: c for n, c in a.coeffs.items() if n % d == 0 and n // d < prec}
    return QSeries(out, prec, a.weight, a.level, a.kind)


def op_B(a: QSeries, d: int, w: int | None = None) -> QSeries:
    """B_d: c(n) -> d^{w/2} c at exponent dn.  Needs even integral weight."""
    if d < 1:
        raise ValueError("d must be >= 1")
    w = a.weight if w is None else Fraction(w)
    if w.denominator != 1 or w.numerator % 2 != 0:
        raise ValueError(f"B_d needs even integral weight, got {w}")
    if d == 1:
        return a
    s = d ** (w.numerator // 2)
    prec = d * (a.prec - 1) + 1 if a.prec > 0 else 0
    out = {d * n: s * c for n, c in a.coeffs.items()}
    return QSeries(out, prec, a.weight, a.level, a.kind)


def _op_T_prime(a: QSeries, p: int, w: int) -> QSeries:
    prec = a.prec // p
    out = {}
    pw = p ** (w - 1)
    for n in range(prec):
        c = a[p * n]
        if n % p == 0:
            c = c + pw * a[n // p]
        if _nonzero(c):
            out[n] = c
    return QSeries(out, prec, a.weight, a.level, a.kind)


def op_T(a: QSeries, n: int, w: int, N: int = 1) -> QSeries:
    """Hecke T_N(n) for gcd(n, N) = 1 in weight w, acting on coefficients.

    For prime p the rule is c(m) -> c(pm) + p^{w-1} c(m/p); prime powers
    follow T(p^{r+1}) = T(p)T(p^r) - p^{w-1}T(p^{r-1}) and coprime factors
    compose.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if math.gcd(n, N) != 1:
        raise ValueError(f"T({n}) undefined at level {N}: index shares a factor")
    if n == 1:
        return a
    result = a
    for p, e in factorize(n).items():
        if e == 1:
            result = _op_T_prime(result, p, w)
        else:
            # T(p^e) via the recurrence, applied as operators to `result`.
            prev = result                      # T(p^0) result
            cur = _op_T_prime(result, p, w)    # T(p^1) result
            pw = p ** (w - 1)
            for _ in range(e - 1):
                step = _op_T_prime(cur, p, w)
                nxt = step - (pw * prev).truncate(step.prec)
                prev, cur = cur.truncate(nxt.prec), nxt
            result = cur
    return result


# -- elementary arithmetic ----------------------------------------------


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


def factorize(n: int) -> dict[int, int]:
    """Prime factorization by trial division; fine at this scale."""
    if n < 1:
        raise ValueError("factorize expects n >= 1")
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def prime_divisors(n: int) -> list[int]:
    return sorted(factorize(n))


def divisors(n: int) -> list[int]:
    fac = factorize(n)
    out = [1]
    for p, e in fac.items():
        out = [d * p ** i for d in out for i in range(e + 1)]
    return sorted(out)


def mobius(n: int) -> int:
    fac = factorize(n)
    if any(e > 1 for e in fac.values()):
        return 0
    return (-1) ** len(fac)


def omega(n: int) -> int:
    return len(factorize(n))


def euler_phi(n: int) -> int:
    out = n
    for p in factorize(n):
        out = out // p * (p - 1)
    return out


def sigma(n: int, k: int = 1) -> int:
    return sum(d ** k for d in divisors(n))


def is_squarefree(n: int) -> bool:
    return all(e == 1 for e in factorize(n).values())


def is_prime(n: int) -> bool:
    return n >= 2 and factorize(n) == {n: 1}


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p:: p] = b"\x00" * len(range(p * p, n + 1, p))
    return [i for i in range(n + 1) if sieve[i]]


def index_sl2(N: int) -> int:
    """[SL2(Z) : Gamma_0(N)] = N * prod_{p|N} (1 + 1/p)."""
    out = Fraction(N)
    for p in prime_divisors(N):
        out *= Fraction(p + 1, p)
    assert out.denominator == 1
    return out.numerator


def index_sp4(N: int, M: int = 1) -> int:
    """[Gamma_0^(2)(M) : Gamma_0^(2)(N)] = prod_{p | N/M} (p+1)(p^2+1).

    Square-free N with M | N only; that is the regime the coset families
    are built for.
    """
    if not is_squarefree(N):
        raise ValueError(f"index formula needs square-free level, got {N}")
    if N % M != 0:
        raise ValueError(f"{M} does not divide {N}")
    out = 1
    for p in prime_divisors(N // M):
        out *= (p + 1) * (p * p + 1)
    return out


def zeta_level(N: int, s: int) -> Fraction:
    """zeta_(N)(s) = prod_{p|N} (1 - p^{-s})^{-1}, an exact rational."""
    out = Fraction(1)
    for p in prime_divisors(N):
        out *= Fraction(p ** s, p ** s - 1)
    return out


class ArithContext:
    """Bundle of level-dependent constants used all over the place."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("level must be positive")
        self.N = N
        self.primes = prime_divisors(N)

    def index_sl2(self) -> int:
        return index_sl2(self.N)

    def index_sp4(self, M: int = 1) -> int:
        return index_sp4(self.N, M)

    def zeta_level(self, s: int) -> Fraction:
        return zeta_level(self.N, s)

    def phi(self) -> int:
        return euler_phi(self.N)

    def __repr__(self):
        return f"ArithContext(N={self.N})"


def rref(rows: list[list]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over Q; returns (nonzero rows, pivot columns)."""
    rows = [[Fraction(c) for c in r] for r in rows]
    pivots: list[int] = []
    r = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        if r == len(rows):
            break
        piv = next((i for i in range(r, len(rows)) if rows[i][col]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][col]
        rows[r] = [c * inv for c in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col]:
                f = rows[i][col]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    return rows[:r], pivots


def kernel_basis(rows: list[list]) -> list[list[Fraction]]:
    """Basis of {x : A x = 0} for the matrix with the given rows.

    One vector per free column, echelonized so vector i has a 1 at the
    i-th free column and 0 at the other free columns.
    """
    if not rows:
        raise ValueError("kernel of an empty matrix is ambiguous; pass shape via rows")
    ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [j for j in range(ncols) if j not in pivots]
    out = []
    for j0 in free:
        v = [Fraction(0)] * ncols
        v[j0] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[j0]
        out.append(v)
    return out


def solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Solve a square nonsingular rational system exactly."""
    d = len(A)
    aug = [row[:] + [b[i]] for i, row in enumerate(A)]
    red, pivots = rref(aug)
    if pivots != list(range(d)):
        raise RuntimeError("system is singular")
    return [red[i][d] for i in range(d)]


def mpf_to_fraction(x) -> Fraction:
    """Exact rational value of an mpf (binary mantissa * 2^exp)."""
    sign, man, exp, _ = mp.mpf(x)._mpf_
    if man == 0:
        return Fraction(0)
    val = Fraction(man) * Fraction(2) ** exp
    return -val if sign else val
