"""Exact coset representatives for degree-2 Siegel congruence subgroups.

Builds an explicit inequivalent system of representatives for
Gamma_0^(2)(M) \\ Gamma_0^(2)(N), square-free N, M | N, out of diagonally
embedded SL2 pairs and unipotent lower-block corrections, and verifies
completeness in exact integer arithmetic.  The representatives are grouped
into families indexed by divisors d of N/M: the d = 1 family is purely
diagonal, and each d > 1 family carries two extra parameters a, b mod d.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

from .core import divisors, index_sl2, index_sp4, is_squarefree, prime_divisors

__all__ = [
    "Sp4Mat", "CosetSet", "gamma_of", "gamma_da", "b_upper", "sl2_cosets",
    "sl2_class_key", "coset_key", "coset_family", "same_coset",
    "verify_complete",
]

_I2 = ((1, 0), (0, 1))


def _crt(residues, moduli) -> int:
    # all moduli pairwise coprime here, so a simple fold is exact
    r, m = 0, 1
    for res, mod in zip(residues, moduli):
        t = ((res - r) * pow(m, -1, mod)) % mod
        r, m = r + t * m, m * mod
    return r % m


def _mat2_mul(x, y):
    return (
        (x[0][0] * y[0][0] + x[0][1] * y[1][0], x[0][0] * y[0][1] + x[0][1] * y[1][1]),
        (x[1][0] * y[0][0] + x[1][1] * y[1][0], x[1][0] * y[0][1] + x[1][1] * y[1][1]),
    )


def _det2(g) -> int:
    return g[0][0] * g[1][1] - g[0][1] * g[1][0]


def _check_sl2(g):
    if _det2(g) != 1:
        raise ValueError(f"determinant {_det2(g)} != 1")


class Sp4Mat:
    """Integral symplectic 4x4 matrix with exact block arithmetic.

    Block convention: rows and columns split 2+2, so the matrix is
    [[A, B], [C, D]] with the symplectic relations A^t C = C^t A,
    B^t D = D^t B, A^t D - C^t B = I checked on construction.
    """

    __slots__ = ("rows",)

    def __init__(self, rows, check: bool = True):
        rows = tuple(tuple(int(v) for v in row) for row in rows)
        if len(rows) != 4 or any(len(row) != 4 for row in rows):
            raise ValueError("need a 4x4 matrix")
        object.__setattr__(self, "rows", rows)
        if check and not self.is_symplectic():
            raise ValueError("matrix is not symplectic")

    def __setattr__(self, name, value):
        raise AttributeError("Sp4Mat is immutable")

    def _block(self, i, j):
        r = self.rows
        return ((r[i][j], r[i][j + 1]), (r[i + 1][j], r[i + 1][j + 1]))

    @property
    def a(self):
        return self._block(0, 0)

    @property
    def b(self):
        return self._block(0, 2)

    @property
    def c(self):
        return self._block(2, 0)

    @property
    def d(self):
        return self._block(2, 2)

    def is_symplectic(self) -> bool:
        a, b, c, d = self.a, self.b, self.c, self.d

        def tmul(x, y):
            # x^t * y
            return (
                (x[0][0] * y[0][0] + x[1][0] * y[1][0], x[0][0] * y[0][1] + x[1][0] * y[1][1]),
                (x[0][1] * y[0][0] + x[1][1] * y[1][0], x[0][1] * y[0][1] + x[1][1] * y[1][1]),
            )

        atc, btd = tmul(a, c), tmul(b, d)
        if atc[0][1] != atc[1][0] or btd[0][1] != btd[1][0]:
            return False
        atd, ctb = tmul(a, d), tmul(c, b)
        return all(
            atd[i][j] - ctb[i][j] == (1 if i == j else 0)
            for i in range(2) for j in range(2)
        )

    @classmethod
    def identity(cls) -> "Sp4Mat":
        return cls.from_blocks(_I2, ((0, 0), (0, 0)), ((0, 0), (0, 0)), _I2)

    @classmethod
    def from_blocks(cls, a, b, c, d, check: bool = True) -> "Sp4Mat":
        rows = (
            (a[0][0], a[0][1], b[0][0], b[0][1]),
            (a[1][0], a[1][1], b[1][0], b[1][1]),
            (c[0][0], c[0][1], d[0][0], d[0][1]),
            (c[1][0], c[1][1], d[1][0], d[1][1]),
        )
        return cls(rows, check=check)

    @classmethod
    def from_pair(cls, g1, g2=None) -> "Sp4Mat":
        """Diagonal embedding of a pair of SL2 matrices.

        Interleaves the two actions: A = diag(a1, a2), B = diag(b1, b2),
        C = diag(c1, c2), D = diag(d1, d2).  With g2 omitted the second
        factor is the identity.
        """
        if g2 is None:
            g2 = _I2
        _check_sl2(g1)
        _check_sl2(g2)
        (a1, b1), (c1, d1) = g1
        (a2, b2), (c2, d2) = g2
        rows = (
            (a1, 0, b1, 0),
            (0, a2, 0, b2),
            (c1, 0, d1, 0),
            (0, c2, 0, d2),
        )
        return cls(rows, check=False)

    def __mul__(self, other: "Sp4Mat") -> "Sp4Mat":
        x, y = self.rows, other.rows
        rows = tuple(
            tuple(sum(x[i][t] * y[t][j] for t in range(4)) for j in range(4))
            for i in range(4)
        )
        return Sp4Mat(rows, check=False)

    def inv(self) -> "Sp4Mat":
        # symplectic inverse: [A B; C D]^-1 = [D^t -B^t; -C^t A^t]
        a, b, c, d = self.a, self.b, self.c, self.d
        rows = (
            (d[0][0], d[1][0], -b[0][0], -b[1][0]),
            (d[0][1], d[1][1], -b[0][1], -b[1][1]),
            (-c[0][0], -c[1][0], a[0][0], a[1][0]),
            (-c[0][1], -c[1][1], a[0][1], a[1][1]),
        )
        return Sp4Mat(rows, check=False)

    def in_level(self, n: int) -> bool:
        """Whether the lower-left block vanishes mod n."""
        c = self.c
        return all(c[i][j] % n == 0 for i in range(2) for j in range(2))

    def __eq__(self, other) -> bool:
        return isinstance(other, Sp4Mat) and self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __repr__(self) -> str:
        body = "; ".join(" ".join(str(v) for v in row) for row in self.rows)
        return f"Sp4Mat[{body}]"


def gamma_of(a: int):
    """The standard inverted-shift matrix [[0, 1], [-1, a]]."""
    return ((0, 1), (-1, a))


def gamma_da(n: int, d: int, a: int):
    """Unimodular matrix congruent to gamma_of(a) at primes of n/d, identity at primes of d.

    n square-free, d | n.  The bottom row is assembled by the Chinese
    remainder theorem, nudged by multiples of n until its entries are
    coprime, and the top row comes from an extended gcd followed by a
    row correction that pins the full matrix congruences, not just the
    coset class.
    """
    if n <= 0 or d <= 0 or n % d:
        raise ValueError(f"need d | n, got d={d}, n={n}")
    if not is_squarefree(n):
        raise ValueError(f"level {n} must be square-free")
    active = [p for p in prime_divisors(n) if d % p]
    idle = [p for p in prime_divisors(n) if d % p == 0]
    if not active:
        return _I2
    moduli = active + idle
    c0 = _crt([p - 1 for p in active] + [0] * len(idle), moduli)
    d0 = _crt([a % p for p in active] + [1] * len(idle), moduli)
    while gcd(c0, d0) != 1:
        d0 += n
    x, y = _bezout(d0, c0)  # x*d0 + y*c0 == 1
    alpha, beta = x, -y  # det [[alpha, beta], [c0, d0]] == 1
    # top row correction: subtract m * bottom row so that the matrix itself,
    # not merely its class, satisfies the prime congruences
    m = _crt(
        [(-alpha) % p for p in active] + [beta % p for p in idle],
        moduli,
    )
    alpha, beta = alpha - m * c0, beta - m * d0
    g = ((alpha, beta), (c0, d0))
    _check_sl2(g)
    for p in active:
        if (alpha % p, beta % p, c0 % p, d0 % p) != (0, 1 % p, p - 1, a % p):
            raise RuntimeError(f"congruence at {p} failed for gamma_da({n},{d},{a})")
    for p in idle:
        if (alpha % p, beta % p, c0 % p, d0 % p) != (1, 0, 0, 1):
            raise RuntimeError(f"identity congruence at {p} failed")
    return g


def _bezout(u: int, v: int) -> tuple[int, int]:
    # returns (x, y) with x*u + y*v == gcd == 1
    x0, x1, r0, r1 = 1, 0, u, v
    while r1:
        q = r0 // r1
        x0, x1 = x1, x0 - q * x1
        r0, r1 = r1, r0 - q * r1
    if r0 != 1:
        raise ValueError("inputs are not coprime")
    return x0, (1 - x0 * u) // v if v else 0


def b_upper(d1: int, n: int, a: int) -> Sp4Mat:
    """Unipotent correction with antidiagonal lower-left entries d1 * inv(d1) * a.

    The inverse is taken mod n/d1, so the matrix lies in the degree-2
    group of level d1, and a runs mod n/d1.
    """
    if n % d1:
        raise ValueError(f"need d1 | n, got d1={d1}, n={n}")
    d2 = n // d1
    if d2 > 1 and gcd(d1, d2) != 1:
        raise ValueError(f"d1={d1} and n/d1={d2} must be coprime")
    dbar = pow(d1, -1, d2) if d2 > 1 else 0
    x = d1 * dbar * a
    return Sp4Mat.from_blocks(_I2, ((0, 0), (0, 0)), ((0, x), (x, 0)), _I2, check=False)


def sl2_cosets(n: int, m: int = 1):
    """Degree-1 inequivalent representatives for Gamma_0(n) \\ Gamma_0(m).

    For each divisor e of n/m the block of matrices that reduce to the
    identity at primes of m*e and to gamma_of(a) elsewhere, a mod (n/m)/e.
    Counts sigma(n/m) in total.
    """
    if n % m:
        raise ValueError(f"need m | n, got m={m}, n={n}")
    ell = n // m
    out = []
    for e in divisors(ell):
        for a in range(ell // e):
            out.append(gamma_da(n, m * e, a))
    return out


def sl2_class_key(g, n: int):
    """Canonical label of Gamma_0(n) * g: projective bottom row per prime."""
    (c, d) = g[1]
    out = []
    for p in prime_divisors(n):
        cp, dp = c % p, d % p
        if dp:
            out.append((cp * pow(dp, -1, p) % p, 1))
        else:
            out.append((1, 0))
    return tuple(out)


def _rref_modp(rows, p):
    rows = [list(r) for r in rows]
    pivot_row = 0
    for col in range(len(rows[0])):
        hit = next((r for r in range(pivot_row, len(rows)) if rows[r][col] % p), None)
        if hit is None:
            continue
        rows[pivot_row], rows[hit] = rows[hit], rows[pivot_row]
        inv = pow(rows[pivot_row][col], -1, p)
        rows[pivot_row] = [v * inv % p for v in rows[pivot_row]]
        for r in range(len(rows)):
            if r != pivot_row and rows[r][col] % p:
                f = rows[r][col]
                rows[r] = [(rows[r][j] - f * rows[pivot_row][j]) % p for j in range(len(rows[r]))]
        pivot_row += 1
        if pivot_row == len(rows):
            break
    return tuple(tuple(v % p for v in row) for row in rows)


def coset_key(g: Sp4Mat, n: int):
    """Canonical label of the level-n class of g.

    Left multiplication by the level-n group sends the bottom 2x4 block
    to an invertible multiple mod each prime, so the reduced row span of
    that block, taken prime by prime, separates classes exactly.
    """
    bottom = (g.rows[2], g.rows[3])
    return tuple(_rref_modp(bottom, p) for p in prime_divisors(n))


@dataclass(frozen=True)
class CosetSet:
    """Representatives for the level pair (n, m), grouped by family."""

    n: int
    m: int
    families: dict = field(default_factory=dict)

    @property
    def reps(self):
        out = []
        for d in sorted(self.families):
            out.extend(self.families[d])
        return out

    def __len__(self) -> int:
        return sum(len(v) for v in self.families.values())

    def family_sizes(self) -> dict:
        return {d: len(v) for d, v in sorted(self.families.items())}


def coset_family(n: int, m: int = 1) -> CosetSet:
    """Full system of representatives for the degree-2 level pair (n, m).

    Family d = 1 holds the diagonal lifts gamma x I over the degree-1
    system; family d > 1, one per divisor of n/m, holds
    b_upper(n/d, n, a) * (gamma x gamma_da(n, n/d, b)) with a, b mod d.
    Sizes are sigma(n/m) and d^2 * sigma(n/m), summing to the group index.
    """
    if n <= 0 or m <= 0 or n % m:
        raise ValueError(f"need m | n, got m={m}, n={n}")
    if not is_squarefree(n):
        raise ValueError(f"level {n} must be square-free")
    ell = n // m
    deg1 = sl2_cosets(n, m)
    fams = {1: tuple(Sp4Mat.from_pair(g) for g in deg1)}
    for d in divisors(ell):
        if d == 1:
            continue
        block = []
        for a in range(d):
            bu = b_upper(n // d, n, a)
            for b in range(d):
                gd = gamma_da(n, n // d, b)
                tail = [Sp4Mat.from_pair(g, gd) for g in deg1]
                block.extend(bu * t for t in tail)
        fams[d] = tuple(block)
    return CosetSet(n, m, fams)


def same_coset(g1: Sp4Mat, g2: Sp4Mat, n: int) -> bool:
    """Whether g1 and g2 represent the same level-n class."""
    if not isinstance(g1, Sp4Mat) or not isinstance(g2, Sp4Mat):
        raise TypeError("need Sp4Mat inputs")
    if not g1.is_symplectic() or not g2.is_symplectic():
        raise ValueError("inputs must be symplectic")
    return (g1 * g2.inv()).in_level(n)


def _product_c_entries(g: Sp4Mat, hinv: Sp4Mat):
    # lower-left block of g * hinv, the only block class equality looks at
    x, y = g.rows, hinv.rows
    return [
        sum(x[i][t] * y[t][j] for t in range(4))
        for i in (2, 3) for j in (0, 1)
    ]


def verify_complete(n: int, m: int = 1, system: CosetSet | None = None,
                    pairwise_cap: int = 2500) -> dict:
    """Certify that the (n, m) system is complete and pairwise inequivalent.

    Small systems are checked by direct pairwise class comparison; larger
    ones through the canonical per-prime key, whose collisions coincide
    with class equality.  The report also confirms the per-prime class
    counts, so the product structure over primes of n/m is a bijection.
    A prebuilt system can be passed in to audit it instead.
    """
    cs = coset_family(n, m) if system is None else system
    count = len(cs)
    index = index_sp4(n, m)
    reps = cs.reps
    report = {
        "n": n, "m": m, "count": count, "index": index,
        "families": cs.family_sizes(),
        "degree1_count": len(cs.families[1]),
        "degree1_index": index_sl2(n) // index_sl2(m),
    }
    for i, g in enumerate(reps):
        if not g.is_symplectic():
            report.update(ok=False, complete=False, distinct=False,
                          reason="representative is not symplectic", witness=i)
            return report
        if not g.in_level(m):
            report.update(ok=False, complete=False, distinct=False,
                          reason="representative outside the ambient group", witness=i)
            return report

    distinct = True
    if count <= pairwise_cap:
        report["method"] = "pairwise"
        invs = [g.inv() for g in reps]
        for i in range(count):
            for j in range(i + 1, count):
                if all(v % n == 0 for v in _product_c_entries(reps[i], invs[j])):
                    distinct = False
                    report["witness"] = (i, j)
                    break
            if not distinct:
                break
    else:
        report["method"] = "key"
        seen: dict = {}
        for i, g in enumerate(reps):
            key = coset_key(g, n)
            if key in seen:
                distinct = False
                report["witness"] = (seen[key], i)
                break
            seen[key] = i
        if distinct:
            slots = {p: prime_divisors(n).index(p) for p in prime_divisors(n // m)}
            factor_counts = {
                p: len({key[s] for key in seen}) for p, s in slots.items()
            }
            report["factor_counts"] = factor_counts
            distinct = all(
                factor_counts[p] == (p + 1) * (p * p + 1) for p in factor_counts
            )
    report["distinct"] = distinct
    report["complete"] = distinct and count == index
    report["ok"] = report["complete"]
    return report
