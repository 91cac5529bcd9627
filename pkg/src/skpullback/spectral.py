"""Spectral decomposition of diagonal pullbacks by coefficient linear algebra.

Everything here is extracted from Fourier coefficients: tensor-square
expansions of pullbacks, predicted vanishing patterns over sign characters,
scalars linking shifted oldform lines, the expansion of a Jacobi pullback in
those lines, and the local Hecke sum identities that power them.  No inner
product is ever integrated numerically in this module.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import mpmath as mp

from .core import (QSeries, divisors, is_squarefree, omega, op_B,
                   prime_divisors, solve_exact)
from .gl2 import NewformGL2
from .jacobi import D0, JacobiForm

__all__ = [
    "SpectralMatrix", "expand_pullback", "lf_divisors", "vanishing_pattern",
    "oldclass_ratio", "phi0_projection", "hecke_sum_identities",
]


def _is_exact_value(v) -> bool:
    return isinstance(v, (int, Fraction))


def _to_mp(v):
    if isinstance(v, Fraction):
        return mp.mpf(v.numerator) / v.denominator
    if isinstance(v, int):
        return mp.mpf(v)
    return v


def _series_of(b, P: int | None = None) -> QSeries:
    if isinstance(b, NewformGL2):
        return b.q_expansion(P)
    if isinstance(b, QSeries):
        return b if P is None or P >= b.prec else b.truncate(P)
    raise TypeError(f"cannot read q-expansion from {type(b).__name__}")


def _solve_approx(g_rows, b_cols):
    """Solve G X = B by elimination at the ambient mpmath precision."""
    d = len(g_rows)
    aug = [[_to_mp(v) for v in g_rows[i]] + [_to_mp(v) for v in b_cols[i]]
           for i in range(d)]
    scale = max((abs(v) for row in aug[:d] for v in row[:d]), default=mp.mpf(1))
    tol = scale * mp.mpf(10) ** (-(mp.mp.dps - 8))
    for col in range(d):
        piv = max(range(col, d), key=lambda r: abs(aug[r][col]))
        if abs(aug[piv][col]) <= tol:
            raise ValueError("basis is rank deficient on the grid; "
                             "raise the working precision")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(d):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [aug[r][j] - f * aug[col][j] for j in range(len(aug[r]))]
    return [row[d:] for row in aug]


def _solve_square(g_rows, b_cols, exact: bool):
    if not exact:
        return _solve_approx(g_rows, b_cols)
    cols = len(b_cols[0])
    out_cols = []
    for j in range(cols):
        rhs = [Fraction(b_cols[i][j]) for i in range(len(g_rows))]
        try:
            out_cols.append(
                solve_exact([[Fraction(v) for v in row] for row in g_rows], rhs))
        except RuntimeError as err:
            raise ValueError("basis is rank deficient on the grid") from err
    return [[out_cols[j][i] for j in range(cols)] for i in range(len(g_rows))]


@dataclass
class SpectralMatrix:
    """Tensor-square expansion of a two-variable coefficient table.

    coeffs[i][j] multiplies basis[i] (x) basis[j]; residual is the largest
    reconstruction mismatch on the held-out grid points.
    """

    labels: list
    coeffs: list
    residual: object
    solve_points: int
    check_points: int
    kind: str

    @property
    def dim(self) -> int:
        return len(self.labels)

    def entry(self, i: int, j: int):
        return self.coeffs[i][j]

    def offdiag_max(self):
        vals = [abs(self.coeffs[i][j]) for i in range(self.dim)
                for j in range(self.dim) if i != j]
        if not vals:
            return Fraction(0) if self.kind == "exact" else mp.mpf(0)
        return max(vals)

    def diag(self) -> list:
        return [self.coeffs[i][i] for i in range(self.dim)]

    def within_budget(self, digits: int) -> bool:
        """Residual below the 10^-(digits-15) reconstruction allowance."""
        return abs(_to_mp(self.residual)) < mp.mpf(10) ** (-(digits - 15))


def expand_pullback(coeff, basis, grid=None, labels=None) -> SpectralMatrix:
    """Expand a pullback coefficient table over a tensor-square basis.

    coeff is a callable (n, m) -> coefficient, or an object carrying a
    .pullback method.  basis is a list of one-variable q-expansions used on
    both tensor factors.  The d x d system is solved exactly on the leading
    [1..d]^2 block of the grid; every remaining grid point is held out and
    only enters the reported residual.  Default grid is [1..d+2]^2, whose
    leading minor is nonsingular for echelonized bases.
    """
    if callable(coeff):
        table = coeff
    elif hasattr(coeff, "pullback"):
        table = coeff.pullback
    else:
        raise TypeError("coeff must be callable or expose .pullback")
    d = len(basis)
    if grid is None:
        top = max(d + 2, 2)
        grid = [(n, m) for n in range(1, top + 1) for m in range(1, top + 1)]
    series = [_series_of(b) for b in basis]
    need = max((n for n, _ in grid), default=1)
    need_m = max((m for _, m in grid), default=1)
    for s in series:
        if s.prec <= max(need, need_m):
            raise ValueError(f"basis series too short, need {max(need, need_m) + 1}")
    solve_pts = [(n, m) for n, m in grid if n <= d and m <= d]
    check_pts = [pt for pt in grid if pt not in solve_pts]
    if len(solve_pts) < d * d:
        raise ValueError(f"grid misses part of the [1..{d}]^2 solve block")

    exact = all(s.kind == "exact" for s in series)
    sample = table(1, 1) if grid else 0
    exact = exact and _is_exact_value(sample)
    if labels is None:
        labels = [getattr(b, "label", f"g{i}") for i, b in enumerate(basis)]

    if d == 0:
        vals = [abs(table(n, m)) for n, m in grid]
        zero = Fraction(0) if all(_is_exact_value(table(n, m)) for n, m in grid) \
            else mp.mpf(0)
        residual = max(vals) if vals else zero
        kind = "exact" if _is_exact_value(residual) else "approx"
        return SpectralMatrix([], [], residual, 0, len(grid), kind)

    g_rows = [[series[i][n] for i in range(d)] for n in range(1, d + 1)]
    a_block = [[table(n, m) for m in range(1, d + 1)] for n in range(1, d + 1)]
    # A = G C G^t: peel the two factors with two solves against G
    y = _solve_square(g_rows, a_block, exact)
    y_t = [[y[i][j] for i in range(d)] for j in range(d)]
    c_t = _solve_square(g_rows, y_t, exact)
    coeffs = [[c_t[j][i] for j in range(d)] for i in range(d)]

    zero = Fraction(0) if exact else mp.mpf(0)
    residual = zero
    for n, m in check_pts:
        recon = zero
        for i in range(d):
            for j in range(d):
                term = coeffs[i][j] * series[i][n] * series[j][m]
                recon = recon + term
        gap = abs(table(n, m) - recon) if exact else abs(_to_mp(table(n, m)) - _to_mp(recon))
        if gap > residual:
            residual = gap
    return SpectralMatrix(list(labels), coeffs, residual,
                          len(solve_pts), len(check_pts),
                          "exact" if exact else "approx")


def lf_divisors(f: NewformGL2, n: int | None = None) -> list[int]:
    """Divisors of the level with every Atkin-Lehner sign +1 (1 included)."""
    n = f.level if n is None else n
    if n != f.level:
        raise ValueError(f"level mismatch: form has {f.level}, asked about {n}")
    return [L for L in divisors(n)
            if all(f.al_sign(p) == 1 for p in prime_divisors(L))]


def vanishing_pattern(f: NewformGL2, g: NewformGL2, n: int) -> dict:
    """Predicted vanishing of the sign-indexed pullback projections.

    f has weight 2k and level n, g has weight k+1 and level dividing n.
    The projection onto g_sigma (x) g_sigma' is predicted zero whenever the
    two characters differ, and also on the diagonal whenever some prime of
    n/level(g) carries Atkin-Lehner sign -1.
    """
    if not is_squarefree(n):
        raise ValueError(f"{n} must be square-free")
    if f.level != n:
        raise ValueError(f"lifted form must live at level {n}, has {f.level}")
    if n % g.level:
        raise ValueError(f"{g.level} does not divide {n}")
    if f.w != 2 * (g.w - 1):
        raise ValueError(f"weights are incompatible: {f.w} vs {g.w}")
    mg = n // g.level
    ps = prime_divisors(mg)
    mg_in_lf = all(f.al_sign(p) == 1 for p in ps)
    sigmas = [()] if not ps else None
    if sigmas is None:
        sigmas = []
        count = 2 ** len(ps)
        for mask in range(count):
            sigmas.append(tuple(1 if mask & (1 << i) == 0 else -1
                                for i in range(len(ps))))
    table = {}
    for s1 in sigmas:
        for s2 in sigmas:
            table[(s1, s2)] = (s1 != s2) or not mg_in_lf
    return {
        "n": n, "mg": mg, "newform_level": g.level,
        "primes": ps, "mg_in_lf": mg_in_lf,
        "sigmas": sigmas, "zero": table,
        "all_diagonal_zero": not mg_in_lf,
    }


def oldclass_ratio(g: NewformGL2, m: int, mg: int, k: int | None = None,
                   signs=None) -> dict:
    """Scalar linking the g (x) g|B_m projection to the g (x) g|B_mg one.

    For m | mg the ratio is m^{(k+1)/2} lambda_g(mg/m) / mg^{(k+1)/2} times
    prod (1+1/p)^(-1) over primes of mg/m; exact for exact g.  When a sign
    tuple over the primes of mg is supplied, the report also carries the
    sign-character scalar sigma(mg) relating the normalized diagonal
    projection of g_sigma to the B_mg line.
    """
    k = g.w - 1 if k is None else k
    if g.w != k + 1:
        raise ValueError(f"weight mismatch: form has {g.w}, lift wants {k + 1}")
    if m < 1 or mg < 1 or mg % m:
        raise ValueError(f"need m | mg, got m={m}, mg={mg}")
    if not is_squarefree(mg):
        raise ValueError(f"{mg} must be square-free")
    if gcd(mg, g.level) != 1:
        raise ValueError(f"{mg} shares a factor with the level {g.level}")
    quo = mg // m
    half = (k + 1) // 2
    lam = g.a(quo)
    if g.exact:
        val = Fraction(lam) * Fraction(m ** half, mg ** half)
        for p in prime_divisors(quo):
            val *= Fraction(p, p + 1)
    else:
        val = _to_mp(lam) * mp.power(Fraction(m, mg), half)
        for p in prime_divisors(quo):
            val *= mp.mpf(p) / (p + 1)
    out = {"m": m, "mg": mg, "k": k, "ratio": val}
    if signs is not None:
        ps = prime_divisors(mg)
        if len(signs) != len(ps) or any(s not in (1, -1) for s in signs):
            raise ValueError(f"sign tuple {signs} does not match primes {ps}")
        sig = 1
        for s in signs:
            sig *= s
        out["sigma_scalar"] = sig
    return out


def phi0_projection(h, n: int, k: int, bases: dict, P: int | None = None) -> dict:
    """Expand a Jacobi-form pullback over shifted eigenform lines.

    bases maps each divisor level n/L to its eigenform list; the pullback
    series is solved against the lines g|B_L, the residual is measured on
    held-out coefficients, and the support (which lines appear) is
    reported together with the 2^omega(L) multiplicity of each line.
    """
    missing = [n // L for L in divisors(n) if n // L not in bases]
    if missing:
        raise ValueError(f"missing eigenform data for levels {sorted(set(missing))}")
    phi = JacobiForm(h, n, k)
    lines = []
    for L in sorted(divisors(n)):
        lev = n // L
        for i, g in enumerate(bases[lev]):
            lines.append((L, lev, i, g))
    cols = len(lines)
    avail = phi.d0_prec()
    if P is None:
        P = min(avail, max(2 * cols + 3, 8))
    if P > avail:
        raise ValueError(f"series supports {avail} coefficients, asked for {P}")
    d0 = D0(phi, P=P)
    col_series = []
    for L, lev, i, g in lines:
        base = _series_of(g)
        need_base = (P - 2) // L + 2
        if base.prec < need_base:
            raise ValueError(f"eigenform at level {lev} too short for {P} rows")
        col_series.append(op_B(base.truncate(need_base), L, w=k + 1))
    exact = all(s.kind == "exact" for s in col_series) and d0.kind == "exact"
    if cols == 0:
        vals = [abs(d0[t]) for t in range(1, P)]
        residual = max(vals) if vals else (Fraction(0) if exact else mp.mpf(0))
        return {"n": n, "k": k, "lines": [], "coeffs": [],
                "residual": residual, "support": [],
                "rows_solved": 0, "rows_checked": P - 1,
                "kind": "exact" if d0.kind == "exact" else "approx"}
    g_rows = [[col_series[j][t] for j in range(cols)] for t in range(1, cols + 1)]
    rhs = [[d0[t]] for t in range(1, cols + 1)]
    sol = _solve_square(g_rows, rhs, exact)
    coeffs = [sol[j][0] for j in range(cols)]
    zero = Fraction(0) if exact else mp.mpf(0)
    residual = zero
    for t in range(cols + 1, P):
        recon = zero
        for j in range(cols):
            recon = recon + coeffs[j] * col_series[j][t]
        gap = abs(d0[t] - recon) if exact else abs(_to_mp(d0[t]) - _to_mp(recon))
        if gap > residual:
            residual = gap
    if exact:
        support = [j for j in range(cols) if coeffs[j] != 0]
    else:
        tol = mp.mpf(10) ** (-(mp.mp.dps - 12))
        support = [j for j in range(cols) if abs(_to_mp(coeffs[j])) > tol]
    return {
        "n": n, "k": k,
        "lines": [{"shift": L, "level": lev, "index": i,
                   "two_omega": 2 ** omega(L)} for L, lev, i, _ in lines],
        "coeffs": coeffs, "residual": residual, "support": support,
        "rows_solved": cols, "rows_checked": P - 1 - cols,
        "kind": "exact" if exact else "approx",
    }


# -- local Hecke sum identities ------------------------------------------


class _QuadInt:
    """a + b sqrt(p) with exact rational components."""

    __slots__ = ("a", "b", "p")

    def __init__(self, a, b, p):
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.p = p

    def __add__(self, other):
        o = self._lift(other)
        return _QuadInt(self.a + o.a, self.b + o.b, self.p)

    def __sub__(self, other):
        o = self._lift(other)
        return _QuadInt(self.a - o.a, self.b - o.b, self.p)

    def __mul__(self, other):
        o = self._lift(other)
        return _QuadInt(self.a * o.a + self.p * self.b * o.b,
                        self.a * o.b + self.b * o.a, self.p)

    __radd__ = __add__
    __rmul__ = __mul__

    def scale(self, q):
        q = Fraction(q)
        return _QuadInt(self.a * q, self.b * q, self.p)

    def _lift(self, other):
        if isinstance(other, _QuadInt):
            if other.p != self.p:
                raise ValueError("mixed radicands")
            return other
        return _QuadInt(other, 0, self.p)

    def __eq__(self, other):
        o = self._lift(other)
        return self.a == o.a and self.b == o.b

    def __repr__(self):
        return f"({self.a} + {self.b} sqrt{self.p})"


def hecke_sum_identities(p: int, k: int, lam, r_max: int = 60) -> dict:
    """Exact verification of the local eigenvalue sum identities at p.

    lam is the analytic Hecke parameter, a rational with |lam| < 2.  The
    arithmetic eigenvalue lam * p^{k/2} and everything built from it live
    in the quadratic extension by sqrt(p), which keeps all computations
    exact for odd k.  Checks, for t up to r_max: the three-term recurrence
    of the local sums L_p(t), the closed partial-sum identity, and the
    geometric convergence of the full sum to (p+1)/(p-1).
    """
    lam = Fraction(lam)
    if abs(lam) >= 2:
        raise ValueError(f"analytic parameter {lam} outside the open window (-2, 2)")
    if r_max < 2:
        raise ValueError("need r_max >= 2")
    # arithmetic normalization: a(p) = lam p^{k/2}, a(p)^2 - a(p^2) = p^k
    root = _QuadInt(0, 1, p)
    unit = _QuadInt(1, 0, p)
    ap = root.scale(lam * p ** ((k - 1) // 2)) if k % 2 else \
        _QuadInt(lam * p ** (k // 2), 0, p)
    pk = p ** k
    lam_pow = [unit, ap]
    for _ in range(r_max + 2):
        lam_pow.append(ap * lam_pow[-1] - lam_pow[-2].scale(pk))

    def lampow(t: int) -> _QuadInt:
        # eigenvalues at negative prime powers vanish by convention
        return lam_pow[t] if t >= 0 else _QuadInt(0, 0, p)

    def lseq(t: int) -> _QuadInt:
        if t < 0:
            return _QuadInt(0, 0, p)
        if t == 0:
            return _QuadInt(p ** (k + 1) + pk + p ** (k - 1), 0, p) - lam_pow[2]
        out = lam_pow[t].scale(p ** (k + 1)) - lam_pow[t + 2]
        inner = lampow(t - 2).scale(p ** (k + 1)) - lam_pow[t]
        return out - inner.scale(p ** (k - 1))

    lvals = [lseq(t) for t in range(-1, r_max + 2)]

    def lp(t: int) -> _QuadInt:
        return lvals[t + 1]

    recurrence_ok = all(
        ap * lp(t) == lp(t + 1) + lp(t - 1).scale(pk)
        for t in range(0, r_max)
    )

    partial_identity_ok = True
    acc = _QuadInt(0, 0, p)
    partial = None
    for r in range(0, r_max + 1):
        acc = acc + (lam_pow[r] * lp(r)).scale(Fraction(1, p ** ((r + 1) * (k + 1))))
        rhs_geo = Fraction(p + 1, p) * sum(Fraction(1, p ** t) for t in range(r + 1))
        rhs = _QuadInt(rhs_geo, 0, p) \
            + (lam_pow[r] * lam_pow[r]).scale(Fraction(1, p ** (r * (k + 1) + 2))) \
            - (lam_pow[r] * lam_pow[r + 2]).scale(Fraction(1, p ** ((r + 1) * (k + 1))))
        if acc != rhs:
            partial_identity_ok = False
            break
        if acc.b != 0:
            partial_identity_ok = False
            break
        partial = acc.a
    target = Fraction(p + 1, p - 1)
    checkpoints = sorted({max(2, r_max // 4), max(3, r_max // 2), r_max})
    errs = {}
    acc2 = _QuadInt(0, 0, p)
    for r in range(0, r_max + 1):
        acc2 = acc2 + (lam_pow[r] * lp(r)).scale(Fraction(1, p ** ((r + 1) * (k + 1))))
        if r in checkpoints:
            errs[r] = abs(acc2.a - target)
    decreasing = all(errs[a] >= errs[b] for a, b in zip(checkpoints, checkpoints[1:]))
    return {
        "p": p, "k": k, "lam": lam, "r_max": r_max,
        "recurrence_ok": recurrence_ok,
        "partial_identity_ok": partial_identity_ok,
        "partial_sum": partial, "target": target,
        "error": abs(partial - target) if partial is not None else None,
        "errors_at": errs, "geometric": decreasing,
        "ok": recurrence_ok and partial_identity_ok and decreasing,
    }
