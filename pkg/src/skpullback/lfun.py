"""L-functions attached to the lift family, and the Petersson norms they need.

Three layers.  An exact layer builds Dirichlet coefficients of the degree-6
convolution L(f x sym2 g) from Hecke data and cross-checks them against
local Euler factors; comparisons happen on sqrt-cleared rationals, so they
can be asserted with equality.  An analytic layer evaluates completed
values by a two-sided smoothed approximate functional equation whose
V-kernels come from trapezoid contour quadrature of the gamma factors,
with an independent incomplete-gamma route for degree 2.  A quadrature
layer integrates |h|^2 over the level-4 quotient by writing h in the
theta / weight-2 Eisenstein monomial span, both of which can be evaluated
anywhere on the upper half plane by modular reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

import mpmath as mp

from .core import (PrecisionError, divisors, factorize, is_squarefree,
                   prime_divisors)
from .gl2 import NewformGL2
from .kohnen import HalfIntForm, _plus_monomials

__all__ = [
    "VolumeConstants", "volume_constants", "SymSquareCoeffs",
    "coeffs_f_sym2g", "local_factor_coeffs", "triple_factorization_check",
    "LSpec", "spec_f_sym2g", "spec_gl2", "spec_sym2",
    "completed_lambda", "l_value", "afe_length", "lambda_gl2_incgamma",
    "l_gl2_at", "l_sym2_at_1", "norm_f_via_sym2", "norm_f_quadrature",
    "theta_eval", "e2_eval", "f2_eval", "monomial_coordinates",
    "norm_h_quadrature", "norm_F_from_h", "h_norm_from_F",
]


def _to_mp(x):
    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / x.denominator
    if isinstance(x, (mp.mpf, mp.mpc)):
        return x
    return mp.mpf(x)


# ---------------------------------------------------------------------------
# volume constants


@dataclass(frozen=True)
class VolumeConstants:
    """Quotient volumes entering the mass normalization, kept as one ratio."""

    digits: int = 30

    @property
    def v1(self):
        with mp.workdps(self.digits + 10):
            return +(mp.pi / 3)

    @property
    def v2(self):
        with mp.workdps(self.digits + 10):
            return +(mp.pi ** 3 / 270)

    @property
    def ratio(self):
        """v2 / v1^2 = zeta(4) / (2 pi zeta(2))."""
        with mp.workdps(self.digits + 10):
            return +(mp.zeta(4) / (2 * mp.pi * mp.zeta(2)))

    def closed_form_gap(self):
        # the zeta ratio collapses to pi / 30
        with mp.workdps(self.digits + 10):
            return abs(self.ratio - mp.pi / 30)


def volume_constants(digits: int = 30) -> VolumeConstants:
    vc = VolumeConstants(digits)
    if vc.closed_form_gap() > mp.mpf(10) ** (-digits):
        raise PrecisionError("volume ratio drifted off its closed form")
    return vc


# ---------------------------------------------------------------------------
# symmetric-square Fourier coefficients


def _lam_square(g: NewformGL2, p: int, j: int):
    """lambda_g(p^(2j)): exact rational for exact g (even analytic power)."""
    if j == 0:
        return Fraction(1) if g.exact else mp.mpf(1)
    num = g.a(p ** (2 * j))
    den = p ** (j * (g.w - 1))
    if g.exact:
        return Fraction(num, den)
    return _to_mp(num) / den


class SymSquareCoeffs:
    """Fourier table A(n, m) of the symmetric-square transfer of g.

    First-column values at good primes are sums of lambda_g at even prime
    powers; at primes of the level they are geometric sums in 1/p.  A
    general entry comes from the Moebius pairing of two first columns.
    The second index must stay coprime to the level of g, which is all the
    Dirichlet series ever asks for.
    """

    def __init__(self, g: NewformGL2):
        self.g = g
        self._one = Fraction(1) if g.exact else mp.mpf(1)
        self._cache: dict = {}

    def a1(self, p: int, t: int):
        """A(p^t, 1)."""
        if t < 0:
            return 0
        if t == 0:
            return self._one
        key = (p, t)
        if key not in self._cache:
            if self.g.level % p == 0:
                val = sum(Fraction(1, p ** j) for j in range(t + 1))
                if not self.g.exact:
                    val = _to_mp(val)
            else:
                val = sum(_lam_square(self.g, p, t - 2 * c)
                          for c in range(t // 2 + 1))
            self._cache[key] = val
        return self._cache[key]

    def _pair(self, p: int, e: int, c: int):
        if self.g.level % p == 0:
            if c:
                raise ValueError(f"second index meets the level of g at p={p}")
            return self.a1(p, e)
        val = self.a1(p, e) * self.a1(p, c)
        if e >= 1 and c >= 1:
            val = val - self.a1(p, e - 1) * self.a1(p, c - 1)
        return val

    def a(self, n: int, m: int):
        if n < 1 or m < 1:
            raise ValueError("indices start at 1")
        fn, fm = factorize(n), factorize(m)
        val = self._one
        for p in set(fn) | set(fm):
            val = val * self._pair(p, fn.get(p, 0), fm.get(p, 0))
        return val

    def column(self, X: int) -> list:
        """[A(n, 1) for n = 0..X], slot 0 unused."""
        return [0] + [self.a(n, 1) for n in range(1, X + 1)]


# ---------------------------------------------------------------------------
# degree-6 Dirichlet coefficients, sqrt-cleared


def _check_pair(f: NewformGL2, g: NewformGL2):
    if g.w != f.w // 2 + 1:
        raise ValueError(
            f"weight mismatch: expected g of weight {f.w // 2 + 1}, got {g.w}")
    if f.level % g.level:
        raise ValueError("level of g must divide level of f")
    if not is_squarefree(f.level):
        raise ValueError("square-free level only")


def _uf_table(f: NewformGL2, p: int, emax: int):
    # lambda_f(p^t) p^(t/2) = a_f(p^t) / p^(t(k-1)), rational for exact f
    k = f.w // 2
    out = []
    for t in range(emax + 1):
        num = f.a(p ** t)
        den = p ** (t * (k - 1))
        out.append(Fraction(num, den) if f.exact else _to_mp(num) / den)
    return out


def coeffs_f_sym2g(f: NewformGL2, g: NewformGL2, X: int, cleared: bool = True):
    """Dirichlet coefficients of L(f x sym2 g) up to X.

    Returns t[0..X] with t[n] = sqrt(n) b(n); the square root always
    cancels, so entries are exact rationals for exact input and Euler
    comparisons can be asserted with equality.  cleared=False divides the
    square root back out at the working precision.
    """
    _check_pair(f, g)
    if X < 1:
        raise ValueError("X must be positive")
    exact = f.exact and g.exact
    one = Fraction(1) if exact else mp.mpf(1)
    sym = SymSquareCoeffs(g)
    N = f.level

    local: dict = {}

    def local_c(p, e):
        if (p, e) not in local:
            try:
                uf = _uf_table(f, p, e)
            except PrecisionError as err:
                raise PrecisionError(
                    f"truncation X={X} exceeds the stored eigenvalues: {err}")
            if N % p == 0:
                val = uf[e] * sym.a1(p, e)
            else:
                val = 0
                for cc in range(e // 2 + 1):
                    t = e - 2 * cc
                    val = val + uf[t] * sym._pair(p, t, cc) * p ** cc
            local[(p, e)] = val
        return local[(p, e)]

    out = [0, one]
    for n in range(2, X + 1):
        val = one
        for p, e in factorize(n).items():
            val = val * local_c(p, e)
        out.append(val)
    if cleared:
        return out
    return [mp.mpf(0)] + [_to_mp(out[n]) / mp.sqrt(n) for n in range(1, X + 1)]


def _newton_from_power_sums(psums: list, emax: int):
    # series coefficients of 1/prod(1 - u_i x) from power sums of the u_i
    exact = not isinstance(psums[1] if len(psums) > 1 else mp.mpf(0),
                           (mp.mpf, mp.mpc))
    b = [Fraction(1) if exact else mp.mpf(1)]
    for e in range(1, emax + 1):
        acc = 0
        for i in range(1, e + 1):
            acc = acc + psums[i] * b[e - i]
        b.append(Fraction(acc, e) if exact else acc / e)
    return b


def _pg2_table(g: NewformGL2, p: int, emax: int):
    # alpha^(2t) + 1 + beta^(2t) for the Satake pair of g at p
    zero = Fraction(0) if g.exact else mp.mpf(0)
    m1 = _lam_square(g, p, 1) - 1 + zero  # alpha^2 + beta^2
    m = [2 + zero, m1]
    for _ in range(2, emax + 1):
        m.append(m1 * m[-1] - m[-2])
    return [mt + 1 for mt in m]


def local_factor_coeffs(f: NewformGL2, g: NewformGL2, p: int, emax: int):
    """sqrt-cleared b(p^e), e <= emax, from the inverse local factor alone.

    Newton's identities on cleared power sums; an independent oracle for
    the bivariate-table route in coeffs_f_sym2g.
    """
    _check_pair(f, g)
    k = f.w // 2
    exact = f.exact and g.exact
    zero = Fraction(0) if exact else mp.mpf(0)
    psums = [zero]
    if f.level % p == 0 and g.level % p == 0:
        r = -f.al_sign(p)
        for t in range(1, emax + 1):
            psums.append(r ** t * (1 + Fraction(1, p ** t)) + zero)
    elif f.level % p == 0:
        r = -f.al_sign(p)
        pg2 = _pg2_table(g, p, emax)
        for t in range(1, emax + 1):
            psums.append(r ** t * pg2[t])
    else:
        num = f.a(p)
        r = Fraction(num, p ** (k - 1)) if exact else _to_mp(num) / p ** (k - 1)
        pf = [2 + zero, r]
        for _ in range(2, emax + 1):
            pf.append(r * pf[-1] - p * pf[-2])
        pg2 = _pg2_table(g, p, emax)
        for t in range(1, emax + 1):
            psums.append(pf[t] * pg2[t])
    return _newton_from_power_sums(psums, emax)


def triple_factorization_check(f: NewformGL2, g: NewformGL2, X: int) -> dict:
    """Coefficients of L(f x g x g) against the L(f) * L(f x sym2 g) split.

    The 8-fold Satake side is built per prime power by Newton's identities,
    the factored side as a divisor convolution of a_f(d)/d^(k-1) with the
    degree-6 coefficients.  Away from the level the two must agree, exactly
    so in the exact case.
    """
    _check_pair(f, g)
    k = f.w // 2
    exact = f.exact and g.exact
    N = f.level
    c6 = coeffs_f_sym2g(f, g, X)

    eight: dict = {}

    def eight_local(p, emax):
        if p not in eight or len(eight[p]) <= emax:
            zero = Fraction(0) if exact else mp.mpf(0)
            rf = Fraction(f.a(p), p ** (k - 1)) if exact \
                else _to_mp(f.a(p)) / p ** (k - 1)
            rg = Fraction(g.a(p), p ** ((k - 1) // 2)) if exact \
                else _to_mp(g.a(p)) / p ** ((k - 1) // 2)
            pf = [2 + zero, rf]
            pg = [2 + zero, rg]
            for _ in range(2, emax + 1):
                pf.append(rf * pf[-1] - p * pf[-2])
                pg.append(rg * pg[-1] - p * pg[-2])
            psums = [zero]
            for t in range(1, emax + 1):
                psums.append(pf[t] * pg[t] * pg[t] / p ** t)
            eight[p] = _newton_from_power_sums(psums, emax)
        return eight[p]

    max_dev = Fraction(0) if exact else mp.mpf(0)
    checked = 0
    for n in range(1, X + 1):
        fac = factorize(n)
        if any(N % p == 0 for p in fac):
            continue
        lhs = Fraction(1) if exact else mp.mpf(1)
        for p, e in fac.items():
            lhs = lhs * eight_local(p, e)[e]
        rhs = 0
        for d in divisors(n):
            ud = Fraction(f.a(d), d ** (k - 1)) if exact \
                else _to_mp(f.a(d)) / d ** (k - 1)
            rhs = rhs + ud * c6[n // d]
        dev = abs(lhs - rhs)
        if dev > max_dev:
            max_dev = dev
        checked += 1
    ok = (max_dev == 0) if exact else bool(max_dev < mp.mpf(10) ** (-35))
    return {"X": X, "checked": checked, "exact": exact,
            "max_dev": max_dev, "ok": ok}


# ---------------------------------------------------------------------------
# completed L-values


@dataclass
class LSpec:
    """Data needed to evaluate a completed L-function.

    Lambda(s) = C^s gamma(s) L(s) with C = sqrt(cond_sq), gamma(s) the
    product of GammaR(s + a) over gamma_r and GammaC(s + a) over gamma_c,
    and L given by a coefficient generator in the analytic normalization.
    eps is the sign in Lambda(s) = eps Lambda(1 - s); sigma_abs bounds the
    abscissa of absolute convergence.
    """

    label: str
    degree: int
    gamma_c: tuple
    gamma_r: tuple
    cond_sq: int
    eps: int
    coeffs: object
    sigma_abs: float = 1.3
    meta: dict = field(default_factory=dict)

    def log_gamma(self, z):
        tot = mp.mpc(0)
        for a in self.gamma_r:
            za = z + _to_mp(a)
            tot = tot + mp.loggamma(za / 2) - za / 2 * mp.log(mp.pi)
        for a in self.gamma_c:
            za = z + _to_mp(a)
            tot = tot + mp.log(2) - za * mp.log(2 * mp.pi) + mp.loggamma(za)
        return tot

    def gamma_factor(self, z):
        return mp.exp(self.log_gamma(z))

    def root_conductor(self):
        return mp.sqrt(self.cond_sq)


def spec_f_sym2g(f: NewformGL2, g: NewformGL2) -> LSpec:
    """Degree-6 spec: complex shifts 2k - 1/2, k - 1/2, 1/2 and sign +1."""
    _check_pair(f, g)
    k = f.w // 2
    shifts = (Fraction(4 * k - 1, 2), Fraction(2 * k - 1, 2), Fraction(1, 2))

    def coeffs(X):
        return coeffs_f_sym2g(f, g, X, cleared=False)

    return LSpec(label=f"deg6-w{f.w}-w{g.w}", degree=6, gamma_c=shifts,
                 gamma_r=(), cond_sq=f.level ** 3 * g.level, eps=1,
                 coeffs=coeffs, meta={"f": f, "g": g})


def spec_gl2(f: NewformGL2) -> LSpec:
    """Standard L-function of an even-weight newform."""
    eps = (-1) ** (f.w // 2)
    for p in prime_divisors(f.level):
        eps *= f.al_sign(p)

    def coeffs(X):
        return [mp.mpf(0)] + [f.lam(n) for n in range(1, X + 1)]

    return LSpec(label=f"gl2-w{f.w}", degree=2,
                 gamma_c=(Fraction(f.w - 1, 2),), gamma_r=(),
                 cond_sq=f.level, eps=eps, coeffs=coeffs,
                 sigma_abs=1.1, meta={"f": f})


def spec_sym2(f: NewformGL2) -> LSpec:
    """Symmetric square of an even-weight newform (square-free level)."""
    N = f.level

    def lam2(m):
        if f.exact:
            return Fraction(f.a(m * m), m ** (f.w - 1))
        return _to_mp(f.a(m * m)) / mp.power(m, f.w - 1)

    def coeffs(X):
        zero = Fraction(0) if f.exact else mp.mpf(0)
        out = [zero] * (X + 1)
        for n in range(1, X + 1):
            acc = zero
            e = 1
            while e * e <= n:
                if n % (e * e) == 0 and gcd(e, N) == 1:
                    acc = acc + lam2(n // (e * e))
                e += 1
            out[n] = acc
        return out

    return LSpec(label=f"sym2-w{f.w}", degree=3, gamma_c=(f.w - 1,),
                 gamma_r=(1,), cond_sq=N * N, eps=1, coeffs=coeffs,
                 sigma_abs=1.2, meta={"f": f})


def _contour(spec: LSpec, w, digits: int):
    """Vertical-line trapezoid nodes: V_w(n) = (h/2pi) sum_m K_m n^(-u_m).

    The line Re u = c sits right of the convergence abscissa for both
    tails; the step follows the analyticity width of the shifted band,
    which stays clear of u = 0 and of every gamma pole.
    """
    rw = mp.re(w)
    c = max(_to_mp(spec.sigma_abs) + mp.mpf("0.25") - rw, mp.mpf("0.75"))
    d = min(c, mp.mpf(1)) * mp.mpf("0.9")
    target = (digits + 12) * mp.log(10)
    h = 2 * mp.pi * d / (target + 5)
    logC = mp.log(spec.root_conductor()) if spec.cond_sq != 1 else mp.mpf(0)

    def lognode(t):
        u = c + 1j * t
        return mp.re(spec.log_gamma(w + u)) + mp.re(w + u) * logC \
            - mp.log(abs(u))

    base = lognode(0)
    T = mp.mpf(2)
    while lognode(T) > base - target - 3:
        T += 2
        if T > 600:
            raise PrecisionError("contour truncation failed to close")
    M = int(mp.ceil(T / h))
    ks = []
    for m_i in range(-M, M + 1):
        u = c + 1j * (m_i * h)
        ks.append(mp.exp(spec.log_gamma(w + u) + (w + u) * logC) / u)
    return h, c, M, ks


def _v_values(contour, ns):
    h, c, M, ks = contour
    pref = h / (2 * mp.pi)
    out = {}
    for n in ns:
        if n == 1:
            base, step = mp.mpf(1), mp.mpc(1)
        else:
            ln = mp.log(n)
            base = mp.exp(-c * ln)
            step = mp.exp(-1j * h * ln)
        acc = mp.mpc(ks[M])
        up = mp.mpc(1)
        dn = mp.mpc(1)
        for m_i in range(1, M + 1):
            up *= step
            dn *= mp.conj(step)
            acc += ks[M + m_i] * up + ks[M - m_i] * dn
        out[n] = pref * base * acc
    return out


def _tail_cutoff(contour, w, digits: int) -> int:
    """First n past which the smoothed kernel tail is negligible."""
    h, c, M, ks = contour
    pref = h / (2 * mp.pi)

    def vmag(n):
        ln = mp.log(n)
        acc = mp.mpc(0)
        for m_i in range(-M, M + 1):
            acc += ks[M + m_i] * mp.exp(-(c + 1j * m_i * h) * ln)
        return abs(pref * acc)

    scale = vmag(1) + mp.mpf(10) ** (-digits - 40)
    thresh = scale * mp.mpf(10) ** (-(digits + 8))
    # slack n^0.4 stands in for divisor-bound coefficient growth
    slack = mp.mpf("0.4") - mp.re(w)
    n = 2
    while vmag(n) * mp.power(n, slack) > thresh:
        n *= 2
        if n > 10 ** 7:
            raise PrecisionError("smoothed tail failed to decay")
    lo, hi = n // 2, n
    while hi - lo > max(3, hi // 20):
        mid = (lo + hi) // 2
        if vmag(mid) * mp.power(mid, slack) > thresh:
            lo = mid
        else:
            hi = mid
    return hi


def _afe_plan(spec: LSpec, s, digits: int):
    ws = mp.mpc(s)
    wm = 1 - ws
    cs = _contour(spec, ws, digits)
    cm = _contour(spec, wm, digits)
    X = max(_tail_cutoff(cs, ws, digits), _tail_cutoff(cm, wm, digits))
    return X, cs, cm


def afe_length(spec: LSpec, s, digits: int = 25) -> int:
    """Truncation point past which both smoothed tails are negligible."""
    with mp.workdps(digits + 15):
        return _afe_plan(spec, s, digits)[0]


def completed_lambda(spec: LSpec, s, digits: int = 25, X: int | None = None):
    """Lambda(s) by the two-sided smoothed approximate functional equation.

    Both tails carry the exact gamma data of the spec; the smoothing
    kernel is truncated once its integrand falls 10^-(digits+12) below
    its peak.  Raises PrecisionError, naming the truncation it needed, if
    the coefficient generator cannot reach it.
    """
    with mp.workdps(digits + 15):
        sc = mp.mpc(s)
        s = mp.re(sc) if mp.im(sc) == 0 else sc
        planned_x, cs, cm = _afe_plan(spec, s, digits)
        if X is None:
            X = planned_x
        try:
            b = spec.coeffs(X)
        except PrecisionError as err:
            raise PrecisionError(
                f"digits={digits} needs Dirichlet coefficients to X={X}: {err}")
        if len(b) < X + 1:
            raise PrecisionError(
                f"digits={digits} needs Dirichlet coefficients to X={X}, "
                f"generator stopped at {len(b) - 1}")
        ns = [n for n in range(1, X + 1) if _to_mp(b[n]) != 0]
        if not ns:
            return mp.mpc(0)
        v_s = _v_values(cs, ns)
        v_m = _v_values(cm, ns)
        acc = mp.mpc(0)
        for n in ns:
            bn = _to_mp(b[n])
            acc += bn * (mp.power(n, -s) * v_s[n]
                         + spec.eps * mp.power(n, -(1 - s)) * v_m[n])
        return +acc


def l_value(spec: LSpec, s, digits: int = 25, X: int | None = None):
    """Finite part L(s) = Lambda(s) / (C^s gamma(s))."""
    with mp.workdps(digits + 15):
        lam = completed_lambda(spec, s, digits, X)
        sc = mp.mpc(s)
        logC = mp.log(spec.root_conductor()) if spec.cond_sq != 1 else mp.mpf(0)
        return +(lam * mp.exp(-spec.log_gamma(sc) - sc * logC))


def lambda_gl2_incgamma(f: NewformGL2, s, digits: int = 30,
                        X: int | None = None):
    """Completed degree-2 value by the exponentially convergent split sum.

    Lambda(s) = 2 C^(-mu) sum_n a(n) [E_s(n) + eps E_(1-s)(n)] with
    E_w(n) = (2 pi n / C)^(-w-mu) Gamma(w + mu, 2 pi n / C) and
    mu = (w_f - 1)/2.  A plain sum of incomplete-gamma terms, independent
    of the contour machinery, so each can serve as the other's oracle.
    """
    with mp.workdps(digits + 15):
        mu = mp.mpf(f.w - 1) / 2
        C = mp.sqrt(f.level)
        eps = spec_gl2(f).eps
        if X is None:
            X = int(mp.ceil(C * (digits + 12) * mp.log(10) / (2 * mp.pi))) + 12
        if X >= f.prec:
            raise PrecisionError(
                f"split sum at digits={digits} needs coefficients to {X}, "
                f"stored below {f.prec}")
        sc = mp.mpc(s)
        acc = mp.mpc(0)
        for n in range(1, X + 1):
            x = 2 * mp.pi * n / C
            t1 = mp.power(x, -(sc + mu)) * mp.gammainc(sc + mu, x, mp.inf)
            t2 = mp.power(x, -(1 - sc + mu)) \
                * mp.gammainc(1 - sc + mu, x, mp.inf)
            acc += _to_mp(f.a(n)) * (t1 + eps * t2)
        return +(2 * mp.power(C, -mu) * acc)


def l_gl2_at(f: NewformGL2, s, digits: int = 20, route: str = "incgamma"):
    """Finite degree-2 value L(f, s), by either analytic route."""
    with mp.workdps(digits + 15):
        spec = spec_gl2(f)
        if route == "incgamma":
            lam = lambda_gl2_incgamma(f, s, digits)
        elif route == "afe":
            lam = completed_lambda(spec, s, digits)
        else:
            raise ValueError(f"unknown route {route!r}")
        sc = mp.mpc(s)
        logC = mp.log(spec.root_conductor()) if f.level != 1 else mp.mpf(0)
        val = lam * mp.exp(-spec.log_gamma(sc) - sc * logC)
        return +(mp.re(val) if mp.im(sc) == 0 else val)


# ---------------------------------------------------------------------------
# special values and norms through L-functions


def l_sym2_at_1(g: NewformGL2, digits: int = 18, route: str = "afe"):
    """L(sym2 g, 1).

    route="afe" strips the gamma factor off the completed value at s=1;
    route="quadrature" (level 1 only) inverts the norm relation against a
    direct fundamental-domain integral of |g|^2.
    """
    if route == "afe":
        with mp.workdps(digits + 15):
            val = l_value(spec_sym2(g), 1, digits)
            out = mp.re(val)
            if abs(mp.im(val)) > mp.mpf(10) ** (-digits + 3) * (1 + abs(out)):
                raise PrecisionError("symmetric-square value came out complex")
            return +out
    if route == "quadrature":
        if g.level != 1:
            raise ValueError("quadrature route implemented for level 1")
        with mp.workdps(digits + 15):
            nrm = norm_f_quadrature(g, digits)
            return +(nrm * mp.pi / 2 * mp.power(4 * mp.pi, g.w) / mp.gamma(g.w))
    raise ValueError(f"unknown route {route!r}")


def norm_f_via_sym2(f: NewformGL2, digits: int = 18):
    """<f,f> = (2/pi)(4 pi)^(-w) Gamma(w) N prod_{p|N}(p+1)^(-1) L(sym2 f, 1)."""
    with mp.workdps(digits + 15):
        out = 2 / mp.pi * mp.power(4 * mp.pi, -f.w) * mp.gamma(f.w) \
            * f.level * l_sym2_at_1(f, digits)
        for p in prime_divisors(f.level):
            out /= (p + 1)
        return +out


def norm_f_quadrature(f: NewformGL2, digits: int = 12, nx: int | None = None,
                      delta=None):
    """Direct Petersson integral of |f|^2 y^w over the level-1 domain."""
    if f.level != 1:
        raise ValueError("direct route implemented for level 1")
    if nx is None:
        nx = max(24, int(2.2 * digits))
    with mp.workdps(digits + 10):
        floor = mp.mpf(10) ** (-mp.mp.dps - 5)
        coeffs = [_to_mp(f.a(n)) for n in range(1, f.prec)]

        def fval(z):
            q = mp.exp(2j * mp.pi * z)
            acc = mp.mpc(0)
            qp = q
            for cn in coeffs:
                acc += cn * qp
                qp *= q
                if abs(qp) < floor:
                    break
            return acc

        def gmass(z):
            return abs(fval(z)) ** 2 * mp.im(z) ** f.w

        # the tail rule converges like exp(-c / delta); c is about 3.9 here
        d0 = _to_mp(delta) if delta is not None \
            else min(max(mp.mpf("1.7") / digits, mp.mpf("0.08")), mp.mpf("0.28"))
        return +_domain_integral(gmass, nx, d0)


# ---------------------------------------------------------------------------
# pointwise evaluation of the level-4 generators


_I4 = (mp.mpf(1), mp.mpc(0, 1), mp.mpf(-1), mp.mpc(0, -1))


def _translation_steps(w) -> int:
    # mantissa must still see the fractional part after the shift
    re = mp.re(w)
    if abs(re) > mp.ldexp(1, mp.mp.prec):
        raise PrecisionError(
            "translation too large to resolve at the working precision")
    return int(mp.nint(re))


def theta_eval(z):
    """theta(z) = sum over all integers of q^(n^2), anywhere above the axis.

    Reduction into the standard domain tracks the component pair
    A = sum q^(n^2), B = sum over odd n of q^(n^2 / 4): a unit translation
    fixes A and scales B by i, the inversion sends (A, B) to
    sqrt(-i w / 2) (A + B, A - B).
    """
    w = mp.mpc(z)
    if mp.im(w) <= 0:
        raise ValueError("upper half plane only")
    fac = mp.mpc(1)
    va, vb = mp.mpc(1), mp.mpc(0)
    for _ in range(300):
        n = _translation_steps(w)
        if n:
            w -= n
            vb *= _I4[n % 4]
        if abs(w) > mp.mpf("0.999"):
            break
        wp = -1 / w
        fac *= mp.sqrt(-1j * wp / 2)
        va, vb = va + vb, va - vb
        w = wp
    else:
        raise PrecisionError("theta reduction failed to terminate")
    nmax = int(mp.ceil(mp.sqrt((mp.mp.dps + 6) * mp.log(10)
                               / (2 * mp.pi * mp.im(w))))) + 1
    q4 = mp.exp(2j * mp.pi * w / 4)
    a_val = mp.mpc(1)
    for n in range(1, nmax + 1):
        a_val += 2 * q4 ** (4 * n * n)
    b_val = mp.mpc(0)
    m = 0
    while (2 * m + 1) ** 2 <= (2 * nmax + 2) ** 2:
        b_val += 2 * q4 ** ((2 * m + 1) ** 2)
        m += 1
    return fac * (va * a_val + vb * b_val)


def e2_eval(z):
    """Quasimodular E2 at a point: E2(-1/w) = w^2 E2(w) - 6 i w / pi."""
    w = mp.mpc(z)
    if mp.im(w) <= 0:
        raise ValueError("upper half plane only")
    P, Q = mp.mpc(1), mp.mpc(0)
    for _ in range(300):
        n = _translation_steps(w)
        if n:
            w -= n
        if abs(w) > mp.mpf("0.999"):
            break
        wp = -1 / w
        Q = Q - P * 6j * wp / mp.pi
        P = P * wp * wp
        w = wp
    else:
        raise PrecisionError("E2 reduction failed to terminate")
    nmax = int(mp.ceil((mp.mp.dps + 6) * mp.log(10)
                       / (2 * mp.pi * mp.im(w)))) + 2
    q = mp.exp(2j * mp.pi * w)
    acc = mp.mpc(0)
    qp = mp.mpc(1)
    for n in range(1, nmax + 1):
        qp *= q
        acc += sum(divisors(n)) * qp
    return P * (1 - 24 * acc) + Q


def f2_eval(z):
    """Weight-2 level-4 generator: (-E2(z) + 3 E2(2z) - 2 E2(4z)) / 24."""
    return (-e2_eval(z) + 3 * e2_eval(2 * z) - 2 * e2_eval(4 * z)) / 24


def monomial_coordinates(h: HalfIntForm, check_digits: int | None = None) -> list:
    """Coordinates of h in the theta^a F2^b span, a + 4b = 2k + 1.

    The monomial with b-th Eisenstein power has valuation exactly b, so
    the leading block is unit lower-triangular and forward substitution
    gives the coordinates; every stored coefficient beyond the block must
    then be reproduced, or the fit is rejected.  check_digits bounds the
    accuracy demanded of the fit for approximate input (the stored data
    cannot be checked tighter than it was computed).
    """
    k = h.k
    ncols = (2 * k + 1) // 4 + 1
    P = min(h.series.prec, max(2 * ncols + 10, 18))
    if P < ncols + 2:
        raise PrecisionError(
            f"need at least {ncols + 2} stored coefficients, have {P}")
    cols = _plus_monomials(k, P)
    exact = h.series.kind == "exact"
    sol = []
    for b in range(ncols):
        acc = h.series[b]
        for j in range(b):
            acc = acc - cols[j][b] * sol[j]
        sol.append(acc if exact else _to_mp(acc))
    if check_digits is None:
        check_digits = mp.mp.dps - 8
    scale = max([abs(_to_mp(h.series[n])) for n in range(P)] + [mp.mpf(1)])
    tol = scale * mp.mpf(10) ** (-check_digits)
    for n in range(ncols, P):
        fit = sum(cols[j][n] * sol[j] for j in range(ncols))
        if exact:
            if fit != h.series[n]:
                raise ValueError(f"monomial fit fails at exponent {n}")
        elif abs(_to_mp(fit) - _to_mp(h.series[n])) > tol:
            raise ValueError(f"monomial fit fails at exponent {n}")
    return sol


# ---------------------------------------------------------------------------
# Petersson norm of a plus form by fundamental-domain quadrature


# bottom rows cover the projective line mod 4:
# (0:1), (1:0), (1:1), (1:2), (1:3), (2:1)
_COSETS4 = ((1, 0, 0, 1), (0, -1, 1, 0), (0, -1, 1, 1),
            (0, -1, 1, 2), (0, -1, 1, 3), (-1, 0, 2, -1))


def _gauss_legendre(n: int):
    """Nodes and weights on [-1, 1] by Newton iteration on P_n."""
    out = []
    stop = mp.mpf(10) ** (-mp.mp.dps + 2)
    for i in range(1, n + 1):
        x = mp.cos(mp.pi * (i - mp.mpf("0.25")) / (n + mp.mpf("0.5")))
        dp = mp.mpf(1)
        for _ in range(80):
            p0, p1 = mp.mpf(1), x
            for j in range(2, n + 1):
                p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
            dp = n * (x * p1 - p0) / (x * x - 1)
            dx = p1 / dp
            x -= dx
            if abs(dx) < stop:
                break
        out.append((x, 2 / ((1 - x * x) * dp * dp)))
    return out


def _tail_integral(fy, y0, delta):
    """Double-exponential rule for the integral of fy over (y0, infinity)."""
    half = mp.pi / 2
    eps = mp.mpf(10) ** (-mp.mp.dps)
    acc = fy(y0 + 1) * half * delta
    for sgn in (1, -1):
        j = 1
        dead = 0
        while True:
            u = sgn * j * delta
            t = mp.exp(half * mp.sinh(u))
            term = fy(y0 + t) * delta * half * mp.cosh(u) * t
            if not mp.isfinite(term):
                raise PrecisionError(
                    f"tail integrand is not finite at offset {mp.nstr(t, 5)}")
            acc += term
            if abs(term) < abs(acc) * eps:
                dead += 1
                if dead >= 2:
                    break
            else:
                dead = 0
            j += 1
            if j > 500:
                raise PrecisionError("tail quadrature failed to converge")
    return acc


def _domain_integral(gmass, nx: int, delta):
    """Integral of gmass dmu over the standard domain, using x-evenness."""
    acc = mp.mpf(0)
    for t, wgt in _gauss_legendre(nx):
        x = (t + 1) / 4
        y0 = mp.sqrt(1 - x * x)
        inner = _tail_integral(
            lambda y, xx=x: gmass(mp.mpc(xx, y)) / (y * y), y0, delta)
        acc += wgt * inner / 4
    return 2 * acc


def norm_h_quadrature(h: HalfIntForm, digits: int = 8, nx: int = 24,
                      delta=None, refine: bool = True) -> dict:
    """Index-normalized Petersson norm of a weight k + 1/2 plus form.

    The level-4 quotient integral is folded into the standard domain
    through the six cosets; h is evaluated off its expansion disk via its
    theta / Eisenstein monomial coordinates.  Reports the refinement
    change and the worst seam defect (evaluator consistency across the
    domain boundary and under the level-4 modularity), and refuses to
    integrate when the seam disagrees.
    """
    if h.level != 4:
        raise ValueError("level-4 quadrature only")
    k = h.k
    wexp = mp.mpf(2 * k + 1) / 2
    amax = 2 * k + 1
    # the fitted coordinates are the precision floor for every off-disk
    # evaluation, so fit them as sharply as the stored data allows
    fit_dps = max(digits + 10, 45)
    with mp.workdps(fit_dps):
        coords = [_to_mp(c) for c in monomial_coordinates(h, digits)]
    with mp.workdps(digits + 10):
        # near a cusp the monomial sum cancels down to the first cusp
        # coefficient, a loss linear in s = 1/Im; the coordinate error
        # amplified by s^wexp caps how deep an evaluation stays meaningful
        s_cut = min(mp.mpf(800),
                    mp.power(10, mp.mpf(2 * fit_dps - digits - 25) / wexp))

        def hval(z):
            imz = mp.im(z)
            boost = 0
            if imz < 1:
                s = 1 / imz
                if s > s_cut:
                    return mp.mpc(0)
                boost = min(int(mp.mpf("2.8") * s) + 10, 2 * fit_dps)
            with mp.extradps(boost):
                tv = theta_eval(z)
                fv = f2_eval(z)
                acc = mp.mpc(0)
                for b, cb in enumerate(coords):
                    if cb:
                        acc += cb * tv ** (amax - 4 * b) * fv ** b
            return +acc

        def gmass(z):
            tot = mp.mpf(0)
            for a, b, c, d in _COSETS4:
                w = (a * z + b) / (c * z + d)
                tot += abs(hval(w)) ** 2 * mp.im(w) ** wexp
            return tot

        seam = mp.mpf(0)
        for z in (mp.mpc("0.137", "0.93"), mp.mpc("-0.31", "1.21")):
            lhs = abs(hval(z / (4 * z + 1)))
            rhs = abs(hval(z)) * abs(4 * z + 1) ** wexp
            seam = max(seam, abs(lhs - rhs) / (rhs if rhs else mp.mpf(1)))
        for z in (mp.mpc("0.21", "0.9781"), mp.mpc("-0.44", "0.898")):
            ga, gb = gmass(z), gmass(-1 / z)
            seam = max(seam, abs(ga - gb) / (abs(ga) if ga else mp.mpf(1)))
        if seam > mp.mpf(10) ** (-(digits - 2)):
            raise ValueError(
                f"evaluator disagrees across the seam (defect {seam}); "
                "the form is not modular of this weight at level 4")

        # tail rule error is about exp(-2.5 / delta) for these integrands
        d0 = _to_mp(delta) if delta is not None \
            else min(max(mp.mpf("1.05") / digits, mp.mpf("0.09")),
                     mp.mpf("0.3"))
        val = _domain_integral(gmass, nx, d0) / 6
        rel_change = None
        if refine:
            val2 = _domain_integral(gmass, nx + 6, d0 * mp.mpf("0.7")) / 6
            rel_change = abs(val2 - val) / (abs(val2) if val2 else mp.mpf(1))
            val = val2
        return {"value": +val, "rel_change": rel_change, "seam": +seam,
                "index": 6, "nodes": (nx, float(d0))}


# ---------------------------------------------------------------------------
# the h <-> F norm relation


def _petreln_factor(N: int, k: int, l_f_32, digits: int):
    # <h,h> = factor * <F,F>; the zeta(2) pair in the source collapses to 6
    with mp.workdps(digits + 10):
        ram = Fraction(1)
        for p in prime_divisors(N):
            ram *= Fraction(p * p + 1, (p - 1) ** 2 * (p + 1))
        out = 6 * mp.power(4 * mp.pi, k + 1) * N * _to_mp(ram) \
            / (mp.power(4, k) * mp.gamma(k + 1) * _to_mp(l_f_32))
        return +out


def norm_F_from_h(h, f: NewformGL2, N: int = 1, k: int | None = None,
                  h_norm=None, h_rel_err=None, l_f_32=None,
                  digits: int = 10) -> dict:
    """<F,F> for the lift of h, by inverting the norm relation.

    Needs <h,h> (computed by quadrature when not supplied) and L(f, 3/2)
    (computed by the split sum when not supplied).  N = 1 keeps an empty
    ramified product.  The propagated relative error is dominated by the
    h-norm quadrature.
    """
    if N < 1 or not is_squarefree(N):
        raise ValueError("square-free positive level only")
    if k is None:
        k = h.k
    if h is not None and h.k != k:
        raise ValueError(f"weight index mismatch: form has {h.k}, asked {k}")
    if f.w != 2 * k:
        raise ValueError(f"eigenform weight {f.w} does not match index {k}")
    with mp.workdps(digits + 10):
        rel = mp.mpf(10) ** (-digits)
        if h_norm is None:
            rep = norm_h_quadrature(h, digits=digits)
            h_norm = rep["value"]
            if rep["rel_change"] is not None:
                rel = max(rel, rep["rel_change"])
        if h_rel_err is not None:
            rel = max(rel, _to_mp(h_rel_err))
        if l_f_32 is None:
            l_f_32 = l_gl2_at(f, mp.mpf(3) / 2, digits + 5)
        if _to_mp(h_norm) <= 0 or _to_mp(l_f_32) <= 0:
            raise ValueError("norms and the 3/2 value must be positive")
        fac = _petreln_factor(N, k, l_f_32, digits)
        val = _to_mp(h_norm) / fac
        return {"value": +val, "rel_error": +rel,
                "parts": {"h_norm": +_to_mp(h_norm),
                          "l_f_32": +_to_mp(l_f_32), "factor": +fac}}


def h_norm_from_F(F_norm, l_f_32, N: int, k: int, digits: int = 15):
    """Forward direction of the same relation, for round trips."""
    if N < 1 or not is_squarefree(N):
        raise ValueError("square-free positive level only")
    with mp.workdps(digits + 10):
        return +(_to_mp(F_norm) * _petreln_factor(N, k, l_f_32, digits))
