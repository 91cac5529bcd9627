"""Checks for the elliptic-forms layer: bases, eigenforms, oldform ratios."""
from fractions import Fraction

import mpmath as mp
import pytest
from hypothesis import given, settings, strategies as st

from skpullback.core import QSeries, divisors, op_B
from skpullback.gl2 import (
    NewformGL2, OldClassDescriptor, OldformGram, delta_series,
    dim_cusp_level1, e2_series, e4_series, e6_series, eigenbasis_level1,
    eta_value, gram_ratio, old_basis, pilot_ratio, satake, t2_matrix,
    victor_miller_basis,
)

# a(n) for the weight-12 discriminant form, n = 1..12
TAU = [1, -24, 252, -1472, 4830, -6048, -16744, 84480,
       -113643, -115920, 534612, -370944]

# a(n) for the weight-2 level-11 newform, n = 1..11
A11 = [1, -2, -1, 2, 1, 2, -2, 0, -2, -2, 1]


def euler_factor_series(P, scale=1):
    # prod_{n>=1} (1 - q^{scale n}) via the pentagonal-number expansion
    coeffs = {0: 1}
    j = 1
    while True:
        e1 = scale * j * (3 * j - 1) // 2
        e2 = scale * j * (3 * j + 1) // 2
        if e1 >= P and e2 >= P:
            break
        s = -1 if j % 2 else 1
        if e1 < P:
            coeffs[e1] = s
        if e2 < P:
            coeffs[e2] = s
        j += 1
    return QSeries(coeffs, P, weight=0, level=1)


@pytest.fixture(scope="module")
def delta_big():
    series = delta_series(10001)
    return NewformGL2(12, 1, [int(c) for c in series.coeff_list()], digits=30)


@pytest.fixture(scope="module")
def f11():
    P = 400
    prod = (euler_factor_series(P) ** 2) * (euler_factor_series(P, 11) ** 2)
    coeffs = [0] + prod.coeff_list(P - 1)   # multiply by q
    return NewformGL2(2, 11, coeffs, digits=30)


class TestLevel1Series:
    def test_eisenstein_leading_terms(self):
        e2 = e2_series(4)
        e4 = e4_series(4)
        e6 = e6_series(4)
        assert e2.coeff_list() == [1, -24, -72, -96]
        assert e4.coeff_list() == [1, 240, 2160, 6720]
        assert e6.coeff_list() == [1, -504, -16632, -122976]

    def test_tau_values(self):
        d = delta_series(13)
        assert d.coeff_list() == [0] + TAU

    def test_delta_against_product_expansion(self):
        # independent route: q prod (1-q^n)^24
        P = 60
        prod = euler_factor_series(P) ** 24
        d = delta_series(P)
        for n in range(P - 1):
            assert d[n + 1] == prod[n]

    def test_weight_tags(self):
        assert delta_series(5).weight == 12
        assert e4_series(5).weight == 4


class TestVictorMiller:
    DIMS = {4: 0, 6: 0, 8: 0, 10: 0, 12: 1, 14: 0, 16: 1, 18: 1, 20: 1,
            22: 1, 24: 2, 26: 1, 28: 2, 34: 2, 38: 2, 46: 3}

    def test_dimensions(self):
        for w, d in self.DIMS.items():
            assert dim_cusp_level1(w) == d
            assert len(victor_miller_basis(w, d + 8)) == d

    def test_echelon_shape(self):
        basis = victor_miller_basis(24, 10)
        assert basis[0][1] == 1 and basis[0][2] == 0
        assert basis[1][1] == 0 and basis[1][2] == 1
        assert all(isinstance(c, int) for b in basis for c in b.coeff_list())

    def test_weight_12_is_delta(self):
        b = victor_miller_basis(12, 13)[0]
        assert b.coeff_list() == [0] + TAU

    def test_rejects_odd_or_tiny(self):
        with pytest.raises(ValueError):
            victor_miller_basis(13, 10)
        with pytest.raises(ValueError):
            victor_miller_basis(24, 2)


# dim-1 spaces: the eigenform is the obvious monomial times the discriminant
MONOMIAL_EIGEN = {16: (1, 0), 18: (0, 1), 20: (2, 0), 22: (1, 1), 26: (2, 1)}


class TestEigenbasis:
    def test_delta_coeffs(self):
        (f,) = eigenbasis_level1(12, P=13)
        assert f.exact
        assert [f.a(n) for n in range(1, 13)] == TAU
        assert f.a(4) == f.a(2) ** 2 - 2 ** 11

    def test_dim_one_eigenforms_match_monomial_products(self):
        P = 16
        for w, (a, b) in MONOMIAL_EIGEN.items():
            (f,) = eigenbasis_level1(w, P=P)
            expected = (e4_series(P) ** a) * (e6_series(P) ** b) * delta_series(P)
            assert f.q_expansion(P) == expected

    def test_weight_22_a2(self):
        (f,) = eigenbasis_level1(22, P=8)
        assert f.a(2) == -288

    def test_weight_24_pair(self):
        forms = eigenbasis_level1(24, P=12, digits=50)
        assert len(forms) == 2
        m = t2_matrix(24)
        tr = m[0][0] + m[1][1]
        det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        assert tr == 1080 and det == -20468736
        with mp.workdps(60):
            a2s = [f.a(2) for f in forms]
            assert a2s[0] < a2s[1]
            tol = mp.mpf(10) ** -35
            for a2 in a2s:
                assert abs(a2 * a2 - tr * a2 + det) < tol * abs(det)
            assert abs(a2s[0] + a2s[1] - tr) < tol * tr
            for f in forms:
                assert abs(f.a(4) - (f.a(2) ** 2 - 2 ** 23)) < tol * 2 ** 23

    def test_weight_46_triple(self):
        forms = eigenbasis_level1(46, P=10, digits=50)
        assert len(forms) == 3
        with mp.workdps(60):
            tr = sum(r[i] for i, r in enumerate(t2_matrix(46)))
            tol = mp.mpf(10) ** -35
            assert abs(sum(f.a(2) for f in forms) - tr) < tol * abs(tr)
            for f in forms:
                assert abs(f.a(6) - f.a(2) * f.a(3)) < tol * abs(f.a(6))

    def test_empty_space(self):
        assert eigenbasis_level1(10) == []
        assert eigenbasis_level1(14) == []

    def test_multiplicative_extension(self):
        from skpullback.core import PrecisionError
        (f,) = eigenbasis_level1(12, P=15)
        assert f.a(13) == -577738
        # beyond the stored range: rebuilt from stored prime data
        assert f.a(35) == f.a(5) * f.a(7)
        assert f.a(32) == f.a(2) * f.a(16) - 2 ** 11 * f.a(8)
        with pytest.raises(PrecisionError):
            f.a(17)


class TestSatake:
    def test_delta_p2(self):
        with mp.workdps(40):
            (f,) = eigenbasis_level1(12, P=10)
            sp = f.satake(2)
            tol = mp.mpf(10) ** -30
            assert abs(sp.alpha + sp.beta - (-24)) < tol
            assert abs(sp.alpha * sp.beta - 2 ** 11) < tol
            assert abs(sp.a_pt(2) - f.a(4)) < tol * abs(f.a(4))
            assert abs(sp.a_pt(3) - f.a(8)) < tol * abs(f.a(8))

    def test_zero_coefficient_is_pure_imaginary(self):
        with mp.workdps(30):
            sp = satake(0, 2, 12)
            assert abs(mp.re(sp.alpha)) < mp.mpf(10) ** -25
            assert abs(abs(mp.im(sp.alpha)) - mp.power(2, mp.mpf(11) / 2)) < mp.mpf(10) ** -20

    def test_ramanujan_violation_rejected(self):
        with mp.workdps(30):
            with pytest.raises(ValueError):
                satake(10 ** 9, 2, 12)


class TestDepthOneCoefficients:
    def test_round_trip_inversion(self, delta_big):
        w = delta_big.w
        for n in range(1, 10001):
            total = 0
            d = 1
            while d * d <= n:
                if n % (d * d) == 0:
                    total += d ** (w - 2) * delta_big.lam1(n // (d * d))
                d += 1
            assert total == delta_big.a(n), n

    def test_prime_values_unchanged(self, delta_big):
        for p in (2, 3, 5, 7, 11):
            assert delta_big.lam1(p) == delta_big.a(p)

    def test_level_prime_powers(self, f11):
        for t in range(5):
            assert f11.lam1(11 ** t) == f11.a(11) ** t

    @given(st.integers(2, 60), st.integers(2, 60))
    @settings(max_examples=60, deadline=None)
    def test_multiplicative(self, delta_big, m, n):
        from math import gcd
        if gcd(m, n) != 1:
            return
        assert delta_big.lam1(m * n) == delta_big.lam1(m) * delta_big.lam1(n)


class TestNewformValidation:
    def test_rejects_bad_recurrence(self):
        coeffs = [0] + TAU[:]
        coeffs[4] += 1
        with pytest.raises(ValueError):
            NewformGL2(12, 1, coeffs)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            NewformGL2(12, 1, [0, 2, -48])

    def test_level_11_signs(self, f11):
        assert [f11.a(n) for n in range(1, 12)] == A11
        assert f11.al_sign(11) == -1
        with pytest.raises(ValueError):
            f11.al_sign(3)

    def test_rejects_incompatible_level_coefficient(self):
        # a(11) = 3 cannot happen in weight 2 at a square-free level
        coeffs = A11[:]
        coeffs[10] = 3
        with pytest.raises(ValueError):
            NewformGL2(2, 11, [0] + coeffs)


class TestOldBasis:
    def test_trivial_index(self, delta_big):
        out = old_basis(delta_big, 1, P=20)
        assert list(out) == [()]
        assert out[()].coeff_list(13) == [0] + TAU

    def test_count_and_levels(self, delta_big):
        out = old_basis(delta_big, 15, P=40)
        assert len(out) == 4
        assert all(s.level == 15 for s in out.values())

    def test_sign_action_by_swapping_shifts(self, delta_big):
        # replacing d by d*p (or d/p when p | d) inside the sum must act as
        # multiplication by the p-th sign
        g = delta_big
        P = 40
        base = g.q_expansion(P)
        shifted = {d: op_B(base, d, w=g.w).truncate(P) if d > 1 else base
                   for d in divisors(15)}
        out = old_basis(g, 15, P=P)
        for signs, series in out.items():
            sig = dict(zip((3, 5), signs))
            for p in (3, 5):
                swapped = QSeries.zero(P, weight=g.w, level=1)
                for d in divisors(15):
                    s = 1
                    for q in (3, 5):
                        if d % q == 0:
                            s *= sig[q]
                    dp = d // p if d % p == 0 else d * p
                    swapped = swapped + (s * shifted[dp])
                assert swapped.with_tags(level=15) == series.scale(sig[p])

    def test_descriptor_sigma(self, delta_big):
        d = OldClassDescriptor(delta_big, 15, (1, -1))
        assert d.L == 15
        assert d.sigma(1) == 1 and d.sigma(3) == 1
        assert d.sigma(5) == -1 and d.sigma(15) == -1
        with pytest.raises(ValueError):
            d.sigma(7)


class TestInnerProductRatios:
    def test_empty_product(self, delta_big):
        assert gram_ratio(delta_big, 1, 1, 15) == 1
        assert eta_value(delta_big, 3, 0, 15) == 1

    def test_square_free_shift(self, delta_big):
        # eta(3,1) eta(5,1) for the discriminant form at ambient level 15
        assert eta_value(delta_big, 3, 1, 15) == Fraction(7, 27)
        assert eta_value(delta_big, 5, 1, 15) == Fraction(161, 625)
        assert gram_ratio(delta_big, 1, 15, 15) == Fraction(1127, 16875)

    def test_level_prime_eta(self, f11):
        assert eta_value(f11, 11, 1, 33) == Fraction(1, 11)
        assert eta_value(f11, 3, 1, 33) == Fraction(-1, 4)

    def test_eta_rejects_foreign_prime(self, delta_big):
        with pytest.raises(ValueError):
            eta_value(delta_big, 7, 1, 15)

    def test_closed_formula_agrees_good_primes(self, delta_big):
        for M in divisors(15):
            for a in range(4):
                for b in range(3):
                    L = 3 ** a * 5 ** b
                    assert gram_ratio(delta_big, L, M, 15) == \
                        pilot_ratio(delta_big, L, M)

    def test_closed_formula_agrees_level_prime(self, f11):
        for M in (1, 3):
            for L in (1, 3, 9, 11, 27, 33, 99, 121, 363):
                assert gram_ratio(f11, L, M, 33) == pilot_ratio(f11, L, M)

    def test_depth_shift_recurrences(self, delta_big):
        g = delta_big
        # dividing prime of M: one power of p moves across the pairing
        for L in (1, 5, 25):
            for M in (3, 15):
                assert pilot_ratio(g, L * 3, M) == pilot_ratio(g, L, M // 3)
        # prime away from M: each power contributes one eta factor
        for L in (1, 5):
            for t in (1, 2, 3):
                assert pilot_ratio(g, L * 3 ** t, 1) == \
                    eta_value(g, 3, t, 15) * pilot_ratio(g, L, 1)

    def test_sigma_norms(self, delta_big):
        import itertools
        g = delta_big
        for signs in itertools.product((1, -1), repeat=2):
            desc = OldClassDescriptor(g, 15, signs)
            direct = desc.norm_ratio()
            assert direct > 0
            # folding the double sum through the sign symmetry
            folded = 4 * sum(desc.sigma(d) * pilot_ratio(g, d, 1)
                             for d in divisors(15))
            assert direct == folded

    def test_distinct_signs_orthogonal(self, delta_big):
        import itertools
        g = delta_big
        descs = [OldClassDescriptor(g, 15, s)
                 for s in itertools.product((1, -1), repeat=2)]
        for d1 in descs:
            for d2 in descs:
                if d1.signs == d2.signs:
                    continue
                tot = sum(d1.sigma(a) * d2.sigma(b) * pilot_ratio(g, a, b)
                          for a in divisors(15) for b in divisors(15))
                assert tot == 0

    def test_gram_wrapper(self, f11):
        gram = OldformGram(f11, 33)
        assert gram.eta(3, 1) == eta_value(f11, 3, 1, 33)
        assert gram.ratio(9, 3) == gram_ratio(f11, 9, 3, 33)
        assert gram.direct_ratio(9, 3) == pilot_ratio(f11, 9, 3)
        assert gram.lam1(121) == 1
