import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from skpullback.core import (
    ArithContext, PrecisionError, QSeries, divisors, euler_phi, index_sl2,
    index_sp4, is_squarefree, mobius, op_B, op_T, op_U, primes_up_to,
    series_mul, sigma, zeta_level,
)


def qs(items, **kw):
    return QSeries.from_list(items, **kw)


class TestQSeriesBasics:
    def test_hand_product(self):
        a = qs([1, 2])
        b = qs([1, -1])
        c = a * b
        assert c.coeff_list() == [1, 1]  # 1 + q - 2q^2 truncated below q^2

    def test_hand_product_full(self):
        a = qs([1, 2, 0])
        b = qs([1, -1, 0])
        assert (a * b).coeff_list(3) == [1, 1, -2]

    def test_identity(self):
        a = qs([3, 1, 4, 1, 5])
        one = QSeries.one(5)
        assert (a * one).coeff_list() == a.coeff_list()

    def test_read_past_precision_raises(self):
        a = qs([1, 2, 3])
        with pytest.raises(PrecisionError):
            a[3]

    def test_negative_exponent_is_zero(self):
        assert qs([1])[-1] == 0

    def test_weight_mismatch_add(self):
        with pytest.raises(ValueError):
            qs([1], weight=2) + qs([1], weight=4)

    def test_level_mismatch_add(self):
        with pytest.raises(ValueError):
            qs([1], level=2) + qs([1], level=3)

    def test_weight_adds_in_product(self):
        c = qs([1], weight=4) * qs([1], weight=6)
        assert c.weight == 10

    def test_mixed_kind_rejected(self):
        a = qs([1, 1])
        b = qs([1.0, 1.0], kind="approx")
        with pytest.raises(ValueError):
            a * b
        assert (a.to_approx() * b).kind == "approx"

    def test_mul_precision_zero_rejected(self):
        with pytest.raises(PrecisionError):
            QSeries.zero(0) * qs([1])

    def test_theta_square_counts_lattice_points(self):
        # theta0^2 coefficient at n is #{(a,b) in Z^2 : a^2+b^2 = n}
        P = 51
        theta = QSeries({n * n: 2 if n else 1 for n in range(8)}, P)
        sq = theta * theta
        for n in range(P):
            count = sum(1 for a in range(-8, 9) for b in range(-8, 9)
                        if a * a + b * b == n)
            assert sq[n] == count


class TestOperators:
    def test_U1_identity(self):
        a = qs([5, 4, 3, 2])
        assert op_U(a, 1) is a

    def test_U2(self):
        a = qs([1, 2, 3, 4])
        u = op_U(a, 2)
        assert u.prec == 2 and u.coeff_list() == [1, 3]

    def test_B_scaling(self):
        a = qs([0, 1], weight=12)
        b = op_B(a, 2)
        assert b[2] == 64 and b[1] == 0  # 2^6 = 64

    def test_B1_identity(self):
        a = qs([1, 2], weight=2)
        assert op_B(a, 1) is a

    def test_B_multiplicative(self):
        a = qs(list(range(1, 8)), weight=4)
        left = op_B(op_B(a, 2), 3)
        right = op_B(a, 6)
        for n in range(min(left.prec, right.prec)):
            assert left[n] == right[n]

    def test_B_odd_weight_rejected(self):
        with pytest.raises(ValueError):
            op_B(qs([1], weight=3), 2)
        with pytest.raises(ValueError):
            op_B(qs([1], weight=Fraction(5, 2)), 2)

    def test_BU_collapse(self):
        # U(d) B_d = d^{w/2} * identity
        a = qs([2, -1, 7, 0, 3, 5], weight=8)
        for d in (2, 3):
            out = op_U(op_B(a, d), d)
            for n in range(out.prec):
                assert out[n] == d ** 4 * a[n]

    def test_T1_identity(self):
        a = qs([1, 2, 3])
        assert op_T(a, 1, 12) is a

    def test_T_needs_coprime_index(self):
        with pytest.raises(ValueError):
            op_T(qs([1] * 10), 3, 12, N=6)

    def test_T2_on_delta(self):
        from skpullback.gl2 import delta_series
        d = delta_series(40)
        t = op_T(d, 2, 12)
        assert t[1] == -24 and t[2] == -24 * d[2]

    def test_T_commutes(self):
        a = qs(list(range(1, 200)), weight=12)
        lhs = op_T(op_T(a, 2, 12), 3, 12)
        rhs = op_T(op_T(a, 3, 12), 2, 12)
        for n in range(min(lhs.prec, rhs.prec)):
            assert lhs[n] == rhs[n]

    @given(st.integers(2, 5), st.integers(2, 5))
    @settings(max_examples=20, deadline=None)
    def test_T_multiplicative_coprime(self, m, n):
        if math.gcd(m, n) != 1:
            return
        a = qs(list(range(1, 160)), weight=6)
        lhs = op_T(a, m * n, 6)
        rhs = op_T(op_T(a, m, 6), n, 6)
        for i in range(min(lhs.prec, rhs.prec)):
            assert lhs[i] == rhs[i]

    def test_poisoned_sentinel(self):
        # Plant garbage beyond the declared precision; no operation may
        # read it, so results must match the clean run coefficientwise.
        clean = qs([1, -3, 5, 7, -2, 4, 6, 8], weight=4)
        dirty = QSeries(dict(clean.coeffs), clean.prec, 4)
        for n in range(clean.prec, clean.prec + 30):
            dirty.coeffs[n] = 10 ** 9 + n  # poison
        pairs = [
            (clean * clean, dirty * dirty),
            (clean + clean, dirty + dirty),
            (op_U(clean, 2), op_U(dirty, 2)),
            (op_B(clean, 3), op_B(dirty, 3)),
            (op_T(clean, 2, 4), op_T(dirty, 2, 4)),
            (op_T(clean, 4, 4), op_T(dirty, 4, 4)),
        ]
        for a, b in pairs:
            assert a.prec == b.prec
            for n in range(a.prec):
                assert a[n] == b[n]


class TestKroneckerPath:
    def test_matches_schoolbook(self):
        import random
        rng = random.Random(7)
        a = qs([rng.randint(-50, 50) for _ in range(90)])
        b = qs([rng.randint(-50, 50) for _ in range(80)])
        fast = a * b  # prec > 64 triggers the packed path
        slow = {}
        for i, ci in a.coeffs.items():
            for j, cj in b.coeffs.items():
                slow[i + j] = slow.get(i + j, 0) + ci * cj
        for n in range(fast.prec):
            assert fast[n] == slow.get(n, 0)


class TestArith:
    def test_divisors(self):
        assert divisors(12) == [1, 2, 3, 4, 6, 12]

    def test_mobius(self):
        assert [mobius(n) for n in range(1, 11)] == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]

    def test_phi_sigma(self):
        assert euler_phi(36) == 12
        assert sigma(6) == 12
        assert sigma(4, 3) == 1 + 8 + 64

    def test_squarefree(self):
        assert is_squarefree(30) and not is_squarefree(12)

    def test_primes_up_to(self):
        assert primes_up_to(20) == [2, 3, 5, 7, 11, 13, 17, 19]

    def test_index_sl2(self):
        assert index_sl2(1) == 1
        assert index_sl2(4) == 6
        assert index_sl2(6) == 12

    def test_index_sp4(self):
        assert index_sp4(3) == 40
        assert index_sp4(15) == 40 * 156
        assert index_sp4(15, 5) == 40
        with pytest.raises(ValueError):
            index_sp4(12)

    def test_zeta_level(self):
        assert zeta_level(6, 2) == Fraction(3, 2)
        assert zeta_level(1, 2) == 1
        assert zeta_level(5, 4) == Fraction(625, 624)

    def test_context(self):
        ctx = ArithContext(15)
        assert ctx.primes == [3, 5]
        assert ctx.index_sp4() == 6240
        assert ctx.phi() == 8


@given(st.lists(st.integers(-30, 30), min_size=1, max_size=25),
       st.lists(st.integers(-30, 30), min_size=1, max_size=25),
       st.lists(st.integers(-30, 30), min_size=1, max_size=25))
@settings(max_examples=60, deadline=None)
def test_mul_associative_to_precision(xs, ys, zs):
    a, b, c = qs(xs), qs(ys), qs(zs)
    lhs = (a * b) * c
    rhs = a * (b * c)
    for n in range(min(lhs.prec, rhs.prec)):
        assert lhs[n] == rhs[n]


@given(st.integers(1, 6), st.lists(st.integers(-9, 9), min_size=2, max_size=40))
@settings(max_examples=60, deadline=None)
def test_BU_collapse_property(d, xs):
    a = qs(xs, weight=6)
    out = op_U(op_B(a, d), d)
    for n in range(out.prec):
        assert out[n] == d ** 3 * a[n]
