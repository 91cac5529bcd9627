"""Discriminant-table Jacobi operators: V_m, the development maps, z = 0."""
from fractions import Fraction

import pytest

from skpullback.core import PrecisionError, QSeries, op_U
from skpullback.gl2 import delta_series, e4_series
from skpullback.jacobi import (
    D0, D2, JacobiForm, fj_pullback_coeff, from_half_integral, op_Vm,
)
from skpullback.kohnen import HalfIntForm, plus_basis_level4


@pytest.fixture(scope="module")
def h9():
    return plus_basis_level4(9, P=1700)[0]


@pytest.fixture(scope="module")
def h11():
    return plus_basis_level4(11, P=1700)[0]


@pytest.fixture(scope="module")
def h13():
    return plus_basis_level4(13, P=1700)[0]


class TestCoefficientTable:
    def test_accessors(self, h9):
        phi = from_half_integral(h9, 1, 9)
        assert phi.c(1, 1) == h9.c(3)
        assert phi.c(1, 0) == h9.c(4)
        assert phi.c(3, 2) == h9.c(8)
        assert phi.weight == 10 and phi.index == 1

    def test_r_sign_symmetry(self, h9):
        phi = JacobiForm(h9)
        for n in range(1, 8):
            for r in range(0, 6):
                if 4 * n > r * r:
                    assert phi.c(n, r) == phi.c(n, -r)

    def test_indefinite_rejected(self, h9):
        phi = JacobiForm(h9)
        with pytest.raises(ValueError, match="definite"):
            phi.c(1, 2)
        with pytest.raises(ValueError, match="definite"):
            phi.c(0, 0)

    def test_level_weight_consistency(self, h9):
        with pytest.raises(ValueError):
            JacobiForm(h9, N=3)
        with pytest.raises(ValueError):
            JacobiForm(h9, k=11)

    def test_theta_components_partition_support(self, h9):
        phi = JacobiForm(h9)
        h0, h1 = phi.h_component(0), phi.h_component(1)
        assert all(D % 4 == 0 for D in h0.coeffs)
        assert all(D % 4 == 3 for D in h1.coeffs)
        assert (h0 + h1).coeff_list(100) == h9.series.coeff_list(100)

    def test_two_variable_reconstruction(self, h9):
        # multiply out h_j times the weight-1/2 theta with r = j (mod 2)
        # in the quarter-power variable and reread every (n, r) slot
        phi = JacobiForm(h9)
        nmax = 12
        table: dict = {}
        for j in (0, 1):
            hj = phi.h_component(j)
            for D, cD in hj.coeffs.items():
                r = j
                while r * r + D < 4 * nmax:
                    for s in ((r, -r) if r else (0,)):
                        key = (D + s * s, s)
                        table[key] = table.get(key, 0) + cD
                    r += 2
        assert all(E % 4 == 0 for E, _ in table)
        for n in range(1, nmax):
            for r in range(-6, 7):
                if 4 * n - r * r > 0:
                    assert table.get((4 * n, r), 0) == phi.c(n, r)


class TestVm:
    def test_v1_is_identity(self, h9):
        phi = JacobiForm(h9)
        v1 = op_Vm(phi, 1)
        assert v1.index == 1 and v1.weight == 10
        for n in range(1, 9):
            for r in range(-3, 4):
                if 4 * n > r * r:
                    assert v1.c(n, r) == phi.c(n, r)

    def test_vp_at_gcd_one(self, h9):
        phi = JacobiForm(h9)
        for p in (2, 3, 5):
            assert op_Vm(phi, p).c(1, 1) == phi.c(p, 1)

    def test_v4_divisor_structure(self, h9):
        # at (1,0) the gcd with m=4 is 1, so a=2 contributes nothing;
        # at (2,0) it is 2 and the second term appears with weight 2^k
        phi = JacobiForm(h9)
        v4 = op_Vm(phi, 4)
        assert v4.c(1, 0) == phi.c(4, 0)
        assert v4.c(2, 0) == phi.c(8, 0) + 2 ** 9 * phi.c(2, 0)
        assert v4.c(2, 2) == phi.c(8, 2) + 2 ** 9 * phi.c(2, 1)
        assert v4.index == 4

    def test_coprime_composition(self, h11):
        phi = JacobiForm(h11)
        lhs = op_Vm(op_Vm(phi, 2), 3)
        rhs = op_Vm(phi, 6)
        assert lhs.index == rhs.index == 6
        for n in range(1, 21):
            for r in range(0, 10):
                if 24 * n - r * r > 0:
                    assert lhs.c(n, r) == rhs.c(n, r)

    def test_level_filter_drops_divisors(self, h9):
        # same table viewed at synthetic level 2: the a=2 term is filtered
        h_even = HalfIntForm(h9.series.with_tags(level=8), 9, level=8)
        v4 = op_Vm(JacobiForm(h_even, N=2), 4)
        phi = JacobiForm(h9)
        assert v4.c(2, 0) == phi.c(8, 0)


class TestDevelopmentMaps:
    def test_d0_leading_value(self, h11):
        d0 = D0(JacobiForm(h11))
        assert d0[1] == h11.c(4) + 2 * h11.c(3)
        assert d0.weight == 12 and d0[0] == 0

    def test_d0_kills_weight_ten_target(self, h9):
        # z = 0 restriction lands in the trivial cusp space
        assert D0(JacobiForm(h9)).is_zero()

    def test_d0_kills_weight_fourteen_target(self, h13):
        assert D0(JacobiForm(h13)).is_zero()

    def test_d0_weight_twelve_is_delta_multiple(self, h11):
        d0 = D0(JacobiForm(h11))
        dl = delta_series(d0.prec)
        assert d0[1] == 12
        assert all(d0[n] == 12 * dl[n] for n in range(d0.prec))

    def test_d2_on_d0_kernel_is_modular(self, h9, h13):
        d2 = D2(JacobiForm(h9))
        dl = delta_series(d2.prec)
        assert d2[1] == 18
        assert all(d2[n] == 18 * dl[n] for n in range(d2.prec))
        d2 = D2(JacobiForm(h13))
        P = d2.prec
        s16 = (e4_series(P) * delta_series(P)).truncate(P)
        assert d2[1] == 26
        assert all(d2[n] == 26 * s16[n] for n in range(P))

    def test_d2_scalar_irrelevant_on_d0_kernel(self, h9):
        # with D0 phi = 0 the -2n term contributes nothing, so any scalar
        # convention gives proportional output
        from math import isqrt
        phi = JacobiForm(h9)
        d2 = D2(phi)
        alt = {}
        for n in range(1, d2.prec):
            acc = 0
            for r in range(1, isqrt(4 * n - 1) + 1):
                acc += 2 * r * r * phi.c(n, r)
            alt[n] = 10 * acc
        assert all(Fraction(alt[n], 10) == Fraction(d2[n], 9)
                   for n in range(1, d2.prec))

    def test_d2_rejects_higher_index(self, h9):
        with pytest.raises(ValueError):
            D2(op_Vm(JacobiForm(h9), 2))

    def test_d0_commutes_with_level_u(self, h9):
        # formal identity: the a > 1 terms of V_d are filtered at d | N^oo
        h_syn = HalfIntForm(h9.series.with_tags(level=12), 9, level=12)
        phi = JacobiForm(h_syn, N=3)
        for d in (3, 9):
            lhs = D0(op_Vm(phi, d))
            rhs = op_U(D0(phi), d)
            assert lhs.coeff_list(min(lhs.prec, rhs.prec)) \
                == rhs.coeff_list(min(lhs.prec, rhs.prec))


class TestPullbackRoute:
    def test_m_one_is_d0(self, h11):
        d0 = D0(JacobiForm(h11))
        for n in range(1, 12):
            assert fj_pullback_coeff(h11, 1, 11, n, 1) == d0[n]

    def test_prime_slice_is_hecke_image(self, h11):
        d0 = D0(JacobiForm(h11))
        for p in (2, 3):
            for n in range(1, 9):
                expect = d0[p * n] + (p ** 11 * d0[n // p] if n % p == 0 else 0)
                assert fj_pullback_coeff(h11, 1, 11, n, p) == expect

    def test_slice_symmetry_through_hecke(self, h9):
        for n in range(1, 9):
            for m in range(1, 9):
                assert fj_pullback_coeff(h9, 1, 9, n, m) \
                    == fj_pullback_coeff(h9, 1, 9, m, n)

    def test_composite_level_split(self, h9):
        # synthetic level 3: m = 3 * 5 routes through U(3) then T(5)
        from skpullback.core import op_T
        h_syn = HalfIntForm(h9.series.with_tags(level=12), 9, level=12)
        base = D0(JacobiForm(h_syn, N=3))
        expect = op_T(op_U(base, 3), 5, 10)
        for n in range(1, 9):
            assert fj_pullback_coeff(h_syn, 3, 9, n, 15) == expect[n]

    def test_precision_guard(self, h9):
        small = HalfIntForm(h9.series.truncate(40), 9)
        with pytest.raises(PrecisionError):
            fj_pullback_coeff(small, 1, 9, 9, 2)
