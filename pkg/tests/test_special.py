"""Gamma, Bessel J and Bessel zeros against closed forms and frozen
high-precision values (40-digit mpmath, pasted below)."""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracdiag.exceptions import DomainError, ValidationError
from fracdiag.special import (
    BesselOrder,
    bessel_j,
    bessel_j_derivative,
    bessel_zeros,
    gamma,
    mcmahon_guess,
)

mpmath = pytest.importorskip("mpmath")

# frozen 20-digit values
GAMMA_REF = {0.25: 3.6256099082219083119, 3.7: 4.1706517837966040301, 0.01: 99.432585119150601632}
J_REF = [
    (0.25, 7.3, 0.29060209922144420772),
    (1.95, 3.3, 0.47667043330621845285),
    (-0.95, 0.1, 0.84015892690211748691),
    (-0.3, 25.5, 0.15779781751696585385),
    (0.7, 1234.5, 0.010081026482509937699),
]
ZEROS_REF = {
    -0.25: [2.006299671789450416, 5.1230627427463409424, 8.2579511756418948187],
    -0.75: [1.0585082594041192372, 4.284053812724698085, 7.4404544040048112921],
    -0.05: [2.3272297286660117688, 5.4416241915075745095, 8.5751730694143117589],
    -0.95: [0.45272453850994877283, 3.9245295744179102749, 7.1015716599875993034],
}
TENTH_ZERO = {-0.25: 30.240927652200765999, -0.75: 29.447127898447084211,
              -0.05: 30.556036241878290578, -0.95: 29.127076811146435604}


class TestGamma:
    def test_factorial_identity(self):
        assert gamma(1.0) == pytest.approx(1.0, rel=1e-15)
        assert gamma(5.0) == pytest.approx(24.0, rel=1e-14)

    def test_half(self):
        assert gamma(0.5) == pytest.approx(1.7724538509055159, rel=1e-14)

    def test_reflection_example(self):
        assert gamma(0.25) * gamma(0.75) == pytest.approx(4.442882938158366, rel=1e-13)

    @pytest.mark.parametrize("x", sorted(GAMMA_REF))
    def test_frozen(self, x):
        assert gamma(x) == pytest.approx(GAMMA_REF[x], rel=1e-13)

    def test_reflection_grid(self):
        for s in np.linspace(0.05, 0.95, 50):
            assert abs(gamma(s) * gamma(1 - s) * math.sin(math.pi * s) / math.pi - 1) <= 1e-12

    @given(st.floats(min_value=0.01, max_value=4.9))
    def test_duplication(self, x):
        lhs = gamma(x) * gamma(x + 0.5)
        rhs = 2.0 ** (1 - 2 * x) * math.sqrt(math.pi) * gamma(2 * x)
        assert lhs == pytest.approx(rhs, rel=1e-13)

    @given(st.floats(min_value=0.01, max_value=10.0))
    def test_against_mpmath(self, x):
        assert gamma(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-13)

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5, float("nan"), float("inf")])
    def test_domain(self, x):
        with pytest.raises(DomainError):
            gamma(x)


class TestBesselOrder:
    @pytest.mark.parametrize("nu", [-0.96, 1.96, 2.0, float("nan")])
    def test_rejects(self, nu):
        with pytest.raises(ValidationError):
            BesselOrder(nu)

    def test_accepts_bounds(self):
        assert BesselOrder(-0.95).nu == -0.95
        assert BesselOrder(1.95).nu == 1.95


class TestBesselJ:
    def test_minus_half_example(self):
        assert bessel_j(-0.5, math.pi) == pytest.approx(-0.45015815807855303, abs=1e-14)

    def test_plus_half_example(self):
        assert bessel_j(0.5, math.pi / 2) == pytest.approx(2 / math.pi, abs=1e-14)

    @pytest.mark.parametrize("nu,z,ref", J_REF)
    def test_frozen(self, nu, z, ref):
        assert abs(bessel_j(nu, z) - ref) <= 1e-12

    def test_half_integer_closed_forms(self):
        z = np.linspace(0.1, 100.0, 2001)
        amp = np.sqrt(2 / (np.pi * z))
        assert np.max(np.abs(bessel_j(-0.5, z) - amp * np.cos(z))) <= 1e-12
        assert np.max(np.abs(bessel_j(0.5, z) - amp * np.sin(z))) <= 1e-12

    @given(st.floats(min_value=-0.95, max_value=1.95),
           st.floats(min_value=1e-6, max_value=1e4))
    def test_against_mpmath(self, nu, z):
        assert abs(bessel_j(nu, z) - float(mpmath.besselj(nu, z))) <= 1e-12

    def test_regime_boundaries_continuous(self):
        # the evaluation switches algorithm at 2 and 20
        for nu in (-0.75, 0.25, 1.5):
            for edge in (2.0, 20.0):
                z = np.array([edge - 1e-9, edge, edge + 1e-9])
                ref = [float(mpmath.besselj(nu, float(v))) for v in z]
                assert np.max(np.abs(bessel_j(nu, z) - ref)) <= 1e-12

    @given(st.floats(min_value=0.05, max_value=0.95), st.floats(min_value=0.1, max_value=500.0))
    def test_recurrence(self, nu, z):
        lhs = bessel_j(nu - 1, z) + bessel_j(nu + 1, z)
        assert abs(lhs - 2 * nu / z * bessel_j(nu, z)) <= 5e-12 * max(1.0, 2 * nu / z)

    def test_values_at_zero(self):
        assert bessel_j(0.0, 0.0) == 1.0
        assert bessel_j(0.3, 0.0) == 0.0

    def test_array_shape(self):
        z = np.linspace(0.0, 50.0, 12).reshape(3, 4)
        out = bessel_j(0.5, z)
        assert out.shape == (3, 4)
        assert isinstance(bessel_j(0.5, 1.0), float)

    @pytest.mark.parametrize("nu,z", [(0.3, -1.0), (-0.3, 0.0), (0.3, float("nan")), (0.3, float("inf"))])
    def test_domain(self, nu, z):
        with pytest.raises(DomainError):
            bessel_j(nu, z)

    def test_derivative_matches_finite_difference(self):
        z = np.linspace(0.5, 40.0, 50)
        d = bessel_j_derivative(-0.25, z)
        fd = (bessel_j(-0.25, z + 1e-6) - bessel_j(-0.25, z - 1e-6)) / 2e-6
        assert np.max(np.abs(d - fd)) <= 1e-8


def _bisect(nu, a, b, tol=1e-13):
    fa = bessel_j(nu, a)
    while b - a > tol:
        m = 0.5 * (a + b)
        fm = bessel_j(nu, m)
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


class TestBesselZeros:
    def test_cosine_zeros(self):
        z = bessel_zeros(-0.5, 3)
        np.testing.assert_allclose(z.zeros, [np.pi / 2, 3 * np.pi / 2, 5 * np.pi / 2], rtol=0, atol=1e-13)

    def test_first_zero_by_bisection(self):
        ref = _bisect(-0.25, 0.5, 3.0)
        assert abs(bessel_zeros(-0.25, 1)[0] - ref) <= 1e-12

    def test_mcmahon_gap(self):
        z = bessel_zeros(-0.75, 2)
        a = _bisect(-0.75, 0.5, 2.0)
        b = _bisect(-0.75, 3.5, 5.0)
        assert abs(z[0] - a) <= 1e-12 and abs(z[1] - b) <= 1e-12
        assert math.pi - 0.5 < z[1] - z[0] < math.pi + 0.5

    @pytest.mark.parametrize("nu", sorted(ZEROS_REF))
    def test_frozen(self, nu):
        z = bessel_zeros(nu, 10)
        np.testing.assert_allclose(z.zeros[:3], ZEROS_REF[nu], rtol=0, atol=1e-12)
        assert abs(z[9] - TENTH_ZERO[nu]) <= 1e-12

    @pytest.mark.parametrize("nu", [-0.95, -0.75, -0.5, -0.25, -0.05, 0.1, 0.9])
    def test_residual_invariant(self, nu):
        z = bessel_zeros(nu, 2000).zeros
        res = np.abs(bessel_j(nu, z))
        scale = np.maximum(1.0, np.abs(bessel_j_derivative(nu, z)) * z)
        assert np.all(res <= 1e-12 * scale)
        assert np.all(res <= 1e-12)

    @pytest.mark.parametrize("nu", [-0.9, -0.25])
    def test_strictly_increasing_and_spacing(self, nu):
        z = bessel_zeros(nu, 3000).zeros
        gaps = np.diff(z)
        assert np.all(gaps > 0)
        assert np.all(np.abs(gaps[-100:] - np.pi) < 1e-3)
        # gaps approach pi monotonically in the tail
        dev = np.abs(gaps - np.pi)
        assert dev[-1] < dev[10]

    @pytest.mark.parametrize("s", [0.1, 0.25, 0.75, 0.9])
    def test_interlacing(self, s):
        a = bessel_zeros(-s, 51).zeros
        b = bessel_zeros(1 - s, 50).zeros
        assert np.all(a[:50] < b) and np.all(b < a[1:])

    def test_large_count_tracks_mcmahon(self):
        z = bessel_zeros(-0.25, 100000).zeros
        k = np.arange(1, z.size + 1)
        assert np.max(np.abs(z[1000:] - mcmahon_guess(-0.25, k[1000:]))) < 1e-9
        idx = np.array([0, 999, 49999, 99999])
        for i in idx:
            assert abs(float(mpmath.besselj(-0.25, z[i]))) <= 1e-12

    def test_no_zero_skipped_against_sign_scan(self):
        nu = -0.6
        z = bessel_zeros(nu, 40).zeros
        grid = np.linspace(1e-3, z[-1] + 0.5, 200001)
        v = bessel_j(nu, grid)
        changes = np.count_nonzero(np.signbit(v[:-1]) != np.signbit(v[1:]))
        assert changes == 40

    def test_table_is_read_only(self):
        z = bessel_zeros(-0.25, 5)
        assert len(z) == 5
        with pytest.raises(ValueError):
            z.zeros[0] = 1.0

    @pytest.mark.parametrize("count", [0, -3, 2.5])
    def test_bad_count(self, count):
        with pytest.raises(ValidationError):
            bessel_zeros(-0.25, count)

    def test_order_limit(self):
        with pytest.raises(ValidationError):
            bessel_zeros(1.5, 3)

    def test_thread_safe(self):
        with ThreadPoolExecutor(8) as pool:
            outs = list(pool.map(lambda nu: bessel_zeros(nu, 500).zeros, [-0.3] * 8))
        for o in outs[1:]:
            assert np.array_equal(o, outs[0])
