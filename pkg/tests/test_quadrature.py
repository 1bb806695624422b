"""Extended-variable eigenpairs as a quadrature rule for lambda**(-s)."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracdiag.exceptions import ValidationError
from fracdiag.quadrature import (
    QuadratureRule,
    apply_rule,
    build_rule,
    choose_parameters,
    exact_integral,
    f_lambda,
    make_order,
    reference_q_infinity,
    tail_estimate,
    tanh_closed_form,
)
from fracdiag.special import bessel_j, bessel_zeros, gamma

# 40-digit mpmath values, frozen
D_REF = {0.25: 0.47798879748612499536, 0.75: 2.0920992401062032979}
ETA1_QUARTER = 2.006299671789450416
TANH2_HALF = 0.48201379003790844197

TABLE_Y = {
    0.25: [0.69315, 1.03972, 1.38629, 1.73287, 2.07944],
    0.75: [2.07944, 3.11916, 4.15888, 5.19860, 6.23832],
}
TABLE_K = {0.25: [2, 8, 22, 55, 133], 0.75: [8, 24, 66, 166, 399]}
TABLE_H = [1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64]

s_values = st.sampled_from([0.05, 0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.9, 0.95])


class TestMakeOrder:
    def test_half(self):
        o = make_order(0.5)
        assert o.d_s == 1.0 and o.alpha == 0.0 and o.is_half

    @pytest.mark.parametrize("s", sorted(D_REF))
    def test_d_s(self, s):
        assert make_order(s).d_s == pytest.approx(D_REF[s], rel=1e-13)
        assert make_order(s).d_s == pytest.approx(
            2 ** (1 - 2 * s) * gamma(1 - s) / gamma(s), rel=1e-15)

    @given(st.floats(min_value=0.05, max_value=0.95))
    def test_invariants(self, s):
        o = make_order(s)
        assert -1 < o.alpha < 1 and o.d_s > 0

    @pytest.mark.parametrize("s", [0.0, 0.04, 0.96, 1.0, float("nan"), "0.5", True])
    def test_rejects(self, s):
        with pytest.raises(ValidationError):
            make_order(s)


def _independent_terms(s, Y, K):
    """Both sides of the bridge identity straight from their formulas."""
    eta = bessel_zeros(-s, K).zeros
    j1 = bessel_j(1 - s, eta)
    mu = (eta / Y) ** 2
    omega = 2.0 / (Y * eta * j1**2)
    psi0 = 2 ** (s + 0.5) / (mu ** (s / 2) * Y * np.abs(j1) * gamma(1 - s))
    d_s = 2 ** (1 - 2 * s) * gamma(1 - s) / gamma(s)
    lhs = d_s * psi0**2
    rhs = 2 * math.sin(math.pi * s) / math.pi * (eta / Y) ** (1 - 2 * s) * omega
    return eta, omega, psi0, lhs, rhs


class TestBuildRule:
    def test_half_example(self):
        r = build_rule(0.5, math.pi, 2)
        np.testing.assert_allclose(r.nodes, [0.5, 1.5], rtol=1e-15)
        np.testing.assert_allclose(r.weights, [1.0, 1.0], rtol=1e-15)
        np.testing.assert_allclose(r.trace_values, [math.sqrt(2 / math.pi)] * 2, rtol=1e-15)

    def test_table_row(self):
        r = build_rule(0.25, 1.38629, 22)
        assert r.K == 22 and r.Y == 1.38629
        assert r.nodes[0] == pytest.approx(ETA1_QUARTER / 1.38629, rel=1e-13)
        np.testing.assert_allclose(r.nodes, bessel_zeros(-0.25, 22).zeros / 1.38629, rtol=1e-15)

    def test_bridge_identity_independent(self):
        _, omega, psi0, lhs, rhs = _independent_terms(0.75, 3.0, 10)
        assert np.max(np.abs(lhs - rhs) / lhs) <= 1e-10
        r = build_rule(0.75, 3.0, 10)
        np.testing.assert_allclose(r.weights, omega, rtol=1e-12)
        np.testing.assert_allclose(r.trace_values, psi0, rtol=1e-12)

    @pytest.mark.parametrize("s", np.linspace(0.05, 0.95, 10))
    def test_bridge_identity_grid(self, s):
        r = build_rule(s, 2.5, 500)
        lhs = r.order.d_s * r.trace_values**2
        rhs = r.order.balakrishnan_factor * r.nodes**r.order.alpha * r.weights
        assert np.max(np.abs(lhs - rhs) / lhs) <= 1e-10

    @given(s_values, st.floats(min_value=0.1, max_value=50.0), st.integers(1, 300))
    def test_positivity_and_order(self, s, Y, K):
        r = build_rule(s, Y, K)
        assert np.all(r.nodes > 0) and np.all(np.diff(r.nodes) > 0)
        assert np.all(r.weights > 0) and np.all(r.trace_values > 0)
        np.testing.assert_allclose(r.mu, r.nodes**2)

    def test_large_K_weights_finite(self):
        r = build_rule(0.95, 1.0, 100000)
        assert np.all(np.isfinite(r.weights)) and np.all(r.weights > 0)
        # omega_k -> pi / Y for large k
        assert r.weights[-1] == pytest.approx(math.pi, rel=1e-3)

    def test_immutable(self):
        r = build_rule(0.25, 1.0, 4)
        with pytest.raises(ValueError):
            r.nodes[0] = 0.0
        with pytest.raises(AttributeError):
            r.K = 5

    def test_truncate(self):
        r = build_rule(0.25, 1.0, 8)
        t = r.truncate(3)
        assert t.K == 3 and np.array_equal(t.nodes, r.nodes[:3])
        assert r.truncate(0).K == 0
        with pytest.raises(ValidationError):
            r.truncate(9)

    @pytest.mark.parametrize("Y,K", [(0.0, 3), (-1.0, 3), (1.0, 0), (1.0, 2.5)])
    def test_rejects(self, Y, K):
        with pytest.raises(ValidationError):
            build_rule(0.25, Y, K)

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            QuadratureRule(make_order(0.5), 1.0, 2, [1.0], [1.0, 1.0], [1.0, 1.0])

    def test_metadata(self):
        meta = build_rule(0.75, 2.0, 5).metadata("floor")
        assert meta == {"s": 0.75, "Y": 2.0, "K": 5, "rounding": "floor"}


class TestIntegrand:
    def test_examples(self):
        assert f_lambda(0.5, 1.0, 0.0) == pytest.approx(2 / math.pi, rel=1e-15)
        assert f_lambda(0.25, 4.0, 0.0) == pytest.approx(0.1125395395196383, rel=1e-14)

    @given(s_values, st.floats(min_value=1e-3, max_value=1e6), st.floats(min_value=0, max_value=1e3))
    def test_even_positive(self, s, lam, t):
        a, b = f_lambda(s, lam, t), f_lambda(s, lam, -t)
        assert a == b and a > 0

    @given(s_values, st.floats(min_value=1e-3, max_value=1e6))
    def test_decreasing(self, s, lam):
        t = np.linspace(0, 100, 101)
        assert np.all(np.diff(f_lambda(s, lam, t)) < 0)

    def test_exact_integral(self):
        assert exact_integral(0.5, 9.0) == pytest.approx(1 / 3, rel=1e-15)
        assert exact_integral(0.3, 1.0) == 1.0
        assert exact_integral(0.25, 16.0) == pytest.approx(0.5, rel=1e-15)
        with pytest.raises(ValidationError):
            exact_integral(0.5, 0.0)


class TestApplyRule:
    def test_half_large_Y(self):
        r = build_rule(0.5, 40.0, 4000)
        q = apply_rule(r, 1.0)
        # Q^K plus its tail equals the tanh closed form
        assert abs(q + tail_estimate(r.order, 40.0, 4000, 1.0) - tanh_closed_form(1.0, 40.0)) <= 1e-10
        assert q < tanh_closed_form(1.0, 40.0)

    def test_empty_sum(self):
        assert apply_rule(build_rule(0.5, 1.0, 3).truncate(0), 2.0) == 0.0

    def test_three_quarters_bound(self):
        q = apply_rule(build_rule(0.75, 6.0, 400), 2.0)
        bound = math.exp(-math.sqrt(2) * 6) + (6 / 400) ** 1.5
        assert abs(q - 2 ** -0.75) <= bound

    @given(s_values, st.floats(min_value=0.5, max_value=1e4), st.integers(1, 199))
    def test_monotone_in_K(self, s, lam, K):
        r = build_rule(s, 3.0, 200)
        assert apply_rule(r.truncate(K), lam) <= apply_rule(r.truncate(K + 1), lam)

    def test_tanh_examples(self):
        assert tanh_closed_form(1.0, 50.0) == pytest.approx(1.0, abs=1e-15)
        assert tanh_closed_form(4.0, 1.0) == pytest.approx(TANH2_HALF, rel=1e-15)

    def test_million_nodes_against_tanh(self):
        Y, K = 1.0, 10**6
        q = apply_rule(build_rule(0.5, Y, K), 4.0)
        assert abs(q - tanh_closed_form(4.0, Y)) <= 1e-5
        assert abs(q - tanh_closed_form(4.0, Y)) <= 2 * Y / K

    @pytest.mark.parametrize("s", [0.25, 0.5, 0.75])
    def test_error_split(self, s):
        # |lambda^-s - Q| <= C (exp(-0.9 sqrt(lam) Y) + (Y/K)^(2s)) with C <= 10
        worst = 0.0
        for lam in (2 * math.pi**2, 10.0, 100.0, 1e4):
            for Y in (0.5, 1.0, 2.0, 4.0):
                full = build_rule(s, Y, 4000)
                for K in (10, 100, 1000, 4000):
                    err = abs(exact_integral(s, lam) - apply_rule(full.truncate(K), lam))
                    bound = math.exp(-0.9 * math.sqrt(lam) * Y) + (Y / K) ** (2 * s)
                    worst = max(worst, err / bound)
        assert worst <= 10.0


class TestTailAndReference:
    @pytest.mark.parametrize("s", [0.25, 0.75])
    def test_tail_estimate(self, s):
        Y, lam = 3.0, 5.0
        full = build_rule(s, Y, 200000)
        ref = apply_rule(full, lam) + tail_estimate(full.order, Y, 200000, lam)
        for K in (1000, 10000):
            est = apply_rule(full.truncate(K), lam) + tail_estimate(full.order, Y, K, lam)
            assert abs(est - ref) <= 1e-4 * (Y / K) ** (2 * s)

    def test_tail_needs_large_K(self):
        with pytest.raises(ValidationError):
            tail_estimate(make_order(0.5), 10.0, 1, 100.0)

    def test_reference_half_is_tanh(self):
        assert reference_q_infinity(0.5, 2.0, 3.0) == tanh_closed_form(3.0, 2.0)

    def test_reference_converges_to_exact(self):
        # Q^inf -> lambda^-s as Y grows
        assert abs(reference_q_infinity(0.25, 20.0, 1.0) - 1.0) <= 1e-12


class TestChooseParameters:
    def test_quarter_sixteenth(self):
        Y, K = choose_parameters(1 / 16, make_order(0.25))
        assert Y == pytest.approx(1.3862943611198906, rel=1e-15)
        assert K == 23
        assert choose_parameters(1 / 16, make_order(0.25), "floor") == (Y, 22)

    def test_three_quarter_sixteenth(self):
        Y, K = choose_parameters(1 / 16, make_order(0.75), "floor")
        assert round(Y, 5) == 4.15888 and K == 66

    def test_half(self):
        Y, K = choose_parameters(0.5, make_order(0.5))
        assert Y == pytest.approx(math.log(2), rel=1e-15) and K == 2

    @pytest.mark.parametrize("s", [0.25, 0.75])
    def test_table_columns(self, s):
        for h, Y_ref, K_ref in zip(TABLE_H, TABLE_Y[s], TABLE_K[s]):
            Y, K = choose_parameters(h, make_order(s), "floor")
            assert round(Y, 5) == Y_ref and K == K_ref

    def test_clamps_K(self):
        assert choose_parameters(0.5, make_order(0.25), "floor")[1] == 1

    @pytest.mark.parametrize("h", [1.0, 2.0, 0.0, -0.5])
    def test_rejects(self, h):
        with pytest.raises(ValidationError):
            choose_parameters(h, make_order(0.5))

    def test_bad_rounding(self):
        with pytest.raises(ValidationError):
            choose_parameters(0.1, make_order(0.5), "round")
