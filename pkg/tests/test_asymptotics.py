"""Standard errors, intervals, and empirical checks of the normal limits."""

import math

import numpy as np
import pytest
from scipy import stats

from prevbias import (
    BoundaryEstimate,
    EmptyStratum,
    InvalidSpec,
    Mechanism,
    NegativeVarianceCombination,
    RngStream,
    TestingOutcome as Outcome,
    VarianceEstimates,
    ci_active_info,
    ci_logit_prevalence,
    draw_outcome,
    mechanism_plugin_inputs,
    normal_quantile,
    p0_hat_mar,
    p_hat,
    plugin_variances,
    sigma_it,
    sigma_p,
    sigma_p0,
)

from conftest import MAR_ORACLE, PI_MAR, base_spec

MAR_V = tuple(float(MAR_ORACLE[k]) for k in ("v1", "v2", "v3", "v4"))
MAR_P = float(MAR_ORACLE["p"])


class TestQuantile:
    def test_two_sided_critical_values(self):
        assert normal_quantile(0.05) == pytest.approx(1.959963985, abs=1e-8)
        assert normal_quantile(1.0) == pytest.approx(0.0, abs=1e-12)

    def test_alpha_domain(self):
        with pytest.raises(InvalidSpec):
            normal_quantile(0.0)


class TestPluginVariances:
    def test_large_population_plugin_is_consistent(self):
        spec = base_spec(PI_MAR, n=10**6)
        out = draw_outcome(spec, RngStream(2024, 0))
        pi_hat, rho_hat = mechanism_plugin_inputs(out, Mechanism.mar(("0.8", "0.2")))
        v = plugin_variances(out, pi_hat, rho_hat)
        assert v.v1 == pytest.approx(MAR_V[0], rel=0.05)
        assert v.v2 == pytest.approx(MAR_V[1], rel=0.05)
        assert v.v3 == pytest.approx(MAR_V[2], rel=0.05)
        assert v.v4 == pytest.approx(MAR_V[3], rel=0.05)
        assert not v.degenerate

    def test_degenerate_class_rates_flagged_with_zero_variances(self):
        out = Outcome(counts=[[5, 0], [7, 0]], n=100)
        v = plugin_variances(out, [0.1, 0.1], [0.5, 0.5])
        assert v.degenerate
        assert v.as_tuple() == (0.0, 0.0, 0.0, 0.0)

    def test_mixed_boundary_rates_keep_share_noise(self):
        # 0/1 class rates zero the within-class noise terms, but the
        # between-class spread still feeds the share-noise component
        out = Outcome(counts=[[5, 0], [0, 5]], n=100)
        v = plugin_variances(out, [0.1, 0.1], [0.5, 0.5])
        assert v.degenerate
        assert (v.v1, v.v3, v.v4) == (0.0, 0.0, 0.0)
        assert v.v2 > 0.0

    def test_census_class_has_zero_contribution(self):
        out = Outcome(counts=[[40, 10]], n=50)
        v = plugin_variances(out, [1.0], [1.0])
        assert v.as_tuple() == (0.0, 0.0, 0.0, 0.0)

    def test_empty_weighted_class_rejected(self):
        out = Outcome(counts=[[5, 5], [0, 0]], n=100)
        with pytest.raises(EmptyStratum):
            plugin_variances(out, [0.1, 0.1], [0.8, 0.2])


class TestLogitInterval:
    def test_reference_interval(self):
        ci = ci_logit_prevalence(0.5, 0.05, 0.05)
        assert ci.lo == pytest.approx(0.403237, abs=1e-4)
        assert ci.hi == pytest.approx(0.596763, abs=1e-4)
        # symmetric about 1/2 because the log-odds map is antisymmetric there
        assert ci.lo + ci.hi == pytest.approx(1.0, abs=1e-12)

    def test_zero_sigma_is_a_point(self):
        ci = ci_logit_prevalence(0.37, 0.0, 0.05)
        assert (ci.lo, ci.hi) == (0.37, 0.37)

    def test_alpha_one_is_a_point(self):
        ci = ci_logit_prevalence(0.37, 0.1, 1.0)
        assert (ci.lo, ci.hi) == (0.37, 0.37)

    def test_boundary_estimates_rejected(self):
        for est in (0.0, 1.0):
            with pytest.raises(BoundaryEstimate):
                ci_logit_prevalence(est, 0.1, 0.05)

    def test_endpoints_stay_inside_unit_interval_fuzzed(self):
        rng = np.random.default_rng(55)
        for _ in range(300):
            est = float(rng.uniform(1e-6, 1 - 1e-6))
            sigma = float(rng.exponential(0.2))
            ci = ci_logit_prevalence(est, sigma, 0.05)
            assert 0.0 < ci.lo <= est <= ci.hi < 1.0


class TestInfoInterval:
    def test_reference_interval(self):
        ci = ci_active_info(0.99, 0.1, 0.05)
        assert ci.lo == pytest.approx(0.794004, abs=1e-5)
        assert ci.hi == pytest.approx(1.185996, abs=1e-5)

    def test_zero_sigma_point(self):
        ci = ci_active_info(0.5, 0.0, 0.05)
        assert (ci.lo, ci.hi) == (0.5, 0.5)

    def test_alpha_one_point(self):
        ci = ci_active_info(0.5, 0.3, 1.0)
        assert (ci.lo, ci.hi) == (0.5, 0.5)


class TestSigmaIT:
    def test_reference_value(self):
        sigma = sigma_it(MAR_V, MAR_P, 0.2, 10**6)
        assert sigma == pytest.approx(0.0029377728, abs=1e-9)

    def test_conditional_is_strictly_smaller(self):
        unconditional = sigma_it(MAR_V, MAR_P, 0.2, 10**6)
        conditional = sigma_it(MAR_V, MAR_P, 0.2, 10**6, conditional=True)
        assert conditional == pytest.approx(0.0027851800, abs=1e-9)
        assert conditional < unconditional

    def test_zero_components(self):
        assert sigma_it((0.0, 0.0, 0.0, 0.0), 0.5, 0.5, 100) == 0.0

    def test_conditional_never_larger_fuzzed(self):
        rng = np.random.default_rng(66)
        for _ in range(200):
            v1, v3 = rng.uniform(0.0, 1.0, size=2)
            v2 = float(rng.uniform(0.0, 1.0))
            v4 = float(rng.uniform(-1.0, 1.0)) * math.sqrt(v1 * v3)
            p, pb = rng.uniform(0.05, 0.95, size=2)
            try:
                s_u = sigma_it((v1, v2, v3, v4), p, pb, 1000)
                s_c = sigma_it((v1, v2, v3, v4), p, pb, 1000, conditional=True)
            except NegativeVarianceCombination:
                continue
            assert s_c <= s_u + 1e-15

    def test_tiny_negative_bracket_clipped(self):
        v4 = 1e-10 * 0.25 / 2.0
        assert sigma_it((0.0, 0.0, 0.0, v4), 0.5, 0.5, 100) == 0.0

    def test_large_negative_bracket_raises(self):
        with pytest.raises(NegativeVarianceCombination):
            sigma_it((0.0, 0.0, 0.0, 1.0), 0.5, 0.5, 100)

    def test_domain_checks(self):
        with pytest.raises(InvalidSpec):
            sigma_it(MAR_V, 0.0, 0.2, 100)
        with pytest.raises(InvalidSpec):
            sigma_it(MAR_V, 0.5, 1.0, 100)


class TestMarginalSigmas:
    def test_values(self):
        v = VarianceEstimates(0.1, 0.2, 0.3, 0.05)
        assert sigma_p(v, 10_000) == pytest.approx(math.sqrt(0.3 / 10_000), abs=1e-15)
        assert sigma_p0(v, 10_000) == pytest.approx(math.sqrt(0.3 / 10_000), abs=1e-15)


def _mar_replicates(n, reps, seed):
    spec = base_spec(PI_MAR, n=n)
    shares = np.array([0.8, 0.2])
    p_hats = np.empty(reps)
    p0_hats = np.empty(reps)
    for r in range(reps):
        out = draw_outcome(spec, RngStream(seed, r))
        p_hats[r] = p_hat(out)
        p0_hats[r] = p0_hat_mar(out, shares)
    return p_hats, p0_hats


class TestEmpiricalLimits:
    def test_scaled_errors_match_the_closed_form_variances(self):
        n, reps = 100_000, 500
        p_hats, p0_hats = _mar_replicates(n, reps, seed=515)
        v1, v2, v3, v4 = MAR_V
        assert n * p_hats.var(ddof=1) == pytest.approx(v1 + v2, rel=0.15)
        assert n * p0_hats.var(ddof=1) == pytest.approx(v3, rel=0.15)
        bracket = (v1 + v2) / MAR_P**2 + v3 / 0.04 - 2 * v4 / (MAR_P * 0.2)
        i_t = np.log(p_hats / p0_hats)
        assert n * i_t.var(ddof=1) == pytest.approx(bracket, rel=0.15)

    def test_standardized_errors_pass_normality_in_most_reruns(self):
        # Anderson-Darling on sqrt(N) (p0_hat - p0) / sqrt(V3), 20 reruns,
        # 1% critical value; at most one rejection expected
        n, reps = 100_000, 500
        scale = math.sqrt(float(MAR_ORACLE["v3"]) / n)
        rejections = 0
        for seed in range(20):
            _, p0_hats = _mar_replicates(n, reps, seed=7000 + seed)
            z = (p0_hats - 0.2) / scale
            result = stats.anderson(z, dist="norm")
            critical_1pct = result.critical_values[list(result.significance_level).index(1.0)]
            if result.statistic > critical_1pct:
                rejections += 1
        assert rejections <= 1
