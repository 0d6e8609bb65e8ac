"""Closed-form layer: every value is checked against an independent route
(quadrature, algebraic identity, bisection or Monte Carlo)."""

import dataclasses
import math

import numpy as np
import pytest

from uplinksim import analytics
from uplinksim.config import default_config, validate
from uplinksim._sampling import outer_group_sums
from uplinksim.analytics import (UnsupportedRegimeError,
                                 contamination_dominance_threshold,
                                 geometry_integrals, load_factor_constants,
                                 mrc_interference_variance,
                                 mrc_mean_interference,
                                 mrc_mean_interference_general,
                                 shadowing_crossover, window_tail_fractions,
                                 zf_cont_mean, zf_intra_mean_bounds,
                                 zf_intra_mean_upper)

REF_K10 = {"M": 128, "K": 10}


class TestGeometryIntegrals:
    def test_cell_integral_value(self):
        cfg = default_config()
        dc = validate(cfg)
        g = geometry_integrals(cfg)
        # adaptive-quadrature oracle value for the reference geometry
        assert dc.lam * g.p_i == pytest.approx(8.2779137e-05, rel=1e-6)

    def test_outside_integral_value(self):
        cfg = default_config()
        dc = validate(cfg)
        g = geometry_integrals(cfg)
        assert dc.lam * g.p_o == pytest.approx(2 * 1e-3 * 0.2**3.76 / 1.76,
                                               rel=1e-12)
        assert dc.lam * g.p_o == pytest.approx(2.6754086e-06, rel=1e-6)
        assert dc.lam * g.p_o2 == pytest.approx(2.0083365e-12, rel=1e-6)

    @pytest.mark.parametrize("gamma,l", [
        (2.5, 0.1), (3.0, 0.2), (3.76, 0.2), (4.0, 0.5), (5.0, 0.3),
    ])
    def test_closed_matches_quadrature(self, gamma, l):
        cfg = default_config(gamma=gamma, d0=500.0 * l)
        closed = geometry_integrals(cfg)
        quad = geometry_integrals(cfg, method="quadrature")
        for name in ("p_i", "p_o", "p_o2"):
            assert getattr(quad, name) == pytest.approx(
                getattr(closed, name), rel=1e-9)

    def test_steep_exponent_kills_outside_mass(self):
        g = geometry_integrals(default_config(gamma=60.0))
        assert g.p_o < 1e-40 * g.p_i

    def test_divergent_exponent_rejected(self):
        cfg = dataclasses.replace(default_config(), gamma=2.0)
        with pytest.raises(ValueError):
            geometry_integrals(cfg)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            geometry_integrals(default_config(), method="mc")


class TestMrcMeans:
    def test_general_equals_specialized(self):
        for sigma in (0.0, 3.0, 8.0):
            cfg = default_config(sigma_dB=sigma, **REF_K10)
            closed = mrc_mean_interference(cfg)
            general = mrc_mean_interference_general(cfg)
            for name in ("intra", "inter", "cont"):
                assert getattr(general, name) == pytest.approx(
                    getattr(closed, name), rel=1e-12)

    def test_general_with_quadrature_integrals(self):
        cfg = default_config(sigma_dB=3.0, **REF_K10)
        quad = geometry_integrals(cfg, method="quadrature")
        general = mrc_mean_interference_general(cfg, integrals=quad)
        closed = mrc_mean_interference(cfg)
        for name in ("intra", "inter", "cont"):
            assert getattr(general, name) == pytest.approx(
                getattr(closed, name), rel=1e-9)

    def test_single_pilot_reduction(self):
        # K = 1 removes the intra-pairing term entirely
        cfg = default_config(K=1, M=2, sigma_dB=0.0)
        dc = validate(cfg)
        g = geometry_integrals(cfg)
        expected = dc.lam**2 / cfg.M * g.p_i * g.p_o
        assert mrc_mean_interference(cfg).intra == pytest.approx(
            expected, rel=1e-12)

    def test_inter_to_cont_ratio_moderate_shadowing(self):
        means = mrc_mean_interference(default_config(sigma_dB=3.0,
                                                     **REF_K10))
        assert means.inter / means.cont == pytest.approx(5.5701, rel=1e-4)
        assert 5.5 <= means.inter / means.cont <= 5.7

    def test_inter_to_cont_ratio_strong_shadowing(self):
        means = mrc_mean_interference(default_config(sigma_dB=8.0,
                                                     **REF_K10))
        assert means.inter / means.cont == pytest.approx(0.30906, rel=1e-4)
        assert 0.30 <= means.inter / means.cont <= 0.32

    def test_large_antenna_limits(self):
        cfg = default_config(sigma_dB=8.0, K=10, M=10**9)
        means = mrc_mean_interference(cfg)
        dc = validate(cfg)
        persistent = dc.mu**2 * dc.l**(2 * cfg.gamma) * cfg.A0**2 / (
            cfg.gamma - 1)
        assert means.cont == pytest.approx(persistent, rel=1e-6)
        small = mrc_mean_interference(default_config(sigma_dB=8.0, K=10))
        assert means.intra < 1e-6 * small.intra
        assert means.inter < 1e-6 * small.inter

    def test_a0_homogeneity(self):
        base = mrc_mean_interference(default_config(sigma_dB=3.0))
        scaled = mrc_mean_interference(default_config(sigma_dB=3.0,
                                                      A0=3e-3))
        for name in ("intra", "inter", "cont"):
            assert getattr(scaled, name) == pytest.approx(
                9.0 * getattr(base, name), rel=1e-12)


class TestMrcVariances:
    def test_ratio_strong_shadowing(self):
        var = mrc_interference_variance(default_config(sigma_dB=8.0,
                                                       **REF_K10))
        ratio = var.inter / var.cont
        assert ratio == pytest.approx(1.02564e-4, rel=1e-4)
        assert 0.5e-4 <= ratio <= 2.0e-4

    def test_asymptotic_shadowing_limit(self):
        # var[inter]/var[cont] -> 1/(M-1)^2
        var = mrc_interference_variance(default_config(sigma_dB=40.0,
                                                       **REF_K10))
        assert var.inter / var.cont == pytest.approx(1.0 / 127**2, rel=1e-6)

    def test_a0_quartic_homogeneity(self):
        base = mrc_interference_variance(default_config(sigma_dB=2.0))
        scaled = mrc_interference_variance(default_config(sigma_dB=2.0,
                                                          A0=2e-3))
        for name in ("inter", "cont"):
            assert getattr(scaled, name) == pytest.approx(
                16.0 * getattr(base, name), rel=1e-12)

    def test_positive(self):
        for sigma in (0.0, 2.0, 5.0, 8.0):
            var = mrc_interference_variance(default_config(sigma_dB=sigma))
            assert var.inter > 0
            assert var.cont > 0


class TestZfBounds:
    def test_tightness_no_shadowing(self):
        bounds = zf_intra_mean_bounds(default_config(sigma_dB=0.0,
                                                     **REF_K10))
        assert bounds.lower <= bounds.upper
        assert bounds.upper / bounds.lower == pytest.approx(1.84651,
                                                            rel=1e-4)

    def test_cont_to_lower_ratio(self):
        cfg = default_config(sigma_dB=0.0, **REF_K10)
        bounds = zf_intra_mean_bounds(cfg)
        assert zf_cont_mean(cfg) / bounds.lower == pytest.approx(0.191234,
                                                                 rel=1e-4)

    def test_cont_to_upper_ratio_strong_shadowing(self):
        cfg = default_config(sigma_dB=8.0, **REF_K10)
        ratio = zf_cont_mean(cfg) / zf_intra_mean_upper(cfg)
        assert ratio == pytest.approx(3.00635, rel=1e-4)
        assert 2.8 <= ratio <= 3.4

    def test_lower_bound_refused_with_shadowing(self):
        with pytest.raises(UnsupportedRegimeError):
            zf_intra_mean_bounds(default_config(sigma_dB=3.0))

    def test_upper_is_scaled_mrc_inter(self):
        cfg = default_config(sigma_dB=5.0, **REF_K10)
        means = mrc_mean_interference(cfg)
        assert zf_intra_mean_upper(cfg) == pytest.approx(
            128 / 118 * means.inter, rel=1e-12)

    def test_bounds_sandwich_monte_carlo(self):
        # spatial MC estimate of the mean ZF intra component at sigma=0
        from uplinksim.runner import run_component_trials
        cfg = default_config(sigma_dB=0.0, n_spatial_trials=20_000,
                             seed=101, **REF_K10)
        trials = run_component_trials(cfg)
        mc = trials.zf["intra"].mean()
        bounds = zf_intra_mean_bounds(cfg)
        assert bounds.lower <= mc <= bounds.upper


class TestDominanceThreshold:
    def test_reference_value(self):
        threshold = contamination_dominance_threshold(
            default_config(sigma_dB=8.0, **REF_K10))
        assert threshold == pytest.approx(122.17, rel=1e-3)
        assert 110 <= threshold <= 130

    def test_shadowing_scaling(self):
        t0 = contamination_dominance_threshold(default_config(sigma_dB=0.0))
        t8 = contamination_dominance_threshold(default_config(sigma_dB=8.0))
        mu8 = validate(default_config(sigma_dB=8.0)).mu
        assert t0 / t8 == pytest.approx(mu8, rel=1e-12)

    def test_against_exact_root_in_asymptotic_regime(self):
        # bisection oracle on the exact mean ratio, in a regime where the
        # approximation is valid (small l, large K)
        gamma, l, K = 5.0, 0.1, 100

        def cont_over_intra(m):
            cfg = default_config(R=500.0, d0=500.0 * l, gamma=gamma,
                                 sigma_dB=0.0, M=int(m), K=K)
            means = mrc_mean_interference(cfg)
            return means.cont / means.intra

        lo, hi = K + 1, 10**12
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if cont_over_intra(mid) < 1.0:
                lo = mid
            else:
                hi = mid
        approx = contamination_dominance_threshold(
            default_config(R=500.0, d0=500.0 * l, gamma=gamma,
                           sigma_dB=0.0))
        assert hi / K == pytest.approx(approx, rel=0.05)


class TestShadowingCrossover:
    def test_reference_crossing(self):
        sigma = shadowing_crossover(default_config())  # M=128, K=30
        assert sigma is not None
        assert 7.6 <= sigma <= 8.2
        assert sigma == pytest.approx(7.889, abs=0.02)

    def test_more_pilots_delay_crossing(self):
        base = shadowing_crossover(default_config())
        doubled = shadowing_crossover(default_config(K=60))
        assert doubled > base

    def test_more_antennas_advance_crossing(self):
        base = shadowing_crossover(default_config())
        bigger = shadowing_crossover(default_config(M=512))
        assert bigger < base

    def test_no_crossing_reported_none(self):
        # tiny close-in ratio pushes the crossing beyond the search range
        assert shadowing_crossover(default_config(d0=5.0)) is None

    def test_bisection_tolerance(self):
        a = shadowing_crossover(default_config(), tol_db=0.001)
        b = shadowing_crossover(default_config(), tol_db=0.01)
        assert abs(a - b) < 0.02


@pytest.fixture(scope="module")
def constants():
    cfg = default_config(trunc_factor=11.0, seed=5)
    return load_factor_constants(cfg, target_rel_stderr=0.02)


class TestLoadFactorConstants:
    def test_precision_target(self, constants):
        assert constants.rel_stderr_b1 <= 0.02
        assert constants.rel_stderr_b2 <= 0.02
        assert constants.b1 > 0
        assert constants.b2 > 0

    def test_limit_predictions_scale(self, constants):
        # kappa/(1-kappa) ~ kappa for small loads, exactly 1 at kappa = 1/2
        assert constants.zf_inter_limit(0.5) == pytest.approx(constants.b2)
        tiny = constants.zf_intra_limit(1e-4)
        assert tiny == pytest.approx(1e-4 * constants.b1, rel=1e-3)


class TestFactorialMomentIdentity:
    def test_pairwise_sum_matches_squared_mean(self):
        # E[sum_{x != y} beta_x beta_y] = (E[sum beta_x])^2 for the PPP
        cfg = default_config(trunc_factor=6.0, sigma_dB=3.0, seed=9)
        rng = np.random.default_rng(cfg.seed)
        _, s1, s2 = outer_group_sums(cfg, 120_000, rng)
        pairwise = s1**2 - s2
        stderr = pairwise.std(ddof=1) / math.sqrt(len(pairwise))
        assert abs(pairwise.mean() - s1.mean()**2) <= 3 * stderr


class TestWindowTails:
    def test_reference_window(self):
        tails = window_tail_fractions(default_config())
        assert tails.p_o == pytest.approx(51**(-1.76), rel=1e-12)
        assert tails.p_o == pytest.approx(9.878e-4, rel=1e-3)
        assert tails.p_o2 == pytest.approx(3.7516e-10, rel=1e-3)

    def test_degenerate_exponent_warns(self):
        cfg = default_config(gamma=2.05)
        with pytest.warns(UserWarning):
            tails = window_tail_fractions(cfg)
        assert tails.p_o > 0.5

    def test_report_assembly(self):
        moments = analytics.analytic_moments(default_config(sigma_dB=0.0))
        assert moments.zf_intra_lower is not None
        with_shadow = analytics.analytic_moments(
            default_config(sigma_dB=8.0))
        assert with_shadow.zf_intra_lower is None
        assert with_shadow.zf_intra_upper > 0
