"""Small-scale fading oracle: training statistics, receivers and the
agreement between explicit channel draws and the fading-averaged forms."""

import numpy as np
import pytest

from uplinksim.config import default_config
from uplinksim.fading import (FlatScope, draw_channels, estimate_channels,
                              measure_components, mrc_receiver, zf_receiver)
from uplinksim.kernel import MRC, ZF, mrc_components, zf_components
from uplinksim.propagation import LargeScaleState
from uplinksim.runner import run_fading_validation


@pytest.fixture(scope="module")
def small_state():
    return LargeScaleState.from_betas(
        [2.0e-4, 5.0e-5, 1.2e-4],
        [[3e-5, 1e-5], [8e-6], [2e-5, 4e-6, 1.5e-5]])


CFG3 = default_config(K=3, M=16)


class TestTraining:
    def test_perfect_estimate_when_uncontaminated(self):
        cfg = default_config(K=1, M=8)
        state = LargeScaleState.from_betas([3e-4], [[]])
        scope = FlatScope.from_state(state)
        g = draw_channels(scope, 50, cfg.M, np.random.default_rng(0))
        g_hat0, g_err = estimate_channels(state, g, cfg)
        np.testing.assert_allclose(g_hat0[..., 0], g[..., 0], rtol=1e-12)
        np.testing.assert_allclose(g_err, 0.0, atol=1e-18)

    def test_estimate_variance(self, small_state):
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 20_000, CFG3.M, np.random.default_rng(1))
        g_hat0, _ = estimate_channels(small_state, g, CFG3)
        for k in range(3):
            per_entry = np.mean(np.abs(g_hat0[..., k]) ** 2)
            expected = small_state.intra_c[k] * small_state.intra_beta[k]
            assert per_entry == pytest.approx(expected, rel=0.02)

    def test_estimate_error_uncorrelated(self, small_state):
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 20_000, CFG3.M, np.random.default_rng(2))
        g_hat0, g_err = estimate_channels(small_state, g, CFG3)
        # probe pilot 1 and its own estimation error
        prod = (g_hat0[..., 0] * g_err[..., 0].conj()).ravel()
        stderr = prod.std(ddof=1) / np.sqrt(prod.size)
        assert abs(prod.mean()) <= 3 * stderr

    def test_error_variance_split(self, small_state):
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 20_000, CFG3.M, np.random.default_rng(3))
        _, g_err = estimate_channels(small_state, g, CFG3)
        beta = scope.beta
        for y in range(scope.n_ues):
            var_err = np.mean(np.abs(g_err[..., y]) ** 2)
            expected = (1 - scope.c[y]) * beta[y]
            assert var_err == pytest.approx(expected, rel=0.05, abs=1e-9)

    def test_reuse_estimates_proportional(self, small_state):
        # estimated channel of a reuse UE is an exact scalar multiple of
        # the group's intra-cell estimate
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 10, CFG3.M, np.random.default_rng(4))
        g_hat0, g_err = estimate_channels(small_state, g, CFG3)
        g_hat_all = g - g_err
        for y in range(3, scope.n_ues):
            k = scope.group[y]
            expected = scope.estimate_scale[y] * g_hat0[..., k]
            np.testing.assert_allclose(g_hat_all[..., y], expected,
                                       rtol=1e-10)

    def test_training_noise_requires_rng(self, small_state):
        cfg = default_config(K=3, M=16, interference_limited=False)
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 5, cfg.M, np.random.default_rng(5))
        with pytest.raises(ValueError):
            estimate_channels(small_state, g, cfg)


class TestReceivers:
    def test_mrc_norm_exact(self, small_state):
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 200, CFG3.M, np.random.default_rng(6))
        g_hat0, _ = estimate_channels(small_state, g, CFG3)
        w = mrc_receiver(g_hat0, small_state, 2)
        norms = np.einsum("bm,bm->b", w.conj(), w).real
        np.testing.assert_allclose(norms, small_state.alpha[1] / CFG3.M,
                                   rtol=1e-12)

    def test_mrc_direction_scale_invariant(self, small_state):
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 4, CFG3.M, np.random.default_rng(7))
        g_hat0, _ = estimate_channels(small_state, g, CFG3)
        w1 = mrc_receiver(g_hat0, small_state, 1)
        w2 = mrc_receiver(g_hat0 * 3.7, small_state, 1)
        np.testing.assert_allclose(w1, w2, rtol=1e-12)

    def test_mrc_rejects_zero_estimate(self, small_state):
        zeros = np.zeros((2, CFG3.M, 3), dtype=complex)
        with pytest.raises(ValueError):
            mrc_receiver(zeros, small_state, 1)

    def test_zf_nulls_other_pilots(self, small_state):
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 300, CFG3.M, np.random.default_rng(8))
        g_hat0, _ = estimate_channels(small_state, g, CFG3)
        rec = zf_receiver(g_hat0, 1)
        assert rec.valid.all()
        cross = np.einsum("bm,bmk->bk", rec.w.conj(), g_hat0)
        scale = np.linalg.norm(g_hat0, axis=1)
        assert np.abs(cross[:, 1:]).max() < 1e-10 * scale[:, 1:].max()
        np.testing.assert_allclose(np.abs(cross[:, 0]), 1.0, rtol=1e-10)

    def test_zf_reuse_cross_power(self, small_state):
        # |w^H ghat_y|^2 = (beta_y / beta_xk)^2 for reuse UEs, per draw
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 50, CFG3.M, np.random.default_rng(9))
        g_hat0, g_err = estimate_channels(small_state, g, CFG3)
        g_hat_all = g - g_err
        rec = zf_receiver(g_hat0, 1)
        reuse = np.flatnonzero(scope.group == 0)[1:]  # skip the intra UE
        cross = np.abs(np.einsum("bm,bmn->bn", rec.w.conj(),
                                 g_hat_all[..., reuse])) ** 2
        expected = (scope.beta[reuse] / small_state.intra_beta[0]) ** 2
        np.testing.assert_allclose(cross,
                                   np.broadcast_to(expected, cross.shape),
                                   rtol=1e-9)

    def test_zf_gram_inverse_mean(self):
        # inverse-Gram diagonal: E[.] = alpha_k / ((M-K) beta_k^2)
        cfg = default_config(K=8, M=32)
        rng = np.random.default_rng(10)
        intra = 1e-4 * (0.5 + rng.random(8))
        outer = [1e-5 * (0.5 + rng.random(3)) for _ in range(8)]
        state = LargeScaleState.from_betas(intra, outer)
        scope = FlatScope.from_state(state)
        total = []
        for _ in range(10):
            g = draw_channels(scope, 2000, cfg.M, rng)
            g_hat0, _ = estimate_channels(state, g, cfg)
            total.append(zf_receiver(g_hat0, 1).gram_inv_kk)
        mean = np.concatenate(total).mean()
        expected = state.alpha[0] / ((cfg.M - cfg.K)
                                     * state.intra_beta[0] ** 2)
        assert mean == pytest.approx(expected, rel=0.02)

    def test_zf_flags_singular_gram(self, small_state):
        scope = FlatScope.from_state(small_state)
        g = draw_channels(scope, 3, CFG3.M, np.random.default_rng(11))
        g_hat0, _ = estimate_channels(small_state, g, CFG3)
        g_hat0[..., 2] = g_hat0[..., 1]  # duplicate column
        rec = zf_receiver(g_hat0, 1)
        assert not rec.valid.any()


class TestOracleAgainstClosedForms:
    def test_mrc_components_match(self, small_state):
        measured = measure_components(30_000, small_state, 1, MRC, CFG3,
                                      rng=np.random.default_rng(12))
        closed = mrc_components(small_state, 1, CFG3)
        for name in ("signal", "intra", "inter", "cont"):
            assert getattr(measured, name) == pytest.approx(
                getattr(closed, name), rel=0.02), name

    def test_zf_components_match(self, small_state):
        measured = measure_components(30_000, small_state, 1, ZF, CFG3,
                                      rng=np.random.default_rng(13))
        closed = zf_components(small_state, 1, CFG3)
        for name in ("signal", "intra", "inter", "cont"):
            assert getattr(measured, name) == pytest.approx(
                getattr(closed, name), rel=0.025), name
        assert measured.sinr_identity_max_rel <= 1e-8
        assert measured.discarded == 0

    def test_sinr_identity_per_draw(self, small_state):
        measured = measure_components(2_000, small_state, 2, ZF, CFG3,
                                      rng=np.random.default_rng(14))
        assert measured.sinr_identity_max_rel <= 1e-10

    def test_probe_choice(self, small_state):
        # probing pilot 2 compares against the pilot-2 closed forms
        measured = measure_components(20_000, small_state, 2, MRC, CFG3,
                                      rng=np.random.default_rng(15))
        closed = mrc_components(small_state, 2, CFG3)
        assert measured.cont == pytest.approx(closed.cont, rel=0.03)

    def test_rejects_bad_arguments(self, small_state):
        with pytest.raises(ValueError):
            measure_components(0, small_state, 1, MRC, CFG3)
        with pytest.raises(ValueError):
            measure_components(10, small_state, 1, "dfe", CFG3)


class TestFadingValidationReport:
    def test_small_instance_report(self):
        cfg = default_config(M=32, K=4, n_fading_trials=12_000, seed=77)
        report = run_fading_validation(cfg)
        assert report.passed
        assert report.sinr_identity_max_rel <= 1e-8
        assert report.gram_identity_rel_error <= 0.02
        assert report.discard_rate == 0.0
        payload = report.to_dict()
        assert payload["draws"] == 12_000
        assert len(payload["components"]) == 8
        assert all(row["passed"] for row in payload["components"])
