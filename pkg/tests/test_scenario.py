"""Randomized scenario sampling and the multi-round dialogue engine."""

import numpy as np
import pytest

from kvlink.decision import ModeChoice
from kvlink.scenario import (
    AgentLedger,
    MultiRoundConfig,
    SingleRoundConfig,
    new_multi_round_state,
    run_multi_round,
    sample_single_round,
    step_multi_round,
)
from kvlink.workload import MODEL_PRESETS, derive_constants

K = derive_constants(MODEL_PRESETS["llama-7b"])

SMALL = MultiRoundConfig(aa_count_max=5)


class TestSingleRoundSampling:
    def test_same_seed_identical(self):
        cfg = SingleRoundConfig(aa_count=6, ea_tflops=5.0)
        a = sample_single_round(cfg, 99)
        b = sample_single_round(cfg, 99)
        assert np.array_equal(a.snr, b.snr)
        assert np.array_equal(a.d_kv_bits, b.d_kv_bits)
        assert np.array_equal(a.alpha, b.alpha)

    def test_different_seeds_differ(self):
        cfg = SingleRoundConfig(aa_count=6, ea_tflops=5.0)
        a = sample_single_round(cfg, 1)
        b = sample_single_round(cfg, 2)
        assert not np.array_equal(a.snr, b.snr)

    def test_alpha_law_bounds(self):
        cfg = SingleRoundConfig(aa_count=2000, ea_tflops=5.0)
        inst = sample_single_round(cfg, 0)
        assert np.all(inst.alpha >= 819.2) and np.all(inst.alpha <= 1228.8)

    def test_xi_to_alpha_mean(self):
        cfg = SingleRoundConfig(aa_count=100_000, ea_tflops=5.0)
        inst = sample_single_round(cfg, 0)
        assert 2.99 <= float(np.mean(inst.xi / inst.alpha)) <= 3.01

    def test_payload_laws(self):
        cfg = SingleRoundConfig(aa_count=50, ea_tflops=5.0)
        inst = sample_single_round(cfg, 3)
        assert np.allclose(inst.d_nl_bits, 16.0 * inst.alpha)
        assert np.allclose(inst.d_kv_bits, 16 * K.k1 * (inst.xi + inst.alpha) / 2.0)

    def test_distance_and_metadata_ranges(self):
        cfg = SingleRoundConfig(aa_count=500, ea_tflops=5.0)
        inst = sample_single_round(cfg, 4)
        assert np.all((inst.distance_m >= 5.0) & (inst.distance_m <= 10.0))
        assert np.all((inst.tx_power_dbm >= 10.0) & (inst.tx_power_dbm <= 23.0))


class TestAgentLedger:
    def test_unshared_accrues_debt(self):
        led = AgentLedger(context_limit=10_000, debt_window=3_000)
        led.append(1000, shared=False)
        led.append(1000, shared=True)
        assert led.theta == 2000 and led.xi == 1000

    def test_window_caps_debt(self):
        led = AgentLedger(context_limit=10_000, debt_window=1_500)
        led.append(2000, shared=False)
        assert led.xi == 1500

    def test_context_limit_caps_history(self):
        led = AgentLedger(context_limit=2_500, debt_window=2_500)
        led.append(2000, shared=False)
        led.append(2000, shared=False)
        assert led.theta == 2500 and led.xi <= led.theta

    def test_clear_debt(self):
        led = AgentLedger(context_limit=10_000, debt_window=5_000)
        led.append(3000, shared=False)
        led.clear_debt()
        assert led.xi == 0 and led.theta == 3000


class TestMultiRoundEngine:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            MultiRoundConfig(ea_debt_window=1e9)
        with pytest.raises(ValueError):
            MultiRoundConfig(aa_count_max=0)

    def test_determinism(self):
        t1 = run_multi_round(SMALL, 4, 7, "jmsra")
        t2 = run_multi_round(SMALL, 4, 7, "jmsra")
        for a, b in zip(t1, t2):
            assert a.ea_mode is b.ea_mode
            assert a.aa_modes == b.aa_modes
            assert a.objective_s == b.objective_s
            assert a.theta == b.theta and a.xi == b.xi

    def test_table4_defaults(self):
        cfg = MultiRoundConfig()
        assert cfg.aa_count_max == 20
        assert cfg.ea_context_limit == 409_600
        assert cfg.ea_debt_window == 102_400
        assert cfg.aa_context_limit == 51_200
        assert cfg.aa_debt_window == 10_240

    @pytest.mark.parametrize("policy", ["jmsra", "all_nl", "all_kv"])
    def test_ledger_invariants_fuzz(self, policy):
        cfg = SMALL
        state = new_multi_round_state(cfg, 11)
        for _ in range(50):
            trace = step_multi_round(state, policy)
            assert 1 <= len(trace.active) <= cfg.aa_count_max
            assert trace.ea_xi <= cfg.ea_debt_window
            assert trace.ea_theta <= cfg.ea_context_limit
            assert trace.ea_xi <= trace.ea_theta
            for i in range(cfg.aa_count_max):
                assert trace.xi[i] <= cfg.aa_debt_window
                assert trace.theta[i] <= cfg.aa_context_limit
                assert trace.xi[i] <= trace.theta[i]
            assert trace.ea_prefill_s >= 0 and trace.ea_decode_s > 0
            assert trace.objective_s > 0

    def test_kv_transmission_clears_debt(self):
        cfg = MultiRoundConfig(aa_count_max=5, ea_tflops=5.0)
        traces = run_multi_round(cfg, 12, 21, "jmsra")
        seen_kv = 0
        for t in traces:
            for i, mode in t.aa_modes.items():
                if mode is ModeChoice.KV:
                    assert t.xi[i] == 0.0
                    seen_kv += 1
        assert seen_kv > 0

    def test_debt_grows_until_kv_reset(self):
        # Forced all-NL: every active agent's debt is nondecreasing (window cap aside).
        traces = run_multi_round(SMALL, 10, 5, "all_nl")
        prev = {i: 0.0 for i in range(SMALL.aa_count_max)}
        for t in traces:
            for i in t.aa_modes:
                assert t.xi[i] >= min(prev[i], SMALL.aa_debt_window) - 1e-9
            prev = t.xi

    def test_forced_policies_pin_modes(self):
        for policy, mode in (("all_nl", ModeChoice.NL), ("all_kv", ModeChoice.KV)):
            traces = run_multi_round(SMALL, 3, 9, policy)
            for t in traces:
                assert t.ea_mode is mode
                assert all(m is mode for m in t.aa_modes.values())

    def test_round_draws_policy_independent(self):
        # Same seed, different policies: identical active sets each round.
        a = run_multi_round(SMALL, 6, 13, "jmsra")
        b = run_multi_round(SMALL, 6, 13, "all_nl")
        for ta, tb in zip(a, b):
            assert ta.active == tb.active

    def test_inactive_agents_untouched(self):
        traces = run_multi_round(SMALL, 8, 17, "all_nl")
        prev_theta = {i: 0.0 for i in range(SMALL.aa_count_max)}
        for t in traces:
            for i in range(SMALL.aa_count_max):
                if i not in t.aa_modes:
                    assert t.theta[i] == prev_theta[i]
            prev_theta = t.theta

    def test_rho_sums_to_one_over_active(self):
        traces = run_multi_round(SMALL, 5, 19, "jmsra")
        for t in traces:
            assert sum(t.rho.values()) == pytest.approx(1.0, abs=1e-9)

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            run_multi_round(SMALL, 0, 1, "jmsra")
        state = new_multi_round_state(SMALL, 1)
        with pytest.raises(ValueError):
            step_multi_round(state, "greedy")
