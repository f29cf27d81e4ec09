"""Analytic inference-cost model: constants, phase latencies, payload sizes."""

import pytest

from kvlink.workload import (
    MODEL_PRESETS,
    ModelSpec,
    WorkloadConstants,
    autoregressive_latency,
    derive_constants,
    kv_payload_bits,
    prefill_latency,
    token_payload_bits,
    total_inference_latency,
)

K = derive_constants(MODEL_PRESETS["llama-7b"])


class TestDeriveConstants:
    def test_preset_constants_exact(self):
        assert (K.k1, K.k2, K.k3) == (262_144, 10_066_329_600, 262_144_000)

    def test_constants_are_integers(self):
        assert isinstance(K.k1, int) and isinstance(K.k2, int) and isinstance(K.k3, int)

    def test_small_model_hand_computed(self):
        # L=2, H=4, d_h=8, d_m=16, d_f=32, V=100:
        # k1 = 2*2*4*8 = 128; k2 = 8*2*4*8*16 + 4*2*16*32 = 8192 + 4096 = 12288
        # k3 = 2*16*100 = 3200
        k = derive_constants(ModelSpec(2, 4, 8, 16, 32, 100))
        assert (k.k1, k.k2, k.k3) == (128, 12288, 3200)

    def test_invalid_model_rejected(self):
        with pytest.raises(ValueError):
            ModelSpec(0, 4, 8, 16, 32, 100)
        with pytest.raises(ValueError):
            ModelSpec(2, 4, 8, 16, 32, 1)
        with pytest.raises(ValueError):
            WorkloadConstants(k1=0, k2=1, k3=1)


class TestPrefill:
    def test_unit_compute_unit_tokens(self):
        # s = phi = 1, C = 1: latency equals k2 + 2*k1 + k3 FLOPs exactly.
        assert prefill_latency(K, 1.0, 1, 1) == K.k2 + 2 * K.k1 + K.k3

    def test_frozen_value_1024_tokens_10_tflops(self):
        assert prefill_latency(K, 1e13, 1024, 1024) == pytest.approx(
            1.0857939468288, rel=1e-13
        )

    def test_quadratic_in_context(self):
        base = prefill_latency(K, 1e12, 256, 256)
        grown = prefill_latency(K, 1e12, 256, 256 + 1000)
        assert grown - base == pytest.approx(2 * K.k1 * 1000 * 256 / 1e12, rel=1e-12)

    def test_rejects_zero_input(self):
        with pytest.raises(ValueError):
            prefill_latency(K, 1e12, 0, 100)

    def test_rejects_context_shorter_than_input(self):
        with pytest.raises(ValueError):
            prefill_latency(K, 1e12, 100, 99)


class TestAutoregressive:
    def test_unit_compute_single_token(self):
        # alpha = 1, phi = 0, C = 1: k1 + (k1 + k2 + k3) FLOPs.
        assert autoregressive_latency(K, 1.0, 1, 0) == 2 * K.k1 + K.k2 + K.k3

    def test_zero_output_is_free(self):
        assert autoregressive_latency(K, 1e12, 0, 5000) == 0.0

    def test_linear_in_context(self):
        base = autoregressive_latency(K, 1e12, 64, 0)
        grown = autoregressive_latency(K, 1e12, 64, 500)
        assert grown - base == pytest.approx(2 * K.k1 * 500 * 64 / 1e12, rel=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            autoregressive_latency(K, 1e12, -1, 0)
        with pytest.raises(ValueError):
            autoregressive_latency(K, 1e12, 1, -1)


class TestPhaseSumIdentity:
    def test_frozen_total_value(self):
        assert total_inference_latency(K, 1e13, 1024, 1024, 1024) == pytest.approx(
            2.2259198590976, rel=1e-13
        )

    def test_identity_over_random_draws(self):
        import numpy as np

        rng = np.random.default_rng(2024)
        for _ in range(1000):
            s = float(rng.integers(1, 8192))
            alpha = float(rng.integers(1, 8192))
            theta = float(rng.integers(0, 16384))
            c = float(rng.uniform(1e11, 1e15))
            phi = s + theta
            summed = prefill_latency(K, c, s, phi) + autoregressive_latency(
                K, c, alpha, phi
            )
            closed = total_inference_latency(K, c, alpha, phi, s)
            assert abs(summed - closed) <= 1e-12 * closed


class TestPayloads:
    def test_kv_bits_per_token_is_16_k1(self):
        # 32*L*H*d_h bits/token = 16*k1; gamma=1 keeps the raw cache.
        assert kv_payload_bits(K, 1, 1.0) == 16 * K.k1

    def test_frozen_2048_tokens_gamma_2(self):
        assert kv_payload_bits(K, 2048, 2.0) == 4_294_967_296.0

    def test_compression_divides(self):
        assert kv_payload_bits(K, 100, 4.0) == kv_payload_bits(K, 100, 1.0) / 4

    def test_token_bits(self):
        assert token_payload_bits(1024, 16) == 16384.0
        assert token_payload_bits(0, 16) == 0.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            kv_payload_bits(K, -1, 2.0)
        with pytest.raises(ValueError):
            kv_payload_bits(K, 10, 0.5)
        with pytest.raises(ValueError):
            token_payload_bits(-1, 16)
