"""Analytic cost model of decoder-only transformer inference.

Latency is estimated from matrix-multiply FLOP counts only; the whole model
collapses into three integer constants (k1, k2, k3) derived from the
architecture. No tensors are ever materialized.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "ModelSpec",
    "WorkloadConstants",
    "AgentCompute",
    "MODEL_PRESETS",
    "derive_constants",
    "prefill_latency",
    "autoregressive_latency",
    "total_inference_latency",
    "kv_payload_bits",
    "token_payload_bits",
]


@dataclass(frozen=True)
class ModelSpec:
    """Architecture scalars of a decoder-only transformer."""

    layers: int
    heads: int
    head_dim: int
    hidden_dim: int
    ffn_dim: int
    vocab: int

    def __post_init__(self):
        for name in ("layers", "heads", "head_dim", "hidden_dim", "ffn_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.vocab < 2:
            raise ValueError(f"vocab must be >= 2, got {self.vocab}")


@dataclass(frozen=True)
class WorkloadConstants:
    """FLOP-count constants of one model.

    k1 scales the quadratic attention term (FLOPs per token^2), k2 the linear
    projection/FFN term (FLOPs per token), k3 is the fixed vocabulary
    projection cost (FLOPs).
    """

    k1: int
    k2: int
    k3: int

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0 or self.k3 <= 0:
            raise ValueError("workload constants must be positive")


@dataclass(frozen=True)
class AgentCompute:
    """Effective compute budget of one agent, in FLOP/s.

    Collapses the hardware peak and the currently available utilization
    fraction into a single effective value.
    """

    effective_flops: float

    def __post_init__(self):
        if self.effective_flops <= 0:
            raise ValueError("effective_flops must be positive")


MODEL_PRESETS: dict[str, ModelSpec] = {
    "llama-7b": ModelSpec(
        layers=32, heads=32, head_dim=128, hidden_dim=4096, ffn_dim=11008, vocab=32000
    ),
}


def derive_constants(spec: ModelSpec) -> WorkloadConstants:
    """Derive (k1, k2, k3) from a model spec using exact integer arithmetic."""
    k1 = 2 * spec.layers * spec.heads * spec.head_dim
    k2 = (
        8 * spec.layers * spec.heads * spec.head_dim * spec.hidden_dim
        + 4 * spec.layers * spec.hidden_dim * spec.ffn_dim
    )
    k3 = 2 * spec.hidden_dim * spec.vocab
    return WorkloadConstants(k1=k1, k2=k2, k3=k3)


def prefill_latency(k: WorkloadConstants, c_flops: float, s: float, phi: float) -> float:
    """Seconds to prefill s new tokens against a context of phi = s + theta.

    s = 0 is rejected: a caller with no fresh input must skip the prefill
    phase entirely rather than pay the fixed vocabulary-projection cost.
    """
    if s <= 0:
        raise ValueError("prefill requires s >= 1; skip the phase when there is no input")
    if phi < s:
        raise ValueError(f"phi ({phi}) must be >= s ({s})")
    if c_flops <= 0:
        raise ValueError("compute capacity must be positive")
    return (k.k2 * s + 2 * k.k1 * phi * s + k.k3) / c_flops


def autoregressive_latency(k: WorkloadConstants, c_flops: float, alpha: float, phi: float) -> float:
    """Seconds to decode alpha tokens on top of an existing context of phi tokens.

    alpha = 0 returns 0 (no generation this turn).
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0:
        return 0.0
    if phi < 0:
        raise ValueError("phi must be nonnegative")
    if c_flops <= 0:
        raise ValueError("compute capacity must be positive")
    return (k.k1 * alpha**2 + 2 * k.k1 * phi * alpha + (k.k1 + k.k2 + k.k3) * alpha) / c_flops


def total_inference_latency(
    k: WorkloadConstants, c_flops: float, alpha: float, phi: float, s: float
) -> float:
    """Prefill plus decode in one expression (algebraically equal to their sum)."""
    if s < 1 or alpha < 1:
        raise ValueError("total inference requires s >= 1 and alpha >= 1")
    if phi < s:
        raise ValueError(f"phi ({phi}) must be >= s ({s})")
    if c_flops <= 0:
        raise ValueError("compute capacity must be positive")
    return (
        k.k1 * alpha**2
        + 2 * k.k1 * phi * (alpha + s)
        + (k.k1 + k.k2 + k.k3) * alpha
        + k.k2 * s
        + k.k3
    ) / c_flops


def kv_payload_bits(k: WorkloadConstants, context_len: float, gamma: float) -> float:
    """Bits needed to ship the KV cache of context_len tokens at compression gamma.

    The raw FP16 cache is 32*L*H*d_h = 16*k1 bits per token. Kept real-valued;
    round at the interface boundary if whole bits are needed.
    """
    if context_len < 0:
        raise ValueError("context_len must be nonnegative")
    if gamma < 1:
        raise ValueError(f"compression ratio gamma must be >= 1, got {gamma}")
    return 16 * k.k1 * context_len / gamma


def token_payload_bits(alpha: float, bits_per_token: float) -> float:
    """Bits needed to ship alpha token indices."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if bits_per_token < 1:
        raise ValueError("bits_per_token must be >= 1")
    return bits_per_token * alpha
