"""Two-round end-to-end latency pipelines: all-token vs all-KV-cache.

Models one leader (EA) broadcasting context to I assistants (AAs) and
collecting their replies over OFDMA uplinks. Both pipelines share the same
token workload; only the transmitted representation differs. Derived context
lengths (omega per AA, epsilon at the EA) are always recomputed from the
dialogue shape, never stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import broadcast_rate, db_to_linear, ofdma_rate
from .workload import (
    WorkloadConstants,
    autoregressive_latency,
    kv_payload_bits,
    prefill_latency,
    token_payload_bits,
    total_inference_latency,
)

__all__ = [
    "DialogueShape",
    "ComputeSet",
    "LinkSet",
    "ModeLatencyBreakdown",
    "SweepDefaults",
    "nl_mode_latency",
    "kv_mode_latency",
    "ratio_sweep",
    "default_grid",
    "SWEEP_AXES",
]


@dataclass(frozen=True)
class DialogueShape:
    """Token bookkeeping for one two-round exchange.

    Per-agent arrays have length aa_count (index 0 is AA #1). Only primitive
    counts are stored; mode-dependent context lengths are derived inside the
    pipelines.
    """

    aa_count: int
    ea_prompt: float          # s_{0,1}
    ea_round1_out: float      # alpha_{0,1}, the broadcast content
    ea_final_out: float       # alpha_{0,2}
    aa_round1_out: np.ndarray  # alpha_{i,1}
    aa_input: np.ndarray       # s_{i,2}, locally sensed tokens
    aa_round2_out: np.ndarray  # alpha_{i,2}, the uplink content
    gamma_ea: float
    gamma_aa: np.ndarray
    bits_per_token: float

    def __post_init__(self):
        if self.aa_count < 1:
            raise ValueError("need at least one AA")
        for name in ("aa_round1_out", "aa_input", "aa_round2_out", "gamma_aa"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (self.aa_count,):
                raise ValueError(f"{name} must have shape ({self.aa_count},)")
        if min(self.ea_prompt, self.ea_round1_out, self.ea_final_out) < 0:
            raise ValueError("token counts must be nonnegative")

    @classmethod
    def symmetric(cls, s: float, beta: float, aa_count: int, gamma: float,
                  bits_per_token: float, ea_final_out: float = 100.0) -> "DialogueShape":
        """Symmetric shape: every output is beta times its input, the final
        decision output is fixed and short."""
        a01 = beta * s
        return cls(
            aa_count=aa_count,
            ea_prompt=s,
            ea_round1_out=a01,
            ea_final_out=ea_final_out,
            aa_round1_out=np.full(aa_count, beta * a01),
            aa_input=np.full(aa_count, s),
            aa_round2_out=np.full(aa_count, beta * s),
            gamma_ea=gamma,
            gamma_aa=np.full(aa_count, gamma),
            bits_per_token=bits_per_token,
        )


@dataclass(frozen=True)
class ComputeSet:
    """Effective FLOP/s of the EA and each AA."""

    ea_flops: float
    aa_flops: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.aa_flops, dtype=float)
        object.__setattr__(self, "aa_flops", arr)
        if self.ea_flops <= 0 or np.any(arr <= 0):
            raise ValueError("compute capacities must be positive")


@dataclass(frozen=True)
class LinkSet:
    """Channel state for the broadcast and the per-AA uplinks.

    SNRs are linear full-band values; rho is the uplink bandwidth fraction
    per AA.
    """

    bandwidth_hz: float
    broadcast_snr: np.ndarray
    uplink_snr: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        for name in ("broadcast_snr", "uplink_snr", "rho"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")


@dataclass(frozen=True)
class ModeLatencyBreakdown:
    """Per-component latencies of one pipeline run."""

    ea_inference: tuple      # (round 1, round 2) seconds
    ea_comm: float
    per_aa_inference: np.ndarray  # shape (I, 2)
    per_aa_comm: np.ndarray       # shape (I,)
    bottleneck_aa: int
    total: float


def _aa_rates(shape: DialogueShape, links: LinkSet) -> np.ndarray:
    rates = np.array([
        ofdma_rate(float(links.rho[i]), links.bandwidth_hz, float(links.uplink_snr[i]))
        for i in range(shape.aa_count)
    ])
    if np.any(rates <= 0):
        raise ValueError("link unusable: zero uplink rate")
    return rates


def _broadcast(shape: DialogueShape, links: LinkSet) -> float:
    r0 = broadcast_rate(links.bandwidth_hz, links.broadcast_snr)
    if r0 <= 0:
        raise ValueError("link unusable: zero broadcast rate")
    return r0


def _assemble(ea1, ea2, ea_comm, aa_inf, aa_comm) -> ModeLatencyBreakdown:
    per_aa_total = aa_inf.sum(axis=1) + aa_comm
    bottleneck = int(np.argmax(per_aa_total))
    total = ea1 + ea2 + ea_comm + float(per_aa_total[bottleneck])
    return ModeLatencyBreakdown(
        ea_inference=(ea1, ea2),
        ea_comm=ea_comm,
        per_aa_inference=aa_inf,
        per_aa_comm=aa_comm,
        bottleneck_aa=bottleneck,
        total=total,
    )


def nl_mode_latency(shape: DialogueShape, k: WorkloadConstants,
                    computes: ComputeSet, links: LinkSet) -> ModeLatencyBreakdown:
    """All agents exchange discrete tokens; every receiver re-runs prefill."""
    I = shape.aa_count
    s01, a01, a02 = shape.ea_prompt, shape.ea_round1_out, shape.ea_final_out
    b = shape.bits_per_token

    ea1 = total_inference_latency(k, computes.ea_flops, a01, s01, s01)
    r0 = _broadcast(shape, links)
    ea_comm = token_payload_bits(a01, b) / r0

    rates = _aa_rates(shape, links)
    aa_inf = np.zeros((I, 2))
    aa_comm = np.zeros(I)
    for i in range(I):
        c = float(computes.aa_flops[i])
        s_i1 = a01  # the broadcast tokens are the AA's round-1 prompt
        aa_inf[i, 0] = total_inference_latency(k, c, float(shape.aa_round1_out[i]), s_i1, s_i1)
        theta_i2 = a01 + float(shape.aa_round1_out[i])
        s_i2 = float(shape.aa_input[i])
        aa_inf[i, 1] = total_inference_latency(
            k, c, float(shape.aa_round2_out[i]), s_i2 + theta_i2, s_i2
        )
        aa_comm[i] = token_payload_bits(float(shape.aa_round2_out[i]), b) / rates[i]

    s02 = float(shape.aa_round2_out.sum())
    theta_02 = s01 + a01
    ea2 = total_inference_latency(k, computes.ea_flops, a02, s02 + theta_02, s02)
    return _assemble(ea1, ea2, ea_comm, aa_inf, aa_comm)


def kv_mode_latency(shape: DialogueShape, k: WorkloadConstants,
                    computes: ComputeSet, links: LinkSet) -> ModeLatencyBreakdown:
    """All agents ship KV caches; receivers skip prefill over received content."""
    I = shape.aa_count
    s01, a01, a02 = shape.ea_prompt, shape.ea_round1_out, shape.ea_final_out

    # Round-1 EA inference is identical to the token pipeline by construction.
    ea1 = total_inference_latency(k, computes.ea_flops, a01, s01, s01)
    r0 = _broadcast(shape, links)
    ea_comm = kv_payload_bits(k, s01 + a01, shape.gamma_ea) / r0

    rates = _aa_rates(shape, links)
    aa_inf = np.zeros((I, 2))
    aa_comm = np.zeros(I)
    for i in range(I):
        c = float(computes.aa_flops[i])
        inherited = s01 + a01
        aa_inf[i, 0] = autoregressive_latency(k, c, float(shape.aa_round1_out[i]), inherited)
        s_i2 = float(shape.aa_input[i])
        omega = inherited + float(shape.aa_round1_out[i]) + s_i2
        aa_inf[i, 1] = (
            prefill_latency(k, c, s_i2, omega)
            + autoregressive_latency(k, c, float(shape.aa_round2_out[i]), omega)
        )
        fresh = float(shape.aa_round1_out[i]) + s_i2 + float(shape.aa_round2_out[i])
        aa_comm[i] = kv_payload_bits(k, fresh, float(shape.gamma_aa[i])) / rates[i]

    epsilon = (s01 + a01) + float(
        (shape.aa_round1_out + shape.aa_input + shape.aa_round2_out).sum()
    )
    ea2 = autoregressive_latency(k, computes.ea_flops, a02, epsilon)
    return _assemble(ea1, ea2, ea_comm, aa_inf, aa_comm)


@dataclass(frozen=True)
class SweepDefaults:
    """Symmetric-setting defaults for the latency-ratio sweeps."""

    s: float = 1024.0
    beta: float = 1.0
    compute_tflops: float = 10.0
    snr_db: float = 8.0
    aa_count: int = 5
    gamma: float = 2.0
    bits_per_token: float = 16.0
    bandwidth_hz: float = 2e9
    ea_final_out: float = 100.0


SWEEP_AXES = ("beta", "compute", "snr", "aa_count")


def _symmetric_setting(k: WorkloadConstants, d: SweepDefaults):
    """Build (shape, computes, links) for one grid point of the symmetric sweep.

    Every AA sees the same in-band SNR, so the full-band uplink SNR is the
    common SNR scaled by the uniform allocation 1/I.
    """
    I = d.aa_count
    snr = db_to_linear(d.snr_db)
    shape = DialogueShape.symmetric(
        s=d.s, beta=d.beta, aa_count=I, gamma=d.gamma,
        bits_per_token=d.bits_per_token, ea_final_out=d.ea_final_out,
    )
    c = d.compute_tflops * 1e12
    computes = ComputeSet(ea_flops=c, aa_flops=np.full(I, c))
    links = LinkSet(
        bandwidth_hz=d.bandwidth_hz,
        broadcast_snr=np.full(I, snr),
        uplink_snr=np.full(I, snr / I),
        rho=np.full(I, 1.0 / I),
    )
    return shape, computes, links


def ratio_sweep(axis: str, grid, k: WorkloadConstants,
                defaults: SweepDefaults = SweepDefaults()):
    """Sweep one axis of the symmetric setting; yields one row per grid point.

    Rows are dicts with keys axis_name, axis_value, t_nl_s, t_kv_s, ratio,
    bottleneck_aa_nl, bottleneck_aa_kv, in grid order.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; pick one of {SWEEP_AXES}")
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid is empty")

    rows = []
    for value in grid:
        d = defaults
        if axis == "beta":
            d = SweepDefaults(**{**d.__dict__, "beta": float(value)})
        elif axis == "compute":
            d = SweepDefaults(**{**d.__dict__, "compute_tflops": float(value)})
        elif axis == "snr":
            d = SweepDefaults(**{**d.__dict__, "snr_db": float(value)})
        else:
            d = SweepDefaults(**{**d.__dict__, "aa_count": int(value)})
        shape, computes, links = _symmetric_setting(k, d)
        nl = nl_mode_latency(shape, k, computes, links)
        kv = kv_mode_latency(shape, k, computes, links)
        rows.append({
            "axis_name": axis,
            "axis_value": float(value),
            "t_nl_s": nl.total,
            "t_kv_s": kv.total,
            "ratio": nl.total / kv.total,
            "bottleneck_aa_nl": nl.bottleneck_aa,
            "bottleneck_aa_kv": kv.bottleneck_aa,
        })
    return rows


def default_grid(axis: str):
    """Grids wide enough to bracket the crossover on every axis."""
    if axis == "beta":
        return [float(x) for x in np.geomspace(0.25, 4.0, 33)]
    if axis == "compute":
        return [float(x) for x in np.linspace(1.0, 50.0, 25)]
    if axis == "snr":
        return [float(x) for x in np.linspace(-10.0, 30.0, 41)]
    if axis == "aa_count":
        return list(range(1, 31))
    raise ValueError(f"unknown sweep axis {axis!r}")
