"""Single-link media selection: token prefill cost vs KV-cache wire cost.

The latency gap between the two media is a quadratic in the transmitted
token count alpha; rewritten as a function of the bandwidth fraction rho it
is strictly increasing, so a unique break-even allocation rho* exists
whenever the KV payload dominates and the full band favors KV.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .channel import LinkBudget, link_snr, ofdma_rate
from .workload import WorkloadConstants, kv_payload_bits, prefill_latency, token_payload_bits

__all__ = [
    "ModeChoice",
    "TransmissionContext",
    "DecisionPoly",
    "marginal_latency_nl",
    "marginal_latency_kv",
    "decision_poly",
    "select_mode",
    "bandwidth_threshold",
    "broadcast_mode_select",
    "compute_gap_term",
    "payload_gap_bits",
]

RHO_STAR_REL_TOL = 1e-6
RHO_STAR_MAX_ITERS = 200


class ModeChoice(enum.Enum):
    NL = "nl"
    KV = "kv"


@dataclass(frozen=True)
class TransmissionContext:
    """Everything one transmitter needs to price a single transmission.

    alpha: tokens being sent now; xi: transmitter-side KV debt (tokens whose
    cache the receiver lacks); theta_r: receiver history the prefill must
    attend to; rho: bandwidth fraction for fixed-allocation queries.
    """

    alpha: float
    xi: float
    theta_r: float
    gamma: float
    bits_per_token: float
    receiver_flops: float
    link: LinkBudget
    rho: float = 1.0

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.xi < 0 or self.theta_r < 0:
            raise ValueError("xi and theta_r must be nonnegative")
        if self.gamma < 1:
            raise ValueError("gamma must be >= 1")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must be in (0, 1]")
        if self.receiver_flops <= 0:
            raise ValueError("receiver_flops must be positive")


@dataclass(frozen=True)
class DecisionPoly:
    """f(alpha) = k4*alpha^2 + k5*alpha + k6, the NL-minus-KV latency gap."""

    k4: float
    k5: float
    k6: float

    def __call__(self, alpha: float) -> float:
        return self.k4 * alpha**2 + self.k5 * alpha + self.k6


def _rate(ctx: TransmissionContext, rho: float | None = None) -> float:
    r = ofdma_rate(ctx.rho if rho is None else rho,
                   ctx.link.bandwidth_hz, link_snr(ctx.link))
    if r <= 0:
        raise ValueError("link unusable: zero rate")
    return r


def _marginal_nl_at_rate(k: WorkloadConstants, ctx: TransmissionContext, rate: float) -> float:
    prefill = prefill_latency(k, ctx.receiver_flops, ctx.alpha, ctx.alpha + ctx.theta_r)
    return prefill + token_payload_bits(ctx.alpha, ctx.bits_per_token) / rate


def _marginal_kv_at_rate(k: WorkloadConstants, ctx: TransmissionContext, rate: float) -> float:
    return kv_payload_bits(k, ctx.xi + ctx.alpha, ctx.gamma) / rate


def marginal_latency_nl(k: WorkloadConstants, ctx: TransmissionContext) -> float:
    """Receiver prefill over the alpha tokens plus their wire time."""
    return _marginal_nl_at_rate(k, ctx, _rate(ctx))


def marginal_latency_kv(k: WorkloadConstants, ctx: TransmissionContext) -> float:
    """Wire time of the (xi + alpha)-token KV cache; no receiver compute."""
    return _marginal_kv_at_rate(k, ctx, _rate(ctx))


def compute_gap_term(k: WorkloadConstants, ctx: TransmissionContext) -> float:
    """A(alpha): the compute cost the KV medium saves at the receiver."""
    return (
        2 * k.k1 * ctx.alpha**2
        + (k.k2 + 2 * k.k1 * ctx.theta_r) * ctx.alpha
        + k.k3
    ) / ctx.receiver_flops


def payload_gap_bits(k: WorkloadConstants, ctx: TransmissionContext) -> float:
    """D(alpha): the extra bits the KV medium puts on the wire."""
    return 16 * k.k1 * (ctx.xi + ctx.alpha) / ctx.gamma - ctx.bits_per_token * ctx.alpha


def decision_poly(k: WorkloadConstants, ctx: TransmissionContext) -> DecisionPoly:
    """Coefficients of the latency gap at the context's fixed allocation."""
    rate = _rate(ctx)
    c = ctx.receiver_flops
    k4 = 2 * k.k1 / c
    k5 = (k.k2 + 2 * k.k1 * ctx.theta_r) / c + (
        ctx.bits_per_token - 16 * k.k1 / ctx.gamma
    ) / rate
    k6 = k.k3 / c - (16 * k.k1 * ctx.xi / ctx.gamma) / rate
    return DecisionPoly(k4=k4, k5=k5, k6=k6)


def select_mode(k: WorkloadConstants, ctx: TransmissionContext) -> ModeChoice:
    """KV iff the gap is strictly positive; ties go to the token medium."""
    f = decision_poly(k, ctx)(ctx.alpha)
    return ModeChoice.KV if f > 0 else ModeChoice.NL


def _gap_at_rho(k: WorkloadConstants, ctx: TransmissionContext, rho: float) -> float:
    return compute_gap_term(k, ctx) - payload_gap_bits(k, ctx) / _rate(ctx, rho)


def bandwidth_threshold(k: WorkloadConstants, ctx: TransmissionContext) -> Optional[float]:
    """Break-even allocation rho* with f(rho*) = 0, or None if NL wins at rho=1.

    Requires the KV payload to dominate (D(alpha) > 0), which makes f
    strictly increasing in rho and the root unique. Bisection runs until
    |f| <= 1e-6 * A(alpha).
    """
    a_term = compute_gap_term(k, ctx)
    d_bits = payload_gap_bits(k, ctx)
    if d_bits <= 0:
        raise ValueError(
            "KV payload not dominant (D(alpha) <= 0): the gap is not monotone in rho"
        )
    if _gap_at_rho(k, ctx, 1.0) <= 0:
        return None  # NL is preferable even with the whole band

    # f -> -inf as rho -> 0+, f(1) > 0: bracket is (0, 1].
    lo, hi = 0.0, 1.0
    tol = RHO_STAR_REL_TOL * abs(a_term)
    for _ in range(RHO_STAR_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0 or mid == lo or mid == hi:
            break
        f_mid = _gap_at_rho(k, ctx, mid)
        if abs(f_mid) <= tol:
            return mid
        if f_mid > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def broadcast_mode_select(k: WorkloadConstants,
                          contexts: Sequence[TransmissionContext]) -> ModeChoice:
    """Mode for a one-to-many broadcast over the full band.

    The broadcast rate is pinned by the worst receiver's channel; the winner
    is the medium with the smaller worst-link marginal latency (min-max).
    """
    contexts = list(contexts)
    if not contexts:
        raise ValueError("broadcast_mode_select needs at least one receiver")
    bandwidth = contexts[0].link.bandwidth_hz
    worst_snr = min(link_snr(c.link) for c in contexts)
    if worst_snr <= 0:
        raise ValueError("link unusable: zero broadcast rate")
    rate = ofdma_rate(1.0, bandwidth, worst_snr)
    worst_nl = max(_marginal_nl_at_rate(k, c, rate) for c in contexts)
    worst_kv = max(_marginal_kv_at_rate(k, c, rate) for c in contexts)
    return ModeChoice.KV if worst_kv < worst_nl else ModeChoice.NL
