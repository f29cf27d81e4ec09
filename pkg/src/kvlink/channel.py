"""Wireless link model: log-distance path loss, Rayleigh fading, OFDMA rates.

SNR is carried in linear scale everywhere inside the package; dB and dBm
appear only at config/report boundaries (see the conversion helpers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinkBudget",
    "path_loss_db",
    "db_to_linear",
    "linear_to_db",
    "dbm_to_watts",
    "link_snr",
    "ofdma_rate",
    "broadcast_rate",
    "sample_rayleigh",
]

# Unit-variance Rayleigh amplitude: sigma = 1, so E[h^2] = 2*sigma^2 = 2.
RAYLEIGH_SCALE = 1.0


@dataclass(frozen=True)
class LinkBudget:
    """One wireless link's power budget and channel state."""

    tx_power_w: float
    path_loss_db: float
    fading_amp: float
    noise_density_w_hz: float
    bandwidth_hz: float

    def __post_init__(self):
        if self.tx_power_w <= 0:
            raise ValueError("tx_power_w must be positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.noise_density_w_hz <= 0:
            raise ValueError("noise_density_w_hz must be positive")
        if self.fading_amp < 0:
            raise ValueError("fading_amp must be nonnegative")
        if self.path_loss_db < 0:
            raise ValueError("path_loss_db must be nonnegative")


def path_loss_db(distance_m: float) -> float:
    """Log-distance path loss, 30 + 35*log10(d) dB."""
    if distance_m <= 0:
        raise ValueError("distance must be positive")
    return 30.0 + 35.0 * math.log10(distance_m)


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError("cannot convert nonpositive value to dB")
    return 10.0 * math.log10(x)


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** (p_dbm / 10.0) * 1e-3


def link_snr(budget: LinkBudget) -> float:
    """Linear full-band SNR: P * 10^(-PL/10) * h^2 / (B * N0)."""
    gain = db_to_linear(-budget.path_loss_db) * budget.fading_amp**2
    return budget.tx_power_w * gain / (budget.bandwidth_hz * budget.noise_density_w_hz)


def ofdma_rate(rho: float, bandwidth_hz: float, snr: float) -> float:
    """Shannon rate of a fraction rho of the band.

    snr is the full-band linear SNR, so the in-band SNR improves as the
    allocation narrows: R = rho * B * log2(1 + snr/rho). Strictly increasing
    and concave in rho for snr > 0.
    """
    if not 0 < rho <= 1:
        raise ValueError(f"bandwidth fraction must be in (0, 1], got {rho}")
    if snr < 0:
        raise ValueError("snr must be nonnegative")
    if snr == 0:
        return 0.0
    return rho * bandwidth_hz * math.log2(1.0 + snr / rho)


def broadcast_rate(bandwidth_hz: float, snrs) -> float:
    """Full-band broadcast rate, pinned to the worst receiver's channel."""
    snrs = list(snrs)
    if not snrs:
        raise ValueError("broadcast_rate needs at least one receiver")
    worst = min(snrs)
    if worst < 0:
        raise ValueError("snr must be nonnegative")
    return bandwidth_hz * math.log2(1.0 + worst)


def sample_rayleigh(rng: np.random.Generator, size=None):
    """Rayleigh fading amplitude(s) with unit scale parameter (E[h^2] = 2)."""
    return rng.rayleigh(scale=RAYLEIGH_SCALE, size=size)
