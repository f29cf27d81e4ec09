"""JMSRA: joint media selection and min-max bandwidth allocation.

The uplink contention problem is solved by a bidirectional greedy walk over
the binary mode vector, with each candidate scored under its own optimal
bandwidth split. The split itself comes from a bisection on a common target
latency: for a trial latency every agent's minimum required fraction is
uniquely invertible because its rate is strictly increasing in the
allocation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .workload import WorkloadConstants, prefill_latency

__all__ = [
    "ScenarioInstance",
    "Assignment",
    "BisectionResult",
    "InfeasibleError",
    "ea_prefill_cost",
    "bandwidth_bisection",
    "calc_latency",
    "greedy_search",
    "jmsra",
    "exhaustive_search",
    "baseline",
    "DEFAULT_DELTA",
]

DEFAULT_DELTA = 1e-4       # seconds; outer bisection tolerance
RHO_FLOOR = 1e-9
INNER_ITERS = 80           # per-agent rate inversion (vectorized bisection)
INNER_WIDTH_TOL = 1e-12    # early stop once every bracket is this narrow
EXHAUSTIVE_MAX_AGENTS = 20


class InfeasibleError(ValueError):
    """No bandwidth split can carry the requested payloads."""


@dataclass(frozen=True)
class ScenarioInstance:
    """One AAs-to-EA contention round.

    snr holds each AA's linear full-band uplink SNR; d_nl_bits / d_kv_bits the
    two candidate payload sizes; alpha the token counts the EA would have to
    prefill for NL agents. Optional metadata arrays ride along for reporting.
    """

    snr: np.ndarray
    d_nl_bits: np.ndarray
    d_kv_bits: np.ndarray
    alpha: np.ndarray
    bandwidth_hz: float
    ea_flops: float
    ea_history: float
    constants: WorkloadConstants
    distance_m: Optional[np.ndarray] = None
    tx_power_dbm: Optional[np.ndarray] = None
    xi: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("snr", "d_nl_bits", "d_kv_bits", "alpha"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.snr.shape[0]
        if n < 1:
            raise ValueError("need at least one AA")
        for name in ("d_nl_bits", "d_kv_bits", "alpha"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
        if np.any(self.d_nl_bits <= 0) or np.any(self.d_kv_bits <= 0):
            raise ValueError("payload sizes must be positive")
        if self.ea_flops <= 0 or self.bandwidth_hz <= 0:
            raise ValueError("ea_flops and bandwidth must be positive")

    @property
    def aa_count(self) -> int:
        return int(self.snr.shape[0])


@dataclass
class Assignment:
    """Solver output: mode vector, bandwidth split, objective, and search trace."""

    x: np.ndarray
    rho: np.ndarray
    objective_s: float
    tau_s: float
    forward_trace: list = field(default_factory=list)
    backward_trace: list = field(default_factory=list)
    direction: str = "forward"
    evaluations: int = 0
    bisection_iters: int = 0   # worst single bisection call observed


@dataclass(frozen=True)
class BisectionResult:
    tau_s: float
    rho: np.ndarray
    iterations: int


def _payloads(x: np.ndarray, sc: ScenarioInstance) -> np.ndarray:
    return np.where(np.asarray(x) > 0, sc.d_kv_bits, sc.d_nl_bits)


def _rates(rho: np.ndarray, sc: ScenarioInstance) -> np.ndarray:
    return rho * sc.bandwidth_hz * np.log2(1.0 + sc.snr / rho)


def ea_prefill_cost(x: np.ndarray, sc: ScenarioInstance) -> float:
    """Prefill latency of the token payloads at the EA; zero if every agent
    ships KV cache."""
    s_tok = float(sc.alpha[np.asarray(x) == 0].sum())
    if s_tok == 0:
        return 0.0
    return prefill_latency(sc.constants, sc.ea_flops, s_tok, s_tok + sc.ea_history)


def _rho_required(d_bits: np.ndarray, sc: ScenarioInstance, target_s: float):
    """Smallest per-agent fractions meeting the target latency, or None if
    some agent cannot meet it even with the whole band."""
    needed_rate = d_bits / target_s
    full_rate = sc.bandwidth_hz * np.log2(1.0 + sc.snr)
    if np.any(full_rate < needed_rate):
        return None
    lo = np.full(sc.aa_count, RHO_FLOOR)
    hi = np.ones(sc.aa_count)
    for _ in range(INNER_ITERS):
        mid = 0.5 * (lo + hi)
        ok = _rates(mid, sc) >= needed_rate
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
        if float(np.max(hi - lo)) < INNER_WIDTH_TOL:
            break
    return hi


def bandwidth_bisection(x: np.ndarray, sc: ScenarioInstance,
                        delta: float = DEFAULT_DELTA) -> BisectionResult:
    """Min-max uplink latency for a fixed mode vector.

    Bisects a common target latency between 0 and the uniform-split worst
    case (feasible by construction); any slack left by the converged
    fractions is handed back proportionally, which can only help.
    """
    if np.any(sc.snr <= 0):
        raise InfeasibleError("an uplink has zero SNR")
    d_bits = _payloads(x, sc)
    uniform = np.full(sc.aa_count, 1.0 / sc.aa_count)
    t_max = float(np.max(d_bits / _rates(uniform, sc)))

    t_low, t_high = 0.0, t_max
    rho_best = _rho_required(d_bits, sc, t_max)
    assert rho_best is not None  # uniform split already achieves t_max
    iters = 0
    while t_high - t_low > delta:
        t_try = 0.5 * (t_low + t_high)
        if t_try <= 0.0:
            break
        req = _rho_required(d_bits, sc, t_try)
        if req is not None and float(req.sum()) <= 1.0:
            t_high, rho_best = t_try, req
        else:
            t_low = t_try
        iters += 1

    rho = rho_best / float(rho_best.sum())  # slack back, proportionally
    tau = float(np.max(d_bits / _rates(rho, sc)))
    return BisectionResult(tau_s=tau, rho=rho, iterations=iters)


def calc_latency(x: np.ndarray, sc: ScenarioInstance,
                 delta: float = DEFAULT_DELTA):
    """Objective J = EA prefill + optimized min-max uplink latency."""
    bres = bandwidth_bisection(x, sc, delta)
    return ea_prefill_cost(x, sc) + bres.tau_s, bres


def greedy_search(x_init: np.ndarray, target_value: int, sc: ScenarioInstance,
                  delta: float = DEFAULT_DELTA):
    """Flip agents toward target_value, steepest improvement first.

    Stops on the first non-improving best flip. Ties among equally good
    flips go to the lowest agent index so traces are deterministic.
    Returns (x, J, trace, evaluations, worst_bisection_iters).
    """
    x = np.array(x_init, dtype=int)
    candidates = [i for i in range(sc.aa_count) if x[i] != target_value]
    j_curr, bres = calc_latency(x, sc, delta)
    evaluations = 1
    worst_iters = bres.iterations
    trace = []
    step = 0
    while candidates:
        best_idx, best_j = None, None
        for i in candidates:
            x[i] = target_value
            j_cand, bres = calc_latency(x, sc, delta)
            x[i] = 1 - target_value
            evaluations += 1
            worst_iters = max(worst_iters, bres.iterations)
            if best_j is None or j_cand < best_j:
                best_idx, best_j = i, j_cand
        if best_j >= j_curr:
            break
        step += 1
        x[best_idx] = target_value
        j_curr = best_j
        candidates.remove(best_idx)
        trace.append((step, best_idx, j_curr))
    return x, j_curr, trace, evaluations, worst_iters


def jmsra(sc: ScenarioInstance, delta: float = DEFAULT_DELTA) -> Assignment:
    """Bidirectional greedy: forward from all-NL, backward from all-KV;
    return the better endpoint (ties favor forward)."""
    I = sc.aa_count
    x_f, j_f, tr_f, ev_f, it_f = greedy_search(np.zeros(I, dtype=int), 1, sc, delta)
    x_b, j_b, tr_b, ev_b, it_b = greedy_search(np.ones(I, dtype=int), 0, sc, delta)
    if j_f <= j_b:
        x_star, direction = x_f, "forward"
    else:
        x_star, direction = x_b, "backward"
    bres = bandwidth_bisection(x_star, sc, delta)
    return Assignment(
        x=x_star,
        rho=bres.rho,
        objective_s=ea_prefill_cost(x_star, sc) + bres.tau_s,
        tau_s=bres.tau_s,
        forward_trace=tr_f,
        backward_trace=tr_b,
        direction=direction,
        evaluations=ev_f + ev_b,
        bisection_iters=max(it_f, it_b, bres.iterations),
    )


def exhaustive_search(sc: ScenarioInstance, delta: float = DEFAULT_DELTA) -> Assignment:
    """Brute-force oracle over every mode vector; guarded to small fleets."""
    I = sc.aa_count
    if I > EXHAUSTIVE_MAX_AGENTS:
        raise ValueError(f"exhaustive search limited to {EXHAUSTIVE_MAX_AGENTS} agents")
    best_x, best_j, best_bres = None, None, None
    evaluations = 0
    worst_iters = 0
    for code in range(2**I):
        x = np.array([(code >> i) & 1 for i in range(I)], dtype=int)
        j, bres = calc_latency(x, sc, delta)
        evaluations += 1
        worst_iters = max(worst_iters, bres.iterations)
        if best_j is None or j < best_j:
            best_x, best_j, best_bres = x, j, bres
    return Assignment(
        x=best_x,
        rho=best_bres.rho,
        objective_s=best_j,
        tau_s=best_bres.tau_s,
        direction="exhaustive",
        evaluations=evaluations,
        bisection_iters=worst_iters,
    )


def baseline(sc: ScenarioInstance, mode: str, allocation: str,
             delta: float = DEFAULT_DELTA) -> Assignment:
    """Static single-medium baselines: mode in {all_nl, all_kv}, allocation
    in {uniform, optimized}."""
    I = sc.aa_count
    if mode == "all_nl":
        x = np.zeros(I, dtype=int)
    elif mode == "all_kv":
        x = np.ones(I, dtype=int)
    else:
        raise ValueError(f"unknown baseline mode {mode!r}")
    if allocation == "uniform":
        rho = np.full(I, 1.0 / I)
        tau = float(np.max(_payloads(x, sc) / _rates(rho, sc)))
        iters = 0
    elif allocation == "optimized":
        bres = bandwidth_bisection(x, sc, delta)
        rho, tau, iters = bres.rho, bres.tau_s, bres.iterations
    else:
        raise ValueError(f"unknown allocation {allocation!r}")
    return Assignment(
        x=x,
        rho=rho,
        objective_s=ea_prefill_cost(x, sc) + tau,
        tau_s=tau,
        direction=f"{mode}_{allocation}",
        evaluations=0,
        bisection_iters=iters,
    )
