"""Randomized scenario generation and the multi-round dialogue engine.

Single-round instances reproduce the validation setup: agents scattered in an
annulus around the leader, Rayleigh fading, uniform draws for power and
output length. The multi-round engine threads per-agent context ledgers
(history theta, unshared KV debt xi) across rounds, with hard context limits
and a sliding window on the debt; transmitting KV clears the debt.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import LinkBudget, dbm_to_watts, path_loss_db, sample_rayleigh
from .decision import ModeChoice, TransmissionContext, broadcast_mode_select
from .optimizer import (
    Assignment,
    DEFAULT_DELTA,
    ScenarioInstance,
    baseline,
    jmsra,
)
from .workload import (
    MODEL_PRESETS,
    ModelSpec,
    WorkloadConstants,
    autoregressive_latency,
    derive_constants,
    kv_payload_bits,
    prefill_latency,
    token_payload_bits,
)

__all__ = [
    "SingleRoundConfig",
    "MultiRoundConfig",
    "AgentLedger",
    "RoundTrace",
    "MultiRoundState",
    "sample_single_round",
    "new_multi_round_state",
    "step_multi_round",
    "run_multi_round",
    "POLICIES",
]

POLICIES = ("jmsra", "all_nl", "all_kv")


@dataclass(frozen=True)
class SingleRoundConfig:
    """Randomized single-round contention setup (validation defaults)."""

    aa_count: int
    ea_tflops: float
    distance_m_range: tuple = (5.0, 10.0)
    power_dbm_range: tuple = (10.0, 23.0)
    alpha_base: float = 1024.0
    alpha_jitter: tuple = (0.8, 1.2)
    xi_ratio_range: tuple = (2.8, 3.2)
    ea_history: float = 1024.0 * 5
    gamma: float = 2.0
    bits_per_token: float = 16.0
    bandwidth_hz: float = 2e9
    noise_dbm_per_hz: float = -140.0
    model: ModelSpec = MODEL_PRESETS["llama-7b"]


def sample_single_round(config: SingleRoundConfig, seed: int) -> ScenarioInstance:
    """Draw one contention round; identical seeds give identical instances."""
    rng = np.random.default_rng(seed)
    I = config.aa_count
    k = derive_constants(config.model)
    n0 = dbm_to_watts(config.noise_dbm_per_hz)

    d = rng.uniform(*config.distance_m_range, size=I)
    p_dbm = rng.uniform(*config.power_dbm_range, size=I)
    h = sample_rayleigh(rng, size=I)
    lo, hi = config.alpha_jitter
    alpha = config.alpha_base * rng.uniform(lo, hi, size=I)
    xi = rng.uniform(*config.xi_ratio_range, size=I) * alpha

    gain = 10.0 ** (-np.array([path_loss_db(x) for x in d]) / 10.0) * h**2
    snr = dbm_to_watts(0) * 10.0 ** (p_dbm / 10.0) * gain / (config.bandwidth_hz * n0)
    d_nl = token_payload_bits(1.0, config.bits_per_token) * alpha
    d_kv = np.array([kv_payload_bits(k, xi[i] + alpha[i], config.gamma) for i in range(I)])
    return ScenarioInstance(
        snr=snr,
        d_nl_bits=d_nl,
        d_kv_bits=d_kv,
        alpha=alpha,
        bandwidth_hz=config.bandwidth_hz,
        ea_flops=config.ea_tflops * 1e12,
        ea_history=config.ea_history,
        constants=k,
        distance_m=d,
        tx_power_dbm=p_dbm,
        xi=xi,
    )


@dataclass(frozen=True)
class MultiRoundConfig:
    """Dynamic multi-round dialogue setup."""

    aa_count_max: int = 20
    ea_tflops: float = 20.0
    aa_tflops_range: tuple = (5.0, 15.0)
    ea_power_dbm: float = 30.0
    power_dbm_range: tuple = (10.0, 23.0)
    distance_m_range: tuple = (5.0, 10.0)
    tokens_per_turn: float = 1024.0      # s and alpha for every agent, every round
    ea_context_limit: float = 1024.0 * 20 * 20
    ea_debt_window: float = 1024.0 * 20 * 5
    aa_context_limit: float = 1024.0 * 50
    aa_debt_window: float = 1024.0 * 10
    active_probability: float = 0.75
    gamma: float = 2.0
    bits_per_token: float = 16.0
    bandwidth_hz: float = 2e9
    noise_dbm_per_hz: float = -140.0
    model: ModelSpec = MODEL_PRESETS["llama-7b"]

    def __post_init__(self):
        if self.ea_debt_window > self.ea_context_limit:
            raise ValueError("EA debt window cannot exceed its context limit")
        if self.aa_debt_window > self.aa_context_limit:
            raise ValueError("AA debt window cannot exceed its context limit")
        if not 1 <= self.aa_count_max:
            raise ValueError("need at least one AA")


@dataclass
class AgentLedger:
    """Context bookkeeping for one agent.

    theta counts everything in the context window (capped, oldest evicted);
    xi counts tokens the counterpart still lacks the KV cache for (capped by
    the sliding window, cleared on KV transmission).
    """

    theta: float = 0.0
    xi: float = 0.0
    context_limit: float = float("inf")
    debt_window: float = float("inf")

    def append(self, tokens: float, shared: bool) -> None:
        """Add tokens to the context; unshared tokens also accrue debt."""
        self.theta += float(tokens)
        if not shared:
            self.xi += float(tokens)
        self._enforce()

    def clear_debt(self) -> None:
        self.xi = 0.0

    def _enforce(self) -> None:
        # Oldest-first eviction; evicted tokens leave the debt too (xi <= theta).
        self.theta = min(self.theta, self.context_limit)
        self.xi = min(self.xi, self.debt_window, self.theta)


@dataclass
class MultiRoundState:
    """Everything that persists between rounds."""

    config: MultiRoundConfig
    seed: int
    round_index: int
    ea_ledger: AgentLedger
    aa_ledgers: list
    aa_tflops: np.ndarray
    aa_power_dbm: np.ndarray
    constants: WorkloadConstants


@dataclass
class RoundTrace:
    """What happened in one round, for CSV emission and assertions."""

    round_index: int
    active: list
    ea_mode: Optional[ModeChoice]
    aa_modes: dict                  # agent id -> ModeChoice
    rho: dict                       # agent id -> uplink fraction
    ea_prefill_s: float
    ea_decode_s: float
    ea_comm_s: float
    aa_comm_s: dict                 # agent id -> uplink seconds
    aa_prefill_s: dict
    aa_decode_s: dict
    objective_s: float
    ea_theta: float
    ea_xi: float
    theta: dict                     # AA index -> history after the round
    xi: dict                        # AA index -> debt after the round
    assignment: Optional[Assignment] = None


def new_multi_round_state(config: MultiRoundConfig, seed: int) -> MultiRoundState:
    """Fixed per-agent capabilities are drawn once from the root seed."""
    k = derive_constants(config.model)
    rng = np.random.default_rng([seed, 0])
    tf = rng.uniform(*config.aa_tflops_range, size=config.aa_count_max)
    p = rng.uniform(*config.power_dbm_range, size=config.aa_count_max)
    ledgers = [
        AgentLedger(context_limit=config.aa_context_limit, debt_window=config.aa_debt_window)
        for _ in range(config.aa_count_max)
    ]
    return MultiRoundState(
        config=config,
        seed=seed,
        round_index=0,
        ea_ledger=AgentLedger(
            context_limit=config.ea_context_limit, debt_window=config.ea_debt_window
        ),
        aa_ledgers=ledgers,
        aa_tflops=tf,
        aa_power_dbm=p,
        constants=k,
    )


def _round_rng(state: MultiRoundState, stream: int) -> np.random.Generator:
    # Streams are keyed by (seed, round, stream tag) so the draws for one
    # round never depend on policy history.
    return np.random.default_rng([state.seed, 1 + state.round_index, stream])


def _draw_active(state: MultiRoundState) -> list:
    cfg = state.config
    tag = 0
    while True:
        rng = np.random.default_rng([state.seed, 1 + state.round_index, 100 + tag])
        active = [i for i in range(cfg.aa_count_max)
                  if rng.random() < cfg.active_probability]
        if active:
            return active
        tag += 1


def step_multi_round(state: MultiRoundState, policy: str = "jmsra",
                     delta: float = DEFAULT_DELTA) -> RoundTrace:
    """Advance one dialogue round and mutate the ledgers in place.

    Flow: EA decodes its turn and broadcasts (min-max media choice); active
    AAs ingest, sense, decode; the uplink media/bandwidth problem is solved
    (JMSRA or a forced baseline); the EA ingests the replies.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    cfg = state.config
    k = state.constants
    n0 = dbm_to_watts(cfg.noise_dbm_per_hz)
    tokens = cfg.tokens_per_turn
    first_round = state.round_index == 0

    active = _draw_active(state)
    rng = _round_rng(state, 1)
    d = rng.uniform(*cfg.distance_m_range, size=len(active))
    h_down = sample_rayleigh(rng, size=len(active))
    h_up = sample_rayleigh(rng, size=len(active))

    ea = state.ea_ledger
    ea_prefill = 0.0
    if first_round:
        # Task prompt arrives from outside; it is unshared context.
        ea_prefill += prefill_latency(k, cfg.ea_tflops * 1e12, tokens, tokens)
        ea.append(tokens, shared=False)

    # --- EA turn: decode, then pick the broadcast medium ---------------------
    ea_decode = autoregressive_latency(k, cfg.ea_tflops * 1e12, tokens, ea.theta)
    ea_debt = min(ea.xi, cfg.ea_debt_window)
    contexts = []
    for idx, i in enumerate(active):
        link = LinkBudget(
            tx_power_w=dbm_to_watts(cfg.ea_power_dbm),
            path_loss_db=path_loss_db(float(d[idx])),
            fading_amp=float(h_down[idx]),
            noise_density_w_hz=n0,
            bandwidth_hz=cfg.bandwidth_hz,
        )
        contexts.append(TransmissionContext(
            alpha=tokens,
            xi=ea_debt,
            theta_r=state.aa_ledgers[i].theta,
            gamma=cfg.gamma,
            bits_per_token=cfg.bits_per_token,
            receiver_flops=float(state.aa_tflops[i]) * 1e12,
            link=link,
        ))
    if policy == "all_nl":
        ea_mode = ModeChoice.NL
    elif policy == "all_kv":
        ea_mode = ModeChoice.KV
    else:
        ea_mode = broadcast_mode_select(k, contexts)

    worst_snr = min(
        c.link.tx_power_w
        * 10 ** (-c.link.path_loss_db / 10) * c.link.fading_amp**2
        / (cfg.bandwidth_hz * n0)
        for c in contexts
    )
    r0 = cfg.bandwidth_hz * np.log2(1.0 + worst_snr)
    if ea_mode is ModeChoice.KV:
        broadcast_positions = ea_debt + tokens
        ea_comm = kv_payload_bits(k, broadcast_positions, cfg.gamma) / r0
    else:
        broadcast_positions = tokens
        ea_comm = token_payload_bits(tokens, cfg.bits_per_token) / r0

    ea.append(tokens, shared=(ea_mode is ModeChoice.KV))
    if ea_mode is ModeChoice.KV:
        ea.clear_debt()

    # --- AA turns: ingest broadcast, sense, decode ---------------------------
    aa_prefill = {}
    aa_decode = {}
    for idx, i in enumerate(active):
        led = state.aa_ledgers[i]
        c_i = float(state.aa_tflops[i]) * 1e12
        led.append(broadcast_positions, shared=(ea_mode is ModeChoice.KV))
        prefill_tokens = (broadcast_positions if ea_mode is ModeChoice.NL else 0.0) + tokens
        aa_prefill[i] = prefill_latency(k, c_i, prefill_tokens, led.theta + tokens)
        led.append(tokens, shared=False)  # sensed input, unknown to the EA
        aa_decode[i] = autoregressive_latency(k, c_i, tokens, led.theta)

    # --- uplink contention: media selection + bandwidth split ----------------
    debts = np.array([min(state.aa_ledgers[i].xi, cfg.aa_debt_window) for i in active])
    gain = 10.0 ** (-np.array([path_loss_db(float(x)) for x in d]) / 10.0) * h_up**2
    snr = (
        10.0 ** (state.aa_power_dbm[active] / 10.0) * 1e-3 * gain
        / (cfg.bandwidth_hz * n0)
    )
    instance = ScenarioInstance(
        snr=snr,
        d_nl_bits=np.full(len(active), token_payload_bits(tokens, cfg.bits_per_token)),
        d_kv_bits=np.array([kv_payload_bits(k, xi_i + tokens, cfg.gamma) for xi_i in debts]),
        alpha=np.full(len(active), tokens),
        bandwidth_hz=cfg.bandwidth_hz,
        ea_flops=cfg.ea_tflops * 1e12,
        ea_history=ea.theta,
        constants=k,
        distance_m=d,
        xi=debts,
    )
    if policy == "jmsra":
        assignment = jmsra(instance, delta)
    else:
        assignment = baseline(instance, policy, "optimized", delta)
    ea_prefill += ea_prefill_from_assignment(assignment, instance)

    # --- ledger settlement ---------------------------------------------------
    aa_modes = {}
    rho = {}
    aa_comm = {}
    rates = assignment.rho * cfg.bandwidth_hz * np.log2(1.0 + snr / assignment.rho)
    for idx, i in enumerate(active):
        led = state.aa_ledgers[i]
        kv_chosen = assignment.x[idx] == 1
        aa_modes[i] = ModeChoice.KV if kv_chosen else ModeChoice.NL
        rho[i] = float(assignment.rho[idx])
        led.append(tokens, shared=kv_chosen)  # the generated reply
        if kv_chosen:
            payload = instance.d_kv_bits[idx]
            received = debts[idx] + tokens
            led.clear_debt()
        else:
            payload = instance.d_nl_bits[idx]
            received = tokens
        aa_comm[i] = float(payload / rates[idx])
        # Whatever arrives is new EA context the other AAs do not share.
        ea.append(received, shared=False)

    state.round_index += 1
    trace = RoundTrace(
        round_index=state.round_index,
        active=active,
        ea_mode=ea_mode,
        aa_modes=aa_modes,
        rho=rho,
        ea_prefill_s=ea_prefill,
        ea_decode_s=ea_decode,
        ea_comm_s=float(ea_comm),
        aa_comm_s=aa_comm,
        aa_prefill_s=aa_prefill,
        aa_decode_s=aa_decode,
        objective_s=float(assignment.objective_s),
        ea_theta=ea.theta,
        ea_xi=ea.xi,
        theta={i: state.aa_ledgers[i].theta for i in range(cfg.aa_count_max)},
        xi={i: state.aa_ledgers[i].xi for i in range(cfg.aa_count_max)},
        assignment=assignment,
    )
    return trace


def ea_prefill_from_assignment(assignment: Assignment, instance: ScenarioInstance) -> float:
    """Prefill the EA pays for the token payloads of this assignment."""
    s_tok = float(instance.alpha[assignment.x == 0].sum())
    if s_tok == 0:
        return 0.0
    return prefill_latency(
        instance.constants, instance.ea_flops, s_tok, s_tok + instance.ea_history
    )


def run_multi_round(config: MultiRoundConfig, rounds: int, seed: int,
                    policy: str = "jmsra", delta: float = DEFAULT_DELTA) -> list:
    """Run a full dialogue; returns one RoundTrace per round."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    state = new_multi_round_state(config, seed)
    return [step_multi_round(state, policy, delta) for _ in range(rounds)]
