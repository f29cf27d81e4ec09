"""kvlink: latency modeling and media/bandwidth optimization for wireless
multi-agent LLM collaboration.

Agents exchange context either as discrete tokens (cheap to send, the
receiver re-runs prefill) or as KV-cache tensors (heavy on the wire, free at
the receiver). The package prices both media analytically, decides per link,
and jointly optimizes media selection and OFDMA bandwidth across contending
agents.
"""

from .workload import (
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
from .channel import (
    LinkBudget,
    broadcast_rate,
    db_to_linear,
    dbm_to_watts,
    linear_to_db,
    link_snr,
    ofdma_rate,
    path_loss_db,
    sample_rayleigh,
)
from .static_e2e import (
    ComputeSet,
    DialogueShape,
    LinkSet,
    ModeLatencyBreakdown,
    SweepDefaults,
    default_grid,
    kv_mode_latency,
    nl_mode_latency,
    ratio_sweep,
)
from .decision import (
    ModeChoice,
    TransmissionContext,
    bandwidth_threshold,
    broadcast_mode_select,
    decision_poly,
    marginal_latency_kv,
    marginal_latency_nl,
    select_mode,
)
from .optimizer import (
    Assignment,
    InfeasibleError,
    ScenarioInstance,
    bandwidth_bisection,
    baseline,
    calc_latency,
    exhaustive_search,
    jmsra,
)
from .scenario import (
    AgentLedger,
    MultiRoundConfig,
    RoundTrace,
    SingleRoundConfig,
    run_multi_round,
    sample_single_round,
    step_multi_round,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # workload
    "ModelSpec", "WorkloadConstants", "MODEL_PRESETS", "derive_constants",
    "prefill_latency", "autoregressive_latency", "total_inference_latency",
    "kv_payload_bits", "token_payload_bits",
    # channel
    "LinkBudget", "path_loss_db", "db_to_linear", "linear_to_db",
    "dbm_to_watts", "link_snr", "ofdma_rate", "broadcast_rate", "sample_rayleigh",
    # static pipelines
    "DialogueShape", "ComputeSet", "LinkSet", "ModeLatencyBreakdown",
    "SweepDefaults", "nl_mode_latency", "kv_mode_latency", "ratio_sweep",
    "default_grid",
    # decision
    "ModeChoice", "TransmissionContext", "decision_poly", "select_mode",
    "bandwidth_threshold", "broadcast_mode_select",
    "marginal_latency_nl", "marginal_latency_kv",
    # optimizer
    "ScenarioInstance", "Assignment", "InfeasibleError", "bandwidth_bisection",
    "calc_latency", "jmsra", "exhaustive_search", "baseline",
    # scenario
    "SingleRoundConfig", "MultiRoundConfig", "AgentLedger", "RoundTrace",
    "sample_single_round", "step_multi_round", "run_multi_round",
]
