"""Batch experiment runner: seeded scenarios to CSV with JSON sidecars.

Every subcommand resolves its parameters from built-in defaults, an optional
JSON config file (exactly one experiment block), and command-line flags, in
that order of precedence; the fully resolved record is written next to the
CSVs so a rerun from the sidecar is byte-identical.

Exit codes: 0 success, 1 validation failure, 2 config/parameter error,
3 unknown model preset, 4 unwritable output.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
import time

import numpy as np

from . import __version__
from .channel import dbm_to_watts, linear_to_db, link_snr, ofdma_rate, path_loss_db
from .channel import LinkBudget
from .decision import (
    TransmissionContext,
    bandwidth_threshold,
    compute_gap_term,
    decision_poly,
    payload_gap_bits,
)
from .optimizer import baseline, calc_latency, exhaustive_search, jmsra
from .scenario import (
    MultiRoundConfig,
    SingleRoundConfig,
    run_multi_round,
    sample_single_round,
)
from .static_e2e import SWEEP_AXES, SweepDefaults, default_grid, ratio_sweep
from .workload import (
    MODEL_PRESETS,
    ModelSpec,
    autoregressive_latency,
    derive_constants,
    prefill_latency,
    total_inference_latency,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_PRESET = 3
EXIT_OUTPUT = 4

ALL_BLOCKS = (
    "ratio_sweep",
    "threshold",
    "single_scenario",
    "bandwidth_sweep",
    "agent_sweep",
    "multiround",
)
COMMAND_BLOCKS = {
    "compare": ("ratio_sweep",),
    "threshold": ("threshold",),
    "jmsra": ("single_scenario",),
    "sweep": ("bandwidth_sweep", "agent_sweep"),
    "multiround": ("multiround",),
}


def _fail(code: int, message: str):
    print(f"error: {message}", file=sys.stderr)
    raise SystemExit(code)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _write_csv(path: str, header, rows) -> None:
    try:
        with open(path, "w", newline="") as f:
            f.write(",".join(header) + "\n")
            for row in rows:
                f.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        _fail(EXIT_OUTPUT, f"cannot write {path}: {exc}")


def _write_sidecar(out_prefix: str, command: str, resolved: dict, extra=None) -> None:
    record = {
        "command": command,
        "version": __version__,
        "resolved": {k: v for k, v in sorted(resolved.items()) if k != "out"},
    }
    if extra:
        record.update(extra)
    path = f"{out_prefix}.json"
    try:
        with open(path, "w", newline="") as f:
            json.dump(record, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        _fail(EXIT_OUTPUT, f"cannot write {path}: {exc}")


def _prefix(out: str) -> str:
    return out[:-4] if out.endswith(".csv") else out


def _parse_grid(spec, integer: bool = False):
    """Grid syntax: 'start:stop:count' or a comma-separated value list."""
    if isinstance(spec, (list, tuple)):
        values = [float(v) for v in spec]
    else:
        text = str(spec)
        try:
            if ":" in text:
                start, stop, count = text.split(":")
                values = list(np.linspace(float(start), float(stop), int(count)))
            else:
                values = [float(v) for v in text.split(",") if v]
        except ValueError:
            _fail(EXIT_CONFIG, f"bad grid {spec!r}; use start:stop:count or v1,v2,...")
    if not values:
        _fail(EXIT_CONFIG, "grid is empty")
    if integer:
        return [int(round(v)) for v in values]
    return [float(v) for v in values]


def _resolve_model(value) -> ModelSpec:
    if isinstance(value, ModelSpec):
        return value
    if isinstance(value, str):
        if value not in MODEL_PRESETS:
            _fail(EXIT_PRESET, f"unknown model preset {value!r}; "
                               f"available: {', '.join(sorted(MODEL_PRESETS))}")
        return MODEL_PRESETS[value]
    if isinstance(value, dict):
        try:
            return ModelSpec(**value)
        except (TypeError, ValueError) as exc:
            _fail(EXIT_CONFIG, f"bad model spec: {exc}")
    _fail(EXIT_CONFIG, f"model must be a preset name or a field mapping, got {value!r}")


def _load_block(config_path, allowed):
    if config_path is None:
        return {}
    try:
        with open(config_path) as f:
            cfg = json.load(f)
    except OSError as exc:
        _fail(EXIT_CONFIG, f"cannot read config {config_path}: {exc}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, f"config {config_path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        _fail(EXIT_CONFIG, "config root must be an object")
    present = [b for b in ALL_BLOCKS if b in cfg]
    if len(present) != 1:
        _fail(EXIT_CONFIG, "config must contain exactly one experiment block "
                           f"out of {', '.join(ALL_BLOCKS)}")
    if present[0] not in allowed:
        _fail(EXIT_CONFIG, f"config block {present[0]!r} does not belong to this subcommand")
    block = dict(cfg[present[0]])
    for key in ("seed", "out", "model"):
        if key in cfg and key not in block:
            block[key] = cfg[key]
    if present[0] == "bandwidth_sweep":
        block.setdefault("axis", "bandwidth")
    elif present[0] == "agent_sweep":
        block.setdefault("axis", "agents")
    return block


def _resolve(args, defaults: dict, allowed_blocks) -> dict:
    resolved = dict(defaults)
    block = _load_block(args.config, allowed_blocks)
    for key, value in block.items():
        if key not in resolved:
            _fail(EXIT_CONFIG, f"unknown config field {key!r}")
        resolved[key] = value
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            resolved[key] = value
    if args.seed is not None:
        resolved["seed"] = args.seed
    if args.out is not None:
        resolved["out"] = args.out
    if args.preset is not None:
        resolved["model"] = args.preset
    return resolved


def _require_seed(resolved: dict) -> int:
    if resolved.get("seed") is None:
        _fail(EXIT_CONFIG, "a seed is required for this experiment (--seed)")
    return int(resolved["seed"])


# ---------------------------------------------------------------------------
# compare: two-round pipeline latency-ratio sweeps
# ---------------------------------------------------------------------------

COMPARE_DEFAULTS = {
    "model": "llama-7b",
    "axis": None,
    "grid": None,
    "s": 1024.0,
    "beta": 1.0,
    "compute_tflops": 10.0,
    "snr_db": 8.0,
    "aa_count": 5,
    "gamma": 2.0,
    "bits_per_token": 16.0,
    "bandwidth_ghz": 2.0,
    "ea_final_out": 100.0,
    "seed": None,
    "out": "compare.csv",
}


def cmd_compare(args) -> int:
    resolved = _resolve(args, COMPARE_DEFAULTS, COMMAND_BLOCKS["compare"])
    axis = resolved["axis"]
    if axis not in SWEEP_AXES:
        _fail(EXIT_CONFIG, f"--axis must be one of {', '.join(SWEEP_AXES)}")
    k = derive_constants(_resolve_model(resolved["model"]))
    grid = (default_grid(axis) if resolved["grid"] is None
            else _parse_grid(resolved["grid"], integer=(axis == "aa_count")))
    resolved["grid"] = list(grid)
    defaults = SweepDefaults(
        s=float(resolved["s"]),
        beta=float(resolved["beta"]),
        compute_tflops=float(resolved["compute_tflops"]),
        snr_db=float(resolved["snr_db"]),
        aa_count=int(resolved["aa_count"]),
        gamma=float(resolved["gamma"]),
        bits_per_token=float(resolved["bits_per_token"]),
        bandwidth_hz=float(resolved["bandwidth_ghz"]) * 1e9,
        ea_final_out=float(resolved["ea_final_out"]),
    )
    rows = ratio_sweep(axis, grid, k, defaults)
    header = ["axis_name", "axis_value", "t_nl_s", "t_kv_s", "ratio",
              "bottleneck_aa_nl", "bottleneck_aa_kv"]
    out = resolved["out"]
    _write_csv(out, header, ([r[h] for h in header] for r in rows))
    _write_sidecar(_prefix(out), "compare", resolved)
    return EXIT_OK


# ---------------------------------------------------------------------------
# threshold: single-link decision polynomial and break-even allocation
# ---------------------------------------------------------------------------

THRESHOLD_DEFAULTS = {
    "model": "llama-7b",
    "alpha": 1024.0,
    "xi": 3072.0,
    "theta": 5120.0,
    "gamma": 2.0,
    "bits_per_token": 16.0,
    "c_tflops": 10.0,
    "distance_m": 7.5,
    "power_dbm": 23.0,
    "fading": 1.0,
    "bandwidth_ghz": 2.0,
    "noise_dbm_per_hz": -140.0,
    "curve_points": 81,
    "xi_grid": "0:8192:17",
    "alpha_grid": "256:4096:16",
    "seed": None,
    "out": "threshold",
}


def _threshold_context(resolved: dict, alpha: float, xi: float) -> TransmissionContext:
    link = LinkBudget(
        tx_power_w=dbm_to_watts(float(resolved["power_dbm"])),
        path_loss_db=path_loss_db(float(resolved["distance_m"])),
        fading_amp=float(resolved["fading"]),
        noise_density_w_hz=dbm_to_watts(float(resolved["noise_dbm_per_hz"])),
        bandwidth_hz=float(resolved["bandwidth_ghz"]) * 1e9,
    )
    return TransmissionContext(
        alpha=alpha,
        xi=xi,
        theta_r=float(resolved["theta"]),
        gamma=float(resolved["gamma"]),
        bits_per_token=float(resolved["bits_per_token"]),
        receiver_flops=float(resolved["c_tflops"]) * 1e12,
        link=link,
    )


def cmd_threshold(args) -> int:
    resolved = _resolve(args, THRESHOLD_DEFAULTS, COMMAND_BLOCKS["threshold"])
    k = derive_constants(_resolve_model(resolved["model"]))
    ctx = _threshold_context(resolved, float(resolved["alpha"]), float(resolved["xi"]))
    poly = decision_poly(k, ctx)
    try:
        rho_star = bandwidth_threshold(k, ctx)
    except ValueError as exc:
        _fail(EXIT_CONFIG, str(exc))
    f_full = poly(ctx.alpha)
    star = "none" if rho_star is None else repr(rho_star)
    print(f"k4={poly.k4!r} k5={poly.k5!r} k6={poly.k6!r} f1={f_full!r} rho_star={star}")

    a_term = compute_gap_term(k, ctx)
    d_bits = payload_gap_bits(k, ctx)
    snr = link_snr(ctx.link)
    curve_rows = []
    for rho in np.geomspace(1e-4, 1.0, int(resolved["curve_points"])):
        rate = ofdma_rate(float(rho), ctx.link.bandwidth_hz, snr)
        curve_rows.append((float(rho), a_term - d_bits / rate))
    prefix = _prefix(resolved["out"])
    _write_csv(f"{prefix}_curve.csv", ["rho", "f_s"], curve_rows)

    surface_rows = []
    for xi in _parse_grid(resolved["xi_grid"]):
        for alpha in _parse_grid(resolved["alpha_grid"]):
            ctx_pt = _threshold_context(resolved, float(alpha), float(xi))
            star_pt = bandwidth_threshold(k, ctx_pt)
            surface_rows.append((float(xi), float(alpha),
                                 float("nan") if star_pt is None else float(star_pt)))
    _write_csv(f"{prefix}_surface.csv", ["xi", "alpha", "rho_star"], surface_rows)
    _write_sidecar(prefix, "threshold", resolved)
    return EXIT_OK


# ---------------------------------------------------------------------------
# jmsra: one randomized contention round, solver vs baselines
# ---------------------------------------------------------------------------

JMSRA_DEFAULTS = {
    "model": "llama-7b",
    "c0_tflops": 5.0,
    "agents": 20,
    "theta0": 5120.0,
    "gamma": 2.0,
    "bits_per_token": 16.0,
    "bandwidth_ghz": 2.0,
    "noise_dbm_per_hz": -140.0,
    "delta": 1e-4,
    "seed": None,
    "out": "jmsra",
}

BASELINE_SCHEMES = (
    ("all_nl", "uniform"),
    ("all_nl", "optimized"),
    ("all_kv", "uniform"),
    ("all_kv", "optimized"),
)


def _single_round_config(resolved: dict) -> SingleRoundConfig:
    return SingleRoundConfig(
        aa_count=int(resolved["agents"]),
        ea_tflops=float(resolved["c0_tflops"]),
        ea_history=float(resolved["theta0"]),
        gamma=float(resolved["gamma"]),
        bits_per_token=float(resolved["bits_per_token"]),
        bandwidth_hz=float(resolved["bandwidth_ghz"]) * 1e9,
        noise_dbm_per_hz=float(resolved["noise_dbm_per_hz"]),
        model=_resolve_model(resolved["model"]),
    )


def cmd_jmsra(args) -> int:
    resolved = _resolve(args, JMSRA_DEFAULTS, COMMAND_BLOCKS["jmsra"])
    seed = _require_seed(resolved)
    delta = float(resolved["delta"])
    instance = sample_single_round(_single_round_config(resolved), seed)
    result = jmsra(instance, delta)

    prefix = _prefix(resolved["out"])
    agent_rows = []
    for i in range(instance.aa_count):
        agent_rows.append((
            i + 1,
            float(instance.distance_m[i]),
            linear_to_db(float(instance.snr[i])),
            float(instance.alpha[i]),
            float(instance.xi[i]),
            "kv" if result.x[i] else "nl",
            float(result.rho[i]),
        ))
    _write_csv(f"{prefix}_agents.csv",
               ["agent_id", "distance_m", "snr_db", "alpha_tokens", "xi_tokens",
                "mode", "rho"],
               agent_rows)

    start_j = {
        "forward": calc_latency(np.zeros(instance.aa_count, dtype=int), instance, delta)[0],
        "backward": calc_latency(np.ones(instance.aa_count, dtype=int), instance, delta)[0],
    }
    footprint_rows = []
    for direction, trace in (("forward", result.forward_trace),
                             ("backward", result.backward_trace)):
        footprint_rows.append((direction, 0, -1, start_j[direction]))
        for step, agent, j in trace:
            footprint_rows.append((direction, step, agent + 1, j))
    _write_csv(f"{prefix}_footprint.csv",
               ["direction", "step", "flipped_agent", "J_s"], footprint_rows)

    summary_rows = [("jmsra", result.objective_s)]
    for mode, allocation in BASELINE_SCHEMES:
        summary_rows.append((f"{mode}_{allocation}",
                             baseline(instance, mode, allocation, delta).objective_s))
    _write_csv(f"{prefix}_summary.csv", ["scheme", "J_s"], summary_rows)

    _write_sidecar(prefix, "jmsra", resolved, extra={"result": {
        "x": [int(v) for v in result.x],
        "rho": [float(v) for v in result.rho],
        "J_s": result.objective_s,
        "tau_s": result.tau_s,
        "trace": {
            "forward": [[s, a + 1, j] for s, a, j in result.forward_trace],
            "backward": [[s, a + 1, j] for s, a, j in result.backward_trace],
            "direction": result.direction,
        },
        "evaluations": result.evaluations,
        "bisection_iters": result.bisection_iters,
    }})
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep: solver vs baselines across bandwidth or fleet size
# ---------------------------------------------------------------------------

SWEEP_DEFAULTS_CLI = {
    "model": "llama-7b",
    "axis": None,
    "grid": None,
    "c0_tflops": 10.0,
    "agents": 20,
    "theta0": 5120.0,
    "gamma": 2.0,
    "bits_per_token": 16.0,
    "bandwidth_ghz": 2.0,
    "noise_dbm_per_hz": -140.0,
    "trials": 5,
    "delta": 1e-4,
    "seed": None,
    "out": "sweep.csv",
}


def _sweep_point(task):
    axis, value, config, seed, trials, delta = task
    sums = {"jmsra": 0.0}
    sums.update({f"{m}_{a}": 0.0 for m, a in BASELINE_SCHEMES})
    for trial in range(trials):
        # One seed stream per trial, shared across grid points, so the
        # channel/workload draws stay fixed while the axis moves.
        instance = sample_single_round(config, [seed, trial])
        sums["jmsra"] += jmsra(instance, delta).objective_s
        for mode, allocation in BASELINE_SCHEMES:
            sums[f"{mode}_{allocation}"] += baseline(
                instance, mode, allocation, delta
            ).objective_s
    return (
        axis,
        value,
        sums["jmsra"] / trials,
        sums["all_nl_uniform"] / trials,
        sums["all_nl_optimized"] / trials,
        sums["all_kv_uniform"] / trials,
        sums["all_kv_optimized"] / trials,
    )


def cmd_sweep(args) -> int:
    resolved = _resolve(args, SWEEP_DEFAULTS_CLI, COMMAND_BLOCKS["sweep"])
    seed = _require_seed(resolved)
    axis = resolved["axis"]
    if axis not in ("bandwidth", "agents"):
        _fail(EXIT_CONFIG, "--axis must be 'bandwidth' or 'agents'")
    if resolved["grid"] is None:
        grid = (list(np.linspace(0.5e9, 4e9, 8)) if axis == "bandwidth"
                else list(range(5, 31)))
    else:
        grid = _parse_grid(resolved["grid"], integer=(axis == "agents"))
    resolved["grid"] = list(grid)
    trials = int(resolved["trials"])
    delta = float(resolved["delta"])

    tasks = []
    for value in grid:
        overrides = dict(resolved)
        if axis == "bandwidth":
            overrides["bandwidth_ghz"] = float(value) / 1e9
        else:
            overrides["agents"] = int(value)
        tasks.append((axis, float(value), _single_round_config(overrides),
                      seed, trials, delta))
    # Grid points are independent; rows come back in deterministic grid order.
    with concurrent.futures.ProcessPoolExecutor() as pool:
        rows = list(pool.map(_sweep_point, tasks))
    _write_csv(resolved["out"],
               ["axis_name", "axis_value", "jmsra_s", "all_nl_uniform_s",
                "all_nl_opt_s", "all_kv_uniform_s", "all_kv_opt_s"],
               rows)
    _write_sidecar(_prefix(resolved["out"]), "sweep", resolved)
    return EXIT_OK


# ---------------------------------------------------------------------------
# multiround: dialogue engine traces per policy
# ---------------------------------------------------------------------------

MULTIROUND_DEFAULTS = {
    "model": "llama-7b",
    "rounds": 30,
    "policy": "jmsra",
    "agents": 20,
    "c0_tflops": 20.0,
    "gamma": 2.0,
    "bits_per_token": 16.0,
    "bandwidth_ghz": 2.0,
    "noise_dbm_per_hz": -140.0,
    "delta": 1e-4,
    "seed": None,
    "out": "multiround",
}


def cmd_multiround(args) -> int:
    resolved = _resolve(args, MULTIROUND_DEFAULTS, COMMAND_BLOCKS["multiround"])
    seed = _require_seed(resolved)
    policies = (["jmsra", "all_nl", "all_kv"] if resolved["policy"] == "all"
                else [resolved["policy"]])
    for policy in policies:
        if policy not in ("jmsra", "all_nl", "all_kv"):
            _fail(EXIT_CONFIG, f"unknown policy {resolved['policy']!r}")
    config = MultiRoundConfig(
        aa_count_max=int(resolved["agents"]),
        ea_tflops=float(resolved["c0_tflops"]),
        gamma=float(resolved["gamma"]),
        bits_per_token=float(resolved["bits_per_token"]),
        bandwidth_hz=float(resolved["bandwidth_ghz"]) * 1e9,
        noise_dbm_per_hz=float(resolved["noise_dbm_per_hz"]),
        model=_resolve_model(resolved["model"]),
    )
    prefix = _prefix(resolved["out"])
    trace_header = ["round", "agent_id", "active", "mode", "rho",
                    "prefill_s", "decode_s", "comm_s", "theta", "xi"]
    ea_rows = []
    for policy in policies:
        traces = run_multi_round(config, int(resolved["rounds"]), seed, policy,
                                 float(resolved["delta"]))
        trace_rows = []
        for t in traces:
            trace_rows.append((t.round_index, 0, 1, t.ea_mode.value, 1.0,
                               t.ea_prefill_s, t.ea_decode_s, t.ea_comm_s,
                               t.ea_theta, t.ea_xi))
            for i in range(config.aa_count_max):
                if i in t.aa_modes:
                    trace_rows.append((t.round_index, i + 1, 1, t.aa_modes[i].value,
                                       t.rho[i], t.aa_prefill_s[i], t.aa_decode_s[i],
                                       t.aa_comm_s[i], t.theta[i], t.xi[i]))
                else:
                    trace_rows.append((t.round_index, i + 1, 0, "", 0.0,
                                       0.0, 0.0, 0.0, t.theta[i], t.xi[i]))
            ea_rows.append((policy, t.round_index, t.ea_theta, t.ea_prefill_s,
                            t.ea_decode_s, t.ea_prefill_s + t.ea_decode_s))
        _write_csv(f"{prefix}_trace_{policy}.csv", trace_header, trace_rows)
    _write_csv(f"{prefix}_ea.csv",
               ["policy", "round", "theta0", "prefill_s", "decode_s", "total_s"],
               ea_rows)
    _write_sidecar(prefix, "multiround", resolved)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate: fast self-checks of the analytic core and the solver
# ---------------------------------------------------------------------------

def _check_constants() -> bool:
    k = derive_constants(MODEL_PRESETS["llama-7b"])
    return (k.k1, k.k2, k.k3) == (262_144, 10_066_329_600, 262_144_000)


def _check_phase_identity() -> bool:
    k = derive_constants(MODEL_PRESETS["llama-7b"])
    rng = np.random.default_rng(0)
    for _ in range(1000):
        s = float(rng.integers(1, 4096))
        alpha = float(rng.integers(1, 4096))
        theta = float(rng.integers(0, 8192))
        c = float(rng.uniform(1e11, 1e14))
        phi = s + theta
        total = prefill_latency(k, c, s, phi) + autoregressive_latency(k, c, alpha, phi)
        closed = total_inference_latency(k, c, alpha, phi, s)
        if abs(total - closed) > 1e-12 * closed:
            return False
    return True


def _random_context(rng) -> TransmissionContext:
    link = LinkBudget(
        tx_power_w=dbm_to_watts(float(rng.uniform(10, 23))),
        path_loss_db=path_loss_db(float(rng.uniform(5, 10))),
        fading_amp=float(rng.rayleigh(scale=2 ** -0.5)) + 1e-6,
        noise_density_w_hz=1e-17,
        bandwidth_hz=2e9,
    )
    return TransmissionContext(
        alpha=float(rng.uniform(64, 4096)),
        xi=float(rng.uniform(0, 8192)),
        theta_r=float(rng.uniform(0, 8192)),
        gamma=float(rng.uniform(1, 8)),
        bits_per_token=16.0,
        receiver_flops=float(rng.uniform(1e12, 5e13)),
        link=link,
    )


def _check_threshold_properties() -> bool:
    k = derive_constants(MODEL_PRESETS["llama-7b"])
    rng = np.random.default_rng(1)
    for _ in range(200):
        ctx = _random_context(rng)
        a_term = compute_gap_term(k, ctx)
        d_bits = payload_gap_bits(k, ctx)
        if d_bits <= 0:
            continue
        snr = link_snr(ctx.link)
        rho1, rho2 = sorted(rng.uniform(1e-3, 1.0, size=2))
        f1 = a_term - d_bits / ofdma_rate(float(rho1), 2e9, snr)
        f2 = a_term - d_bits / ofdma_rate(float(rho2), 2e9, snr)
        if rho1 < rho2 and not f1 < f2:
            return False
        f_full = a_term - d_bits / ofdma_rate(1.0, 2e9, snr)
        star = bandwidth_threshold(k, ctx)
        if (star is not None) != (f_full > 0):
            return False
        if star is not None:
            f_star = a_term - d_bits / ofdma_rate(star, 2e9, snr)
            if abs(f_star) > 1e-6 * abs(a_term):
                return False
    return True


def _check_small_fleet_optimality() -> bool:
    for trial in range(20):
        config = SingleRoundConfig(aa_count=4 + trial % 3, ea_tflops=5.0)
        instance = sample_single_round(config, [7, trial])
        approx = jmsra(instance).objective_s
        exact = exhaustive_search(instance).objective_s
        if approx < exact - 1e-9 or approx > 1.05 * exact:
            return False
    return True


VALIDATION_CHECKS = (
    ("constant_derivation", _check_constants),
    ("phase_sum_identity", _check_phase_identity),
    ("threshold_monotonicity", _check_threshold_properties),
    ("small_fleet_vs_exhaustive", _check_small_fleet_optimality),
)


def cmd_validate(args) -> int:
    all_passed = True
    for name, check in VALIDATION_CHECKS:
        started = time.perf_counter()
        passed = bool(check())
        elapsed = time.perf_counter() - started
        all_passed = all_passed and passed
        print(json.dumps({"check": name, "passed": passed,
                          "seconds": round(elapsed, 3)}))
    return EXIT_OK if all_passed else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config with one experiment block")
    parser.add_argument("--seed", type=int, help="root RNG seed")
    parser.add_argument("--out", help="output CSV path or path prefix")
    parser.add_argument("--preset", help="model preset name")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kvlink",
        description="Latency experiments for token vs KV-cache agent communication.",
    )
    parser.add_argument("--version", action="version", version=f"kvlink {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="two-round pipeline latency-ratio sweep")
    _add_common(p)
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--grid", help="start:stop:count or comma list")
    for flag in ("--s", "--beta", "--compute-tflops", "--snr-db", "--gamma",
                 "--bits-per-token", "--bandwidth-ghz", "--ea-final-out"):
        p.add_argument(flag, type=float)
    p.add_argument("--aa-count", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("threshold", help="single-link decision polynomial and rho*")
    _add_common(p)
    for flag in ("--alpha", "--xi", "--theta", "--gamma", "--bits-per-token",
                 "--c-tflops", "--distance-m", "--power-dbm", "--fading",
                 "--bandwidth-ghz", "--noise-dbm-per-hz"):
        p.add_argument(flag, type=float)
    p.add_argument("--curve-points", type=int)
    p.add_argument("--xi-grid")
    p.add_argument("--alpha-grid")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("jmsra", help="solve one randomized contention round")
    _add_common(p)
    p.add_argument("--c0-tflops", type=float)
    p.add_argument("--agents", type=int)
    for flag in ("--theta0", "--gamma", "--bits-per-token", "--bandwidth-ghz",
                 "--noise-dbm-per-hz", "--delta"):
        p.add_argument(flag, type=float)
    p.set_defaults(func=cmd_jmsra)

    p = sub.add_parser("sweep", help="solver vs baselines across one axis")
    _add_common(p)
    p.add_argument("--axis", choices=("bandwidth", "agents"))
    p.add_argument("--grid", help="start:stop:count or comma list")
    p.add_argument("--agents", type=int)
    p.add_argument("--trials", type=int)
    for flag in ("--c0-tflops", "--theta0", "--gamma", "--bits-per-token",
                 "--bandwidth-ghz", "--noise-dbm-per-hz", "--delta"):
        p.add_argument(flag, type=float)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("multiround", help="multi-round dialogue traces")
    _add_common(p)
    p.add_argument("--rounds", type=int)
    p.add_argument("--policy", choices=("jmsra", "all_nl", "all_kv", "all"))
    p.add_argument("--agents", type=int)
    for flag in ("--c0-tflops", "--gamma", "--bits-per-token", "--bandwidth-ghz",
                 "--noise-dbm-per-hz", "--delta"):
        p.add_argument(flag, type=float)
    p.set_defaults(func=cmd_multiround)

    p = sub.add_parser("validate", help="run the built-in self checks")
    _add_common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
