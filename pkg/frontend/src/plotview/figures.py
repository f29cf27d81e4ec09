"""Figure renderers for the kvlink CLI's CSV outputs.

Each figure class maps one (or two) CSV schemas onto a single image. Styling
is incidental; the contractual part is the data mapping — axes, series, the
shading split at ratio = 1, and the round-by-agent grid of the heatmap.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

__all__ = ["FIGURE_CLASSES", "FigureRequest", "SchemaError", "render"]


class SchemaError(ValueError):
    """Input CSV does not match the producing command's schema."""


@dataclass(frozen=True)
class FigureRequest:
    figure_class: str
    inputs: Sequence[Path]
    output: Path


def _load(path: Path, required: Sequence[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: empty CSV, nothing to render") from None
    missing = [col for col in required if col not in frame.columns]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
    if frame.empty:
        raise SchemaError(f"{path}: no data rows")
    return frame


def _single_input(request: FigureRequest) -> Path:
    if len(request.inputs) != 1:
        raise SchemaError(
            f"{request.figure_class} takes exactly one input CSV, "
            f"got {len(request.inputs)}"
        )
    return request.inputs[0]


def _save(fig, request: FigureRequest) -> None:
    request.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(request.output, dpi=150, bbox_inches="tight")
    plt.close(fig)


def _render_ratio(request: FigureRequest) -> None:
    frame = _load(
        _single_input(request),
        ["axis_name", "axis_value", "t_nl_s", "t_kv_s", "ratio"],
    )
    axis_name = str(frame["axis_name"].iloc[0])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(frame["axis_value"], frame["ratio"], marker="o", color="black",
            label="token / cache latency ratio")
    top = max(float(frame["ratio"].max()) * 1.05, 1.2)
    bottom = min(float(frame["ratio"].min()) * 0.95, 0.8)
    # Shade the two regimes either side of the break-even line.
    ax.axhspan(1.0, top, color="tab:green", alpha=0.15)
    ax.axhspan(bottom, 1.0, color="tab:red", alpha=0.15)
    ax.axhline(1.0, color="gray", linestyle="--", linewidth=1)
    ax.set_ylim(bottom, top)
    ax.set_xlabel(axis_name)
    ax.set_ylabel("latency ratio")
    ax.legend(loc="best")
    _save(fig, request)


def _render_footprint(request: FigureRequest) -> None:
    if not 1 <= len(request.inputs) <= 2:
        raise SchemaError("footprint takes a trace CSV and an optional summary CSV")
    trace = _load(request.inputs[0], ["direction", "step", "flipped_agent", "J_s"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for direction, marker in (("forward", "o"), ("backward", "s")):
        sub = trace[trace["direction"] == direction]
        if not sub.empty:
            ax.plot(sub["step"], sub["J_s"], marker=marker,
                    label=f"{direction} search")
    if len(request.inputs) == 2:
        summary = _load(request.inputs[1], ["scheme", "J_s"])
        styles = {"all_nl_uniform": ":", "all_kv_uniform": "-."}
        for scheme, style in styles.items():
            row = summary[summary["scheme"] == scheme]
            if not row.empty:
                ax.axhline(float(row["J_s"].iloc[0]), linestyle=style,
                           color="gray", label=scheme)
    ax.set_xlabel("greedy step")
    ax.set_ylabel("objective latency (s)")
    ax.legend(loc="best")
    _save(fig, request)


def _render_topology(request: FigureRequest) -> None:
    frame = _load(
        _single_input(request),
        ["agent_id", "distance_m", "snr_db", "alpha_tokens", "xi_tokens",
         "mode", "rho"],
    )
    angles = np.linspace(0.0, 2.0 * np.pi, len(frame), endpoint=False)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter([0.0], [0.0], marker="*", s=300, color="black", zorder=3,
               label="hub")
    colors = {"nl": "tab:red", "kv": "tab:green"}
    for (_, row), angle in zip(frame.iterrows(), angles):
        x = row["distance_m"] * np.cos(angle)
        y = row["distance_m"] * np.sin(angle)
        mode = str(row["mode"])
        ax.plot([0.0, x], [0.0, y], color="lightgray", linewidth=1, zorder=1)
        ax.scatter([x], [y], s=120 + 2000 * float(row["rho"]),
                   color=colors.get(mode, "tab:blue"), zorder=2)
        ax.annotate(f"{int(row['agent_id'])}", (x, y),
                    ha="center", va="center", fontsize=8)
    handles = [
        plt.Line2D([], [], marker="o", linestyle="", color=c, label=m)
        for m, c in colors.items()
    ]
    ax.legend(handles=handles + ax.get_legend_handles_labels()[0], loc="upper right")
    ax.set_xlabel("meters")
    ax.set_ylabel("meters")
    ax.set_aspect("equal")
    _save(fig, request)


def _render_sweep(request: FigureRequest) -> None:
    series = ["jmsra_s", "all_nl_uniform_s", "all_nl_opt_s",
              "all_kv_uniform_s", "all_kv_opt_s"]
    frame = _load(_single_input(request), ["axis_name", "axis_value"] + series)
    axis_name = str(frame["axis_name"].iloc[0])
    fig, ax = plt.subplots(figsize=(6, 4))
    for column in series:
        ax.plot(frame["axis_value"], frame[column], marker="o",
                label=column[:-2].replace("_", " "))
    ax.set_xlabel(axis_name)
    ax.set_ylabel("latency (s)")
    ax.set_yscale("log")
    ax.legend(loc="best")
    _save(fig, request)


_MODE_LEVELS = {"inactive": 0, "nl": 1, "kv": 2}


def _render_heatmap(request: FigureRequest) -> None:
    frame = _load(
        _single_input(request),
        ["round", "agent_id", "active", "mode", "rho", "prefill_s",
         "decode_s", "comm_s", "theta", "xi"],
    )
    level = frame.apply(
        lambda row: _MODE_LEVELS.get(str(row["mode"]), 0)
        if bool(row["active"]) and str(row["active"]).lower() != "false"
        else 0,
        axis=1,
    )
    grid = frame.assign(level=level).pivot_table(
        index="agent_id", columns="round", values="level", aggfunc="max",
        fill_value=0,
    )
    fig, ax = plt.subplots(figsize=(8, 4))
    cmap = matplotlib.colors.ListedColormap(["lightgray", "tab:red", "tab:green"])
    mesh = ax.pcolormesh(
        grid.columns, grid.index, grid.to_numpy(),
        cmap=cmap, vmin=-0.5, vmax=2.5, shading="nearest",
    )
    bar = fig.colorbar(mesh, ticks=[0, 1, 2])
    bar.ax.set_yticklabels(["inactive", "token", "cache"])
    ax.set_xlabel("round")
    ax.set_ylabel("agent")
    _save(fig, request)


def _render_ea_breakdown(request: FigureRequest) -> None:
    frame = _load(
        _single_input(request),
        ["policy", "round", "theta0", "prefill_s", "decode_s", "total_s"],
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    for policy, sub in frame.groupby("policy"):
        line, = ax.plot(sub["round"], sub["total_s"], marker="o",
                        label=f"{policy} total")
        ax.plot(sub["round"], sub["prefill_s"], linestyle="--",
                color=line.get_color(), label=f"{policy} prefill")
    ax.set_xlabel("round")
    ax.set_ylabel("hub latency (s)")
    ax.legend(loc="best")
    _save(fig, request)


FIGURE_CLASSES = {
    "ratio": _render_ratio,
    "footprint": _render_footprint,
    "topology": _render_topology,
    "sweep": _render_sweep,
    "heatmap": _render_heatmap,
    "ea_breakdown": _render_ea_breakdown,
}


def render(request: FigureRequest) -> Path:
    """Render one figure; returns the output path. Inputs are never mutated."""
    try:
        renderer = FIGURE_CLASSES[request.figure_class]
    except KeyError:
        raise SchemaError(
            f"unknown figure class {request.figure_class!r}; "
            f"pick one of {', '.join(sorted(FIGURE_CLASSES))}"
        ) from None
    for path in request.inputs:
        if not Path(path).is_file():
            raise SchemaError(f"{path}: no such input CSV")
    renderer(request)
    return request.output
