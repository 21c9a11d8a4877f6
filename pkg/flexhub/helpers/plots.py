"""
SVG figures for simulation records and training logs. Output is byte-stable
for identical data: fixed hash salt, no date metadata.
"""
import logging
from pathlib import Path
from typing import List, Mapping, Optional, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from flexhub.core.record import SimRecord  # noqa: E402
from flexhub.units.contract import UnitMetadata, VariableKind  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "flexhub"
plt.rcParams["font.size"] = 10
plt.rcParams["axes.labelsize"] = 11
plt.rcParams["legend.fontsize"] = 9

SVG_METADATA = {"Date": None}


def _save(fig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    logger.debug(f"Wrote {path}")
    return path


def _hours(record: SimRecord) -> np.ndarray:
    frame = record.rewards_frame()
    return frame["hour"].to_numpy() + record.step / 3600.0


def _end_hours(record: SimRecord) -> np.ndarray:
    return np.arange(1, record.steps_recorded + 1) * record.step / 3600.0


def _names(meta: UnitMetadata, kind: VariableKind) -> List[str]:
    return [v.name for v in meta.outputs if v.kind is kind]


def _total(record: SimRecord, unit: int, names: Sequence[str]) -> np.ndarray:
    return np.sum([record.series(unit, name) for name in names], axis=0)


def plot_power(record: SimRecord, p_max: float, path: Union[str, Path]) -> Path:
    """Aggregate HVAC power against the threshold."""
    frame = record.rewards_frame()
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.step(_hours(record), frame["power_w"] / 1000.0, where="pre", label="HVAC power")
    ax.axhline(p_max / 1000.0, color="tab:red", linestyle="--", label="P_max")
    ax.set_xlabel("Hour of day")
    ax.set_ylabel("Power [kW]")
    ax.set_xlim(0, 24)
    ax.legend(loc="upper left")
    return _save(fig, path)


def plot_reward(record: SimRecord, path: Union[str, Path]) -> Path:
    """Weighted penalty terms and the total reward per step."""
    frame = record.rewards_frame()
    hours = _hours(record)
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
    for column, label in (("w_hvac", "power"), ("w_temp", "comfort"), ("w_peak", "peak")):
        top.step(hours, frame[column], where="pre", label=label)
    top.set_ylabel("Weighted penalty")
    top.legend(loc="upper left")
    bottom.step(hours, frame["reward"], where="pre", color="black")
    bottom.set_ylabel("Reward")
    bottom.set_xlabel("Hour of day")
    bottom.set_xlim(0, 24)
    return _save(fig, path)


def plot_temperatures(record: SimRecord, zone_names: Sequence[Sequence[str]],
                      band: Tuple[float, float], path: Union[str, Path]) -> Path:
    """Zone temperatures of every unit, one line per zone, with the comfort band shaded."""
    hours = _end_hours(record)
    fig, ax = plt.subplots(figsize=(10, 5))
    ax.axhspan(band[0], band[1], color="tab:green", alpha=0.15, label="comfort band")
    for u, names in enumerate(zone_names):
        index = record.tables[u].index
        for name in names:
            ax.plot(hours, record.series(u, name), linewidth=0.9, label=f"{index} {name}")
    ax.set_xlabel("Hour of day")
    ax.set_ylabel("Temperature [°C]")
    ax.set_xlim(0, 24)
    ax.legend(loc="upper left", ncol=2, fontsize=6)
    return _save(fig, path)


def plot_learning_curve(returns: Sequence[float], alphas: Sequence[float], path: Union[str, Path],
                        window: int = 10) -> Path:
    """Episode return with a moving average, and the temperature trajectory."""
    episodes = np.arange(1, len(returns) + 1)
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(10, 6), sharex=True)
    top.plot(episodes, returns, alpha=0.4, label="return")
    if len(returns) >= window:
        smooth = np.convolve(returns, np.ones(window) / window, mode="valid")
        top.plot(episodes[window - 1:], smooth, label=f"{window}-episode mean")
    top.set_ylabel("Episode return")
    top.legend(loc="lower right")
    bottom.plot(episodes, alphas, color="tab:purple")
    bottom.set_yscale("log")
    bottom.set_ylabel("alpha")
    bottom.set_xlabel("Episode")
    return _save(fig, path)


def plot_comparison(sac: SimRecord, rbc: SimRecord, p_max: float, path: Union[str, Path],
                    labels: Optional[Tuple[str, str]] = None) -> Path:
    """Aggregate power of two controllers on the same day."""
    sac_label, rbc_label = labels or ("SAC", "RBC")
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.step(_hours(rbc), rbc.rewards_frame()["power_w"] / 1000.0, where="pre", label=rbc_label)
    ax.step(_hours(sac), sac.rewards_frame()["power_w"] / 1000.0, where="pre", label=sac_label)
    ax.axhline(p_max / 1000.0, color="tab:red", linestyle="--", label="P_max")
    ax.set_xlabel("Hour of day")
    ax.set_ylabel("Power [kW]")
    ax.set_xlim(0, 24)
    ax.legend(loc="upper left")
    return _save(fig, path)


def plot_losses(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Actor and twin critic losses, then the policy log-probability against alpha."""
    episodes = frame["episode"].to_numpy() + 1
    fig, (actor, critics, entropy) = plt.subplots(3, 1, figsize=(10, 8), sharex=True)
    actor.plot(episodes, frame["actor_loss"], color="tab:blue")
    actor.set_ylabel("Actor loss")
    critics.plot(episodes, frame["critic1_loss"], label="Q1")
    critics.plot(episodes, frame["critic2_loss"], label="Q2", linestyle="--")
    critics.set_ylabel("Critic loss")
    critics.legend(loc="upper right")
    entropy.plot(episodes, frame["logprob"], color="tab:green", label="log-prob")
    entropy.set_ylabel("Log-prob")
    entropy.set_xlabel("Episode")
    twin = entropy.twinx()
    twin.plot(episodes, frame["alpha"], color="tab:purple", label="alpha")
    twin.set_yscale("log")
    twin.set_ylabel("alpha")
    return _save(fig, path)


def plot_building_power(records: Mapping[str, SimRecord], layout: Sequence[UnitMetadata],
                        path: Union[str, Path]) -> Path:
    """Coil plus fan power of each unit, one panel per unit, one line per controller."""
    fig, axes = plt.subplots(len(layout), 1, figsize=(10, 2.5 * len(layout)), sharex=True, squeeze=False)
    for u, meta in enumerate(layout):
        ax = axes[u, 0]
        names = _names(meta, VariableKind.COIL_POWER) + _names(meta, VariableKind.FAN_POWER)
        for label, record in records.items():
            ax.step(_end_hours(record), _total(record, u, names) / 1000.0, where="pre", label=label)
        table = next(iter(records.values())).tables[u]
        ax.set_ylabel(f"{table.index} [kW]")
        ax.set_title(table.name, fontsize=9, loc="left")
        ax.legend(loc="upper left")
    axes[-1, 0].set_xlabel("Hour of day")
    axes[-1, 0].set_xlim(0, 24)
    return _save(fig, path)


def plot_hvac_operation(records: Mapping[str, SimRecord], unit: int, meta: UnitMetadata,
                        path: Union[str, Path]) -> Path:
    """
    One unit's air side: supply flow with fan power, supply air temperature
    with coil power, and the recorded terminal flow fractions.
    """
    styles = ["-", "--", ":", "-."]
    flow_names = _names(meta, VariableKind.MASS_FLOW)
    fan_names = _names(meta, VariableKind.FAN_POWER)
    sat_names = _names(meta, VariableKind.SUPPLY_TEMP)
    coil_names = _names(meta, VariableKind.COIL_POWER)

    fig, (air, supply, terminals) = plt.subplots(3, 1, figsize=(10, 9), sharex=True)
    fan_axis, coil_axis = air.twinx(), supply.twinx()
    for i, (label, record) in enumerate(records.items()):
        style = styles[i % len(styles)]
        hours = _end_hours(record)
        air.plot(hours, _total(record, unit, flow_names), linestyle=style, color="tab:blue", label=f"{label} flow")
        fan_axis.plot(hours, _total(record, unit, fan_names) / 1000.0, linestyle=style, color="tab:orange",
                      label=f"{label} fan")
        for name in sat_names:
            supply.plot(hours, record.series(unit, name), linestyle=style, label=f"{label} {name}")
        coil_axis.plot(hours, _total(record, unit, coil_names) / 1000.0, linestyle=style, color="tab:red",
                       label=f"{label} coil")
        table = record.tables[unit]
        for name in table.diagnostic_names:
            terminals.plot(hours, record.diagnostic_series(unit, name), linestyle=style, linewidth=0.9,
                           label=f"{label} {name}")

    air.set_ylabel("Supply flow [kg/s]")
    fan_axis.set_ylabel("Fan power [kW]")
    air.legend(loc="upper left", fontsize=7)
    fan_axis.legend(loc="upper right", fontsize=7)
    supply.set_ylabel("Supply air [°C]")
    coil_axis.set_ylabel("Coil power [kW]")
    supply.legend(loc="upper left", fontsize=6)
    coil_axis.legend(loc="upper right", fontsize=7)
    terminals.set_ylabel("Flow fraction")
    terminals.set_ylim(0.0, 1.05)
    terminals.set_xlabel("Hour of day")
    terminals.set_xlim(0, 24)
    if terminals.lines:
        terminals.legend(loc="upper left", ncol=2, fontsize=6)
    return _save(fig, path)
