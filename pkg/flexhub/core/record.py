"""
Simulation record: per-unit tables on the hub time axis, plus CSV export.

Row ``k`` of a unit table holds the inputs applied for interval ``k`` and the
outputs observed at its end (time ``t0 + (k+1) * step``). The outputs read
right after initialization are kept separately.
"""
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"
REWARD_COLUMNS = [
    "step", "hour", "power_w", "p_hvac", "p_temp", "p_peak",
    "w_hvac", "w_temp", "w_peak", "reward",
]


@dataclass
class UnitTable:
    index: str
    name: str
    input_names: List[str]
    output_names: List[str]
    inputs: np.ndarray
    outputs: np.ndarray
    initial_outputs: np.ndarray
    diagnostic_names: List[str] = field(default_factory=list)
    diagnostics: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @classmethod
    def empty(cls, index: str, name: str, input_names: Sequence[str],
              output_names: Sequence[str], n_steps: int,
              diagnostic_names: Sequence[str] = ()) -> "UnitTable":
        return cls(
            index, name, list(input_names), list(output_names),
            np.full((n_steps, len(input_names)), np.nan),
            np.full((n_steps, len(output_names)), np.nan),
            np.full(len(output_names), np.nan),
            list(diagnostic_names),
            np.full((n_steps, len(diagnostic_names)), np.nan),
        )


@dataclass
class SimRecord:
    t0: float
    step: float
    n_steps: int
    tables: List[UnitTable]
    rewards: List[Dict[str, float]] = field(default_factory=list)
    steps_recorded: int = 0

    def set_initial(self, unit: int, values: Sequence[float]):
        self.tables[unit].initial_outputs[:] = values

    def set_inputs(self, k: int, unit: int, values: Sequence[float]):
        self.tables[unit].inputs[k, :] = values

    def set_outputs(self, k: int, unit: int, values: Sequence[float]):
        self.tables[unit].outputs[k, :] = values
        self.steps_recorded = max(self.steps_recorded, k + 1)

    def set_diagnostics(self, k: int, unit: int, values: Sequence[float]):
        self.tables[unit].diagnostics[k, :] = values

    def add_reward(self, row: Dict[str, float]):
        self.rewards.append(dict(row))

    def end_time(self, k: int) -> float:
        return self.t0 + (k + 1) * self.step

    def unit_frame(self, unit: int) -> pd.DataFrame:
        table = self.tables[unit]
        n = self.steps_recorded
        frame = pd.DataFrame({
            "step": np.arange(1, n + 1),
            "time": [_iso(self.end_time(k)) for k in range(n)],
        })
        columns = {}
        for j, name in enumerate(table.input_names):
            columns[f"{table.index}.{name}"] = table.inputs[:n, j]
        for j, name in enumerate(table.output_names):
            columns[f"{table.index}.{name}"] = table.outputs[:n, j]
        return pd.concat([frame, pd.DataFrame(columns)], axis=1)

    def rewards_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rewards, columns=REWARD_COLUMNS)

    def series(self, unit: int, name: str) -> np.ndarray:
        """Recorded output trajectory of one variable."""
        table = self.tables[unit]
        j = table.output_names.index(name)
        return table.outputs[: self.steps_recorded, j].copy()

    def diagnostic_series(self, unit: int, name: str) -> np.ndarray:
        """Recorded trajectory of one diagnostic; not part of the CSV export."""
        table = self.tables[unit]
        j = table.diagnostic_names.index(name)
        return table.diagnostics[: self.steps_recorded, j].copy()


def _iso(t: float) -> str:
    return datetime.fromtimestamp(t, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S")


def export_csv(record: SimRecord, prefix: Union[str, Path]) -> List[Path]:
    """
    Write ``<prefix><index>.csv`` for every unit and ``<prefix>rewards.csv``.
    ``prefix`` is prepended verbatim, so pass a directory with a trailing
    separator to write into it.
    """
    prefix = str(prefix)
    if prefix.endswith(("/", "\\")):
        Path(prefix).mkdir(parents=True, exist_ok=True)
    else:
        Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    written = []
    for u, table in enumerate(record.tables):
        path = Path(f"{prefix}{table.index}.csv")
        record.unit_frame(u).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
        written.append(path)

    path = Path(f"{prefix}rewards.csv")
    record.rewards_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    written.append(path)
    logger.info(f"Exported {len(record.tables)} unit tables and rewards to {prefix}")
    return written
