"""
Action spaces and the mappings from agent output to physical setpoints.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

import numpy as np

from flexhub.exceptions import ShapeError
from flexhub.units.contract import UnitMetadata, VariableKind

logger = logging.getLogger(__name__)

MAX_DELTA_STEPS = 5


class ActionMode(str, Enum):
    BOX = "box"
    MULTIDISCRETE = "multidiscrete"


class ActionMapping(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative_incremental"


@dataclass(frozen=True)
class ActionDim:
    unit_position: int
    input_index: int
    name: str
    lower: float
    upper: float
    granularity: float
    kind: VariableKind

    @property
    def n_bins(self) -> int:
        return int(round((self.upper - self.lower) / self.granularity)) + 1


@dataclass(frozen=True)
class ActionSpec:
    dims: Tuple[ActionDim, ...]
    mode: ActionMode
    mapping: ActionMapping
    unit_sizes: Tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.dims)

    @property
    def bins(self) -> List[int]:
        return [d.n_bins for d in self.dims]

    def split(self, values: Sequence[float]) -> List[List[float]]:
        """Flat per-dimension values -> one list per unit."""
        if len(values) != self.size:
            raise ShapeError(f"expected {self.size} action values, got {len(values)}")
        result, offset = [], 0
        for n in self.unit_sizes:
            result.append([float(v) for v in values[offset: offset + n]])
            offset += n
        return result

    def flatten(self, per_unit: Sequence[Sequence[float]]) -> np.ndarray:
        if [len(v) for v in per_unit] != list(self.unit_sizes):
            raise ShapeError(f"per-unit sizes {[len(v) for v in per_unit]} != {list(self.unit_sizes)}")
        return np.array([float(v) for values in per_unit for v in values])


def build_action_spec(
    layout: Sequence[UnitMetadata],
    mode: ActionMode = ActionMode.BOX,
    mapping: ActionMapping = ActionMapping.RELATIVE,
) -> ActionSpec:
    dims = []
    for position, meta in enumerate(layout):
        for j, var in enumerate(meta.inputs):
            dims.append(ActionDim(position, j, var.name, var.lower_bound, var.upper_bound,
                                  var.granularity, var.kind))
    return ActionSpec(tuple(dims), ActionMode(mode), ActionMapping(mapping),
                      tuple(len(meta.inputs) for meta in layout))


def round_half_away(x: float) -> float:
    return math.copysign(math.floor(abs(x) + 0.5), x)


def quantize(value: float, lower: float, upper: float, granularity: float) -> float:
    """Snap to the grid lower + k*granularity, then clamp to bounds."""
    k = round_half_away(round((value - lower) / granularity, 9))
    snapped = round(lower + k * granularity, 6)
    return min(max(snapped, lower), upper)


def relative_delta(a: float, granularity: float = 0.1, max_steps: int = MAX_DELTA_STEPS) -> float:
    """Setpoint change for a in [-1, 1]: granularity * round(max_steps * a)."""
    a = min(max(float(a), -1.0), 1.0)
    steps = round_half_away(round(a * max_steps, 9))
    return granularity * steps


def map_action_relative(a: float, prev: float, lower: float, upper: float, granularity: float = 0.1) -> float:
    return quantize(prev + relative_delta(a, granularity), lower, upper, granularity)


def map_action_absolute(a: float, lower: float, upper: float, granularity: float) -> float:
    a = min(max(float(a), -1.0), 1.0)
    return quantize(lower + (a + 1.0) / 2.0 * (upper - lower), lower, upper, granularity)


def map_action_discrete(bin_index: int, lower: float, upper: float, granularity: float) -> float:
    n_bins = int(round((upper - lower) / granularity)) + 1
    if not 0 <= int(bin_index) < n_bins:
        raise ValueError(f"bin {bin_index} outside [0, {n_bins - 1}]")
    return round(lower + int(bin_index) * granularity, 6)


@dataclass
class ActionMapperState:
    previous: np.ndarray


class ActionMapper:
    """Maps agent actions to physical setpoints and remembers the last ones."""

    def __init__(self, spec: ActionSpec, reset_values: Sequence[float]):
        if len(reset_values) != spec.size:
            raise ShapeError(f"{len(reset_values)} reset values for {spec.size} action dims")
        self.spec = spec
        self.reset_values = np.array([
            quantize(v, d.lower, d.upper, d.granularity) for v, d in zip(reset_values, spec.dims)
        ])
        self.state = ActionMapperState(self.reset_values.copy())

    def reset(self) -> ActionMapperState:
        self.state = ActionMapperState(self.reset_values.copy())
        return self.state

    def map(self, action: Sequence[float]) -> np.ndarray:
        action = np.asarray(action).reshape(-1)
        if action.shape[0] != self.spec.size:
            raise ShapeError(f"action has {action.shape[0]} dims, expected {self.spec.size}")

        dims = self.spec.dims
        if self.spec.mode is ActionMode.MULTIDISCRETE:
            values = [map_action_discrete(int(b), d.lower, d.upper, d.granularity) for b, d in zip(action, dims)]
        elif self.spec.mapping is ActionMapping.RELATIVE:
            values = [
                map_action_relative(float(a), prev, d.lower, d.upper, d.granularity)
                for a, prev, d in zip(action, self.state.previous, dims)
            ]
        else:
            values = [map_action_absolute(float(a), d.lower, d.upper, d.granularity) for a, d in zip(action, dims)]

        self.state = ActionMapperState(np.array(values))
        return self.state.previous.copy()

    def observe(self, values: Sequence[float]):
        """Record setpoints applied outside the mapping, e.g. by a rule-based controller."""
        self.state = ActionMapperState(np.array([
            quantize(v, d.lower, d.upper, d.granularity) for v, d in zip(values, self.spec.dims)
        ]))
