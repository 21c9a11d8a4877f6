"""
Observation assembly: drop duplicated site weather, min-max scale to [0, 1]
and append the hour of day.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from flexhub.exceptions import ShapeError
from flexhub.units.contract import UnitMetadata, VariableKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ObservationDim:
    unit_position: int
    output_index: int
    name: str
    lower: float
    upper: float
    kind: VariableKind


@dataclass(frozen=True)
class ObservationSpec:
    """
    ``dims`` are the retained raw dimensions in raw order; ``keep`` indexes
    them in the raw vector. ``raw_kinds``/``raw_units`` describe every raw
    dimension so reward channels can be located without parsing names.
    """
    dims: Tuple[ObservationDim, ...]
    keep: np.ndarray
    raw_size: int
    raw_kinds: Tuple[VariableKind, ...]
    raw_units: Tuple[int, ...]
    include_hour: bool = True

    @property
    def size(self) -> int:
        return len(self.dims) + (1 if self.include_hour else 0)

    @property
    def lower(self) -> np.ndarray:
        return np.array([d.lower for d in self.dims])

    @property
    def upper(self) -> np.ndarray:
        return np.array([d.upper for d in self.dims])

    def channels(self, kind: VariableKind) -> np.ndarray:
        """Raw-vector indices of every variable of ``kind``."""
        return np.array([i for i, k in enumerate(self.raw_kinds) if k is kind], dtype=int)

    @property
    def names(self) -> List[str]:
        names = [f"fmu_{d.unit_position + 1}.{d.name}" for d in self.dims]
        return names + (["hour"] if self.include_hour else [])


def build_observation_spec(layout: Sequence[UnitMetadata], include_hour: bool = True) -> ObservationSpec:
    """Site-level weather is kept from the first unit only."""
    dims, keep, kinds, owners = [], [], [], []
    offset = 0
    for position, meta in enumerate(layout):
        for j, var in enumerate(meta.outputs):
            kinds.append(var.kind)
            owners.append(position)
            if position == 0 or not var.is_site_level:
                dims.append(ObservationDim(position, j, var.name, var.lower_bound, var.upper_bound, var.kind))
                keep.append(offset + j)
        offset += len(meta.outputs)

    spec = ObservationSpec(tuple(dims), np.array(keep, dtype=int), offset,
                           tuple(kinds), tuple(owners), include_hour)
    logger.debug(f"Observation spec: {offset} raw dims -> {spec.size} observed")
    return spec


def normalize(values: np.ndarray, spec: ObservationSpec) -> np.ndarray:
    """Min-max scale retained physical values, clamped to [0, 1]."""
    lower, upper = spec.lower, spec.upper
    return np.clip((np.asarray(values, dtype=float) - lower) / (upper - lower), 0.0, 1.0)


def denormalize(observation: np.ndarray, spec: ObservationSpec) -> np.ndarray:
    """Physical values of the retained dims (hour feature dropped)."""
    scaled = np.asarray(observation, dtype=float)[: len(spec.dims)]
    return spec.lower + scaled * (spec.upper - spec.lower)


def assemble_observation(raw: np.ndarray, spec: ObservationSpec, hour: float) -> np.ndarray:
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (spec.raw_size,):
        raise ShapeError(f"raw output vector has shape {raw.shape}, expected ({spec.raw_size},)")
    observation = normalize(raw[spec.keep], spec)
    if spec.include_hour:
        observation = np.append(observation, (hour % 24.0) / 24.0)
    return observation
