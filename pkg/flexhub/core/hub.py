"""
Communication hub: builds the configured units, keeps them on one time axis
and exchanges physical values with them in a fixed index order.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from datetime import date
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from config import HubConfig, UnitEntry, UnitOverrides
from flexhub.core.record import SimRecord, UnitTable
from flexhub.exceptions import (
    ConfigError,
    EpisodeDoneError,
    MetadataError,
    ShapeError,
    UnitDesyncError,
    UnitStepError,
)
from flexhub.units.buildings import (
    MEDIUM_OFFICE_FLOORS,
    MEDIUM_OFFICE_VAV,
    SMALL_OFFICE_VAV,
    SMALL_OFFICE_ZONES,
    OccupancySchedule,
    WeatherSource,
    make_medium_office,
    make_small_office,
)
from flexhub.units.contract import CoSimUnit, UnitMetadata
from flexhub.units.weather import day_start

logger = logging.getLogger(__name__)

CLOCK_TOLERANCE_S = 1e-6


@dataclass(frozen=True)
class TimeAxis:
    """Unified time grid shared by every unit and every log."""
    t0: float
    step: float
    n_steps: int

    def time_at(self, k: int) -> float:
        return self.t0 + k * self.step

    def hour_at(self, k: int) -> float:
        """Hour of day at grid point ``k``, in [0, 24)."""
        return ((k * self.step) % 86400.0) / 3600.0

    @classmethod
    def for_day(cls, day: Union[str, date], step: float, days: int = 1) -> "TimeAxis":
        return cls(day_start(day), float(step), int(round(days * 86400.0 / step)))


@dataclass(frozen=True)
class IOGroup:
    """Per unit type: the shared metadata (names, bounds, granularities) of its units."""
    by_type: Dict[str, UnitMetadata]

    @classmethod
    def from_units(cls, units: Sequence[CoSimUnit]) -> "IOGroup":
        by_type: Dict[str, UnitMetadata] = {}
        for unit in units:
            meta = unit.metadata
            known = by_type.setdefault(meta.unit_type, meta)
            if known.input_names != meta.input_names or known.output_names != meta.output_names:
                raise MetadataError(f"units of type {meta.unit_type} declare different variables")
        return cls(by_type)

    def input_names(self, unit_type: str) -> List[str]:
        return self.by_type[unit_type].input_names

    def output_names(self, unit_type: str) -> List[str]:
        return self.by_type[unit_type].output_names


@dataclass(frozen=True)
class UnitSlot:
    index: str
    name: str
    position: int
    entry: Optional[UnitEntry] = None
    entry_position: int = 0


def allocate_indices(config: HubConfig) -> List[UnitSlot]:
    """fmu_1..fmu_N in configuration order; ``count`` expands to name_1..name_k."""
    slots = []
    for entry_position, entry in enumerate(config.units):
        base = entry.name or entry.unit_type
        names = [base] if entry.count == 1 else [f"{base}_{i}" for i in range(1, entry.count + 1)]
        for name in names:
            position = len(slots)
            slots.append(UnitSlot(f"fmu_{position + 1}", name, position, entry, entry_position))
    return slots


def _override_zones(defaults, overrides, path) -> tuple:
    zones = list(defaults)
    for index, override in overrides.items():
        if not 1 <= index <= len(zones):
            raise ConfigError(f"zone index {index} out of range 1..{len(zones)}", path + ("zones", index))
        zones[index - 1] = replace(zones[index - 1], **override.model_dump(exclude_none=True))
    return tuple(zones)


def build_unit(entry: UnitEntry, weather: WeatherSource, step: float, path=("units",)) -> CoSimUnit:
    """Instantiate one reference building with its configured overrides."""
    overrides: UnitOverrides = entry.overrides
    try:
        if overrides.occupancy is not None:
            schedule = OccupancySchedule(tuple(overrides.occupancy))
        else:
            schedule = OccupancySchedule.named(entry.schedule)

        vav_changes = overrides.vav.model_dump(exclude_none=True) if overrides.vav else {}
        if entry.unit_type == "small_office":
            zones = _override_zones(SMALL_OFFICE_ZONES, overrides.zones, path + ("overrides",))
            return make_small_office(zones, replace(SMALL_OFFICE_VAV, **vav_changes), schedule, weather, step)
        floors = _override_zones(MEDIUM_OFFICE_FLOORS, overrides.zones, path + ("overrides",))
        vav = replace(MEDIUM_OFFICE_VAV, **vav_changes)
        return make_medium_office(floors, (vav,) * 3, schedule, weather, step)
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e), path + ("overrides",)) from None


class CommunicationHub:
    """
    Synchronous master loop. Per step the caller runs collect_outputs, decides,
    then apply_actions and step_all. Collect and apply always walk units in
    index order; step_all may fan out to worker threads.
    """

    def __init__(
        self,
        units: Sequence[CoSimUnit],
        slots: Optional[Sequence[UnitSlot]] = None,
        step_seconds: float = 900.0,
        duration_days: int = 1,
        parallel_workers: int = 1,
        log_steps: bool = False,
        record: bool = True,
    ):
        self.units = list(units)
        self.slots = list(slots) if slots is not None else [
            UnitSlot(f"fmu_{i + 1}", unit.metadata.unit_type, i) for i, unit in enumerate(self.units)
        ]
        if len(self.slots) != len(self.units):
            raise ShapeError(f"{len(self.slots)} slots for {len(self.units)} units")

        self.io = IOGroup.from_units(self.units)
        self.step_seconds = float(step_seconds)
        self.duration_days = duration_days
        self.n_steps = int(round(duration_days * 86400.0 / self.step_seconds))
        self.log_steps = log_steps
        self.record_enabled = record

        self.axis: Optional[TimeAxis] = None
        self.record: Optional[SimRecord] = None
        self.current_step = 0
        self._executor: Optional[ThreadPoolExecutor] = None
        if parallel_workers > 1 and len(self.units) > 1:
            self._executor = ThreadPoolExecutor(max_workers=parallel_workers, thread_name_prefix="unit")

        logger.info(
            f"Hub ready with {len(self.units)} units "
            f"({', '.join(f'{s.index}={s.name}' for s in self.slots)}), "
            f"step {self.step_seconds:.0f}s, workers {parallel_workers}"
        )

    @classmethod
    def from_config(cls, config: HubConfig, weather: WeatherSource) -> "CommunicationHub":
        slots = allocate_indices(config)
        units = []
        for slot in slots:
            units.append(build_unit(slot.entry, weather, config.sim.step_seconds, ("units", slot.entry_position)))
        return cls(
            units,
            slots,
            step_seconds=config.sim.step_seconds,
            duration_days=config.sim.duration_days,
            parallel_workers=config.sim.parallel_workers,
            log_steps=config.sim.log_steps,
            record=config.storage.record,
        )

    # -- layout -------------------------------------------------------------

    @property
    def layout(self) -> List[Tuple[UnitSlot, UnitMetadata]]:
        return [(slot, unit.metadata) for slot, unit in zip(self.slots, self.units)]

    @property
    def raw_size(self) -> int:
        return sum(len(unit.metadata.outputs) for unit in self.units)

    @property
    def input_sizes(self) -> List[int]:
        return [len(unit.metadata.inputs) for unit in self.units]

    # -- master loop ----------------------------------------------------------

    def reset(self, day: Union[str, date]) -> np.ndarray:
        """Initialize every unit at midnight of ``day``; returns the initial raw outputs."""
        self.axis = TimeAxis.for_day(day, self.step_seconds, self.duration_days)
        for unit in self.units:
            unit.initialize(self.axis.t0)

        self.record = None
        if self.record_enabled:
            self.record = SimRecord(
                self.axis.t0, self.axis.step, self.axis.n_steps,
                [
                    UnitTable.empty(slot.index, slot.name, unit.metadata.input_names,
                                    unit.metadata.output_names, self.axis.n_steps,
                                    list(unit.get_diagnostics()))
                    for slot, unit in zip(self.slots, self.units)
                ],
            )
        self.current_step = 0
        logger.debug(f"Hub reset to {day} ({self.axis.n_steps} steps)")
        return self.collect_outputs(0)

    def _require_axis(self) -> TimeAxis:
        if self.axis is None:
            raise UnitDesyncError("hub used before reset")
        return self.axis

    def collect_outputs(self, step: int) -> np.ndarray:
        """Concatenated physical outputs in (unit index, output index) order."""
        axis = self._require_axis()
        if step != self.current_step:
            raise UnitDesyncError(f"collect at step {step} but hub is at step {self.current_step}")
        expected = axis.time_at(step)
        diagnostics = self.diagnostics() if self.record is not None and step > 0 else {}

        per_unit = []
        for u, (slot, unit) in enumerate(zip(self.slots, self.units)):
            if abs(unit.time - expected) > CLOCK_TOLERANCE_S:
                raise UnitDesyncError(
                    f"{slot.index} clock {unit.time} differs from axis time {expected} at step {step}"
                )
            values = unit.get(self.io.output_names(unit.metadata.unit_type))
            per_unit.append(values)
            if self.record is not None:
                if step == 0:
                    self.record.set_initial(u, values)
                else:
                    self.record.set_outputs(step - 1, u, values)
                    self.record.set_diagnostics(step - 1, u, list(diagnostics[slot.index].values()))
            if self.log_steps:
                logger.debug(f"step {step} {slot.index} outputs {np.round(values, 3).tolist()}")

        if not per_unit:
            return np.zeros(0)
        return np.concatenate([np.asarray(v, dtype=float) for v in per_unit])

    def apply_actions(self, actions: Sequence[Sequence[float]], step: int):
        """Stage one list of physical setpoints per unit for the next step."""
        self._require_axis()
        if step != self.current_step:
            raise UnitDesyncError(f"apply at step {step} but hub is at step {self.current_step}")
        if len(actions) != len(self.units):
            raise ShapeError(f"expected {len(self.units)} action lists, got {len(actions)}")
        for slot, unit, values in zip(self.slots, self.units, actions):
            expected = len(unit.metadata.inputs)
            if len(values) != expected:
                raise ShapeError(f"{slot.index} expects {expected} inputs, got {len(values)}")

        for u, (slot, unit, values) in enumerate(zip(self.slots, self.units, actions)):
            values = [float(v) for v in values]
            unit.set(self.io.input_names(unit.metadata.unit_type), values)
            if self.record is not None and step < self.record.n_steps:
                self.record.set_inputs(step, u, values)
            if self.log_steps:
                logger.debug(f"step {step} {slot.index} inputs {values}")

    def _step_unit(self, slot: UnitSlot, unit: CoSimUnit, t: float, dt: float):
        try:
            unit.do_step(t, dt)
        except Exception as e:
            raise UnitStepError(slot.index, e) from e

    def step_all(self, dt: Optional[float] = None):
        """Advance every unit by one hub step."""
        axis = self._require_axis()
        dt = axis.step if dt is None else float(dt)
        if not math.isclose(dt, axis.step):
            raise ValueError(f"hub steps are fixed at {axis.step}s, got {dt}s")
        if self.current_step >= axis.n_steps:
            raise EpisodeDoneError(f"time axis exhausted after {axis.n_steps} steps")

        t = axis.time_at(self.current_step)
        if self._executor is not None:
            futures = [
                self._executor.submit(self._step_unit, slot, unit, t, dt)
                for slot, unit in zip(self.slots, self.units)
            ]
            for future in futures:
                future.result()
        else:
            for slot, unit in zip(self.slots, self.units):
                self._step_unit(slot, unit, t, dt)

        for slot, unit in zip(self.slots, self.units):
            for message in unit.warnings():
                logger.warning(f"{slot.index} ({slot.name}): {message}")
        self.current_step += 1

    def unit_outputs(self, raw: np.ndarray) -> List[Dict[str, float]]:
        """Split a raw vector back into per-unit name/value maps."""
        result, offset = [], 0
        for unit in self.units:
            names = unit.metadata.output_names
            result.append(dict(zip(names, raw[offset: offset + len(names)].tolist())))
            offset += len(names)
        return result

    def diagnostics(self) -> Mapping[str, Dict[str, float]]:
        return {slot.index: unit.get_diagnostics() for slot, unit in zip(self.slots, self.units)}

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
