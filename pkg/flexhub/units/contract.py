"""
Co-simulation unit contract: variable metadata and the stepping interface
every building model implements.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Sequence, Tuple

from flexhub.exceptions import MetadataError, UnknownVariableError

logger = logging.getLogger(__name__)


class Causality(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


class VariableKind(str, Enum):
    """Physical role of a variable, used to locate channels across unit types."""
    WEATHER = "weather"
    COIL_POWER = "coil_power"
    FAN_POWER = "fan_power"
    SUPPLY_TEMP = "supply_temp"
    MASS_FLOW = "mass_flow"
    ZONE_TEMP = "zone_temp"
    SAT_SETPOINT = "sat_setpoint"
    ZONE_SETPOINT = "zone_setpoint"


@dataclass(frozen=True)
class VariableSpec:
    """One exchangeable variable of a unit."""
    name: str
    causality: Causality
    unit: str
    lower_bound: float
    upper_bound: float
    granularity: float = 0.0
    kind: VariableKind = VariableKind.WEATHER

    @property
    def is_input(self) -> bool:
        return self.causality is Causality.INPUT

    @property
    def is_site_level(self) -> bool:
        """Site variables are identical for every unit on the same weather."""
        return self.kind is VariableKind.WEATHER

    def clamp(self, value: float) -> float:
        return min(max(float(value), self.lower_bound), self.upper_bound)


@dataclass(frozen=True)
class UnitMetadata:
    """Descriptor of a unit type: ordered variables plus default step."""
    unit_type: str
    variables: Tuple[VariableSpec, ...]
    default_step: float

    @property
    def inputs(self) -> Tuple[VariableSpec, ...]:
        return tuple(v for v in self.variables if v.is_input)

    @property
    def outputs(self) -> Tuple[VariableSpec, ...]:
        return tuple(v for v in self.variables if not v.is_input)

    @property
    def input_names(self) -> List[str]:
        return [v.name for v in self.inputs]

    @property
    def output_names(self) -> List[str]:
        return [v.name for v in self.outputs]


# Known unit types and their (inputs, outputs) cardinality
KNOWN_CARDINALITY: Dict[str, Tuple[int, int]] = {
    "small_office": (6, 13),
    "medium_office": (6, 19),
}


def validate_metadata(meta: UnitMetadata) -> None:
    """Raise MetadataError unless every variable and cardinality rule holds."""
    if meta.default_step <= 0:
        raise MetadataError(f"{meta.unit_type}: default_step must be > 0, got {meta.default_step}")

    seen = set()
    for var in meta.variables:
        if var.name in seen:
            raise MetadataError(f"{meta.unit_type}: duplicate variable name '{var.name}'")
        seen.add(var.name)

        if not var.lower_bound < var.upper_bound:
            raise MetadataError(
                f"{meta.unit_type}: '{var.name}' bounds inverted or degenerate "
                f"[{var.lower_bound}, {var.upper_bound}]"
            )
        if var.is_input and var.granularity <= 0:
            raise MetadataError(f"{meta.unit_type}: input '{var.name}' needs granularity > 0")

    expected = KNOWN_CARDINALITY.get(meta.unit_type)
    if expected is not None:
        actual = (len(meta.inputs), len(meta.outputs))
        if actual != expected:
            raise MetadataError(
                f"{meta.unit_type}: expected {expected[0]} inputs / {expected[1]} outputs, "
                f"got {actual[0]} / {actual[1]}"
            )


def lookup_variable(meta: UnitMetadata, name: str) -> VariableSpec:
    """Return the variable declared under ``name``."""
    for var in meta.variables:
        if var.name == name:
            return var
    raise UnknownVariableError(name, meta.unit_type)


class CoSimUnit(ABC):
    """
    A co-simulation unit. After ``initialize`` the outputs are valid; inputs set
    with ``set_inputs`` take effect on the next ``do_step``. One thread at a
    time may touch a unit.
    """

    @property
    @abstractmethod
    def metadata(self) -> UnitMetadata:
        """Immutable descriptor."""

    @property
    @abstractmethod
    def time(self) -> float:
        """Unit clock in epoch seconds."""

    @abstractmethod
    def initialize(self, start_time: float) -> None:
        """Reset internal state and set the clock."""

    @abstractmethod
    def set_inputs(self, values: Mapping[str, float]) -> None:
        """Stage input values for the next step."""

    @abstractmethod
    def get_outputs(self) -> Dict[str, float]:
        """All outputs at the current clock, keyed by name."""

    @abstractmethod
    def do_step(self, current_time: float, step_size: float) -> None:
        """Advance from ``current_time`` by ``step_size`` seconds."""

    def set(self, names: Sequence[str], values: Sequence[float]) -> None:
        if len(names) != len(values):
            raise ValueError(f"{len(names)} names but {len(values)} values")
        self.set_inputs(dict(zip(names, values)))

    def get(self, names: Sequence[str]) -> List[float]:
        outputs = self.get_outputs()
        try:
            return [outputs[name] for name in names]
        except KeyError as e:
            raise UnknownVariableError(str(e.args[0]), self.metadata.unit_type) from None

    def get_diagnostics(self) -> Dict[str, float]:
        """Extra values that are not part of the declared outputs."""
        return {}

    def warnings(self) -> List[str]:
        """Drain runtime warnings raised since the last call."""
        return []
