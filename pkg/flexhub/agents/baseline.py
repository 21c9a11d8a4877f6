"""
Rule-based baseline: fixed zone and supply-air setpoints.
"""
import logging
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict

from flexhub.env.actions import ActionSpec
from flexhub.exceptions import ConfigError
from flexhub.units.contract import VariableKind

logger = logging.getLogger(__name__)


class RbcConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    zone_setpoint: float = 25.0
    sat_setpoint: float = 15.0


def rbc_values(spec: ActionSpec, config: RbcConfig) -> List[float]:
    """Flat setpoints in action-dimension order."""
    values = []
    for dim in spec.dims:
        if dim.kind is VariableKind.SAT_SETPOINT:
            key, value = "sat_setpoint", config.sat_setpoint
        elif dim.kind is VariableKind.ZONE_SETPOINT:
            key, value = "zone_setpoint", config.zone_setpoint
        else:
            raise ConfigError(f"no rule for input '{dim.name}'", ("rbc",))
        if not dim.lower <= value <= dim.upper:
            raise ConfigError(
                f"{key} = {value} outside [{dim.lower}, {dim.upper}] of '{dim.name}'", ("rbc", key)
            )
        values.append(value)
    return values


def rbc_action(spec: ActionSpec, config: RbcConfig) -> List[List[float]]:
    """Per-unit physical setpoint lists, identical at every step."""
    return spec.split(rbc_values(spec, config))


class RuleBasedController:
    """Stateless controller that always returns the configured setpoints."""

    def __init__(self, spec: ActionSpec, config: Optional[RbcConfig] = None):
        self.config = config or RbcConfig()
        self._action = rbc_action(spec, self.config)
        logger.info(
            f"RBC: zones {self.config.zone_setpoint} °C, supply air {self.config.sat_setpoint} °C"
        )

    def act(self, observation: Optional[Sequence[float]] = None) -> List[List[float]]:
        return [list(values) for values in self._action]
