"""
Three-part reward: HVAC power, thermal comfort and peak-demand exceedance.
"""
from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

NON_VIOLATION_PEAK_PENALTY = -0.5


class RewardConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    w_power: float = Field(default=0.5, ge=0)
    w_comfort: float = Field(default=1.0, ge=0)
    w_peak: float = Field(default=2.0, ge=0)
    p_max: float = Field(default=103_500.0, gt=0, description="Aggregate power threshold, W")
    comfort_band: Tuple[float, float] = (23.0, 25.0)
    occupied_hours: Tuple[float, float] = (8.0, 18.0)

    @model_validator(mode='after')
    def validate_ranges(self):
        low, high = self.comfort_band
        if not low < high:
            raise ValueError(f'comfort_band must satisfy low < high, got {self.comfort_band}')
        start, end = self.occupied_hours
        if not 0 <= start < end <= 24:
            raise ValueError(f'occupied_hours must satisfy 0 <= start < end <= 24, got {self.occupied_hours}')
        return self


class RewardBreakdown(NamedTuple):
    power_w: float
    p_hvac: float
    p_temp: float
    p_peak: float
    w_hvac: float
    w_temp: float
    w_peak: float
    reward: float

    def as_row(self, step: int, hour: float) -> Dict[str, float]:
        return {"step": step, "hour": hour, **self._asdict()}


def power_penalty(coil_powers: Sequence[float], fan_powers: Sequence[float], p_max: float) -> Tuple[float, float]:
    """Aggregate HVAC power and its ratio to the threshold."""
    if p_max <= 0:
        raise ValueError(f"p_max must be > 0, got {p_max}")
    coil = np.asarray(coil_powers, dtype=float)
    fan = np.asarray(fan_powers, dtype=float)
    if np.any(coil < 0) or np.any(fan < 0):
        raise ValueError("negative power reported by a unit")
    total = float(coil.sum() + fan.sum())
    return total, total / p_max


def zone_deviation(temp: float, low: float, high: float) -> float:
    if temp < low:
        return low - temp
    if temp > high:
        return temp - high
    return 0.0


def comfort_penalty(
    zone_temps: Sequence[float],
    band: Tuple[float, float],
    hour: float,
    occupied: Tuple[float, float] = (8.0, 18.0),
) -> float:
    """Linear up to 1 K outside the band, squared beyond; zero when unoccupied."""
    start, end = occupied
    if not start <= hour < end:
        return 0.0
    low, high = band
    total = 0.0
    for temp in zone_temps:
        dev = zone_deviation(float(temp), low, high)
        total += dev if dev <= 1.0 else dev * dev
    return total


def peak_penalty(power: float, p_max: float, p_hvac: float) -> float:
    """Reaching the threshold counts as a violation."""
    if power >= p_max:
        return p_hvac * p_hvac
    return NON_VIOLATION_PEAK_PENALTY


def compute_reward(power: float, p_hvac: float, p_temp: float, p_peak: float,
                   config: RewardConfig) -> RewardBreakdown:
    w_hvac = config.w_power * p_hvac
    w_temp = config.w_comfort * p_temp
    w_peak = config.w_peak * p_peak
    return RewardBreakdown(power, p_hvac, p_temp, p_peak, w_hvac, w_temp, w_peak,
                           -(w_hvac + w_temp + w_peak))
