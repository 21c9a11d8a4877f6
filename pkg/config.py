"""
Configuration management: process settings from environment variables and
the JSON experiment document.
"""
import json
import os
from datetime import date, timedelta
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from flexhub.agents.baseline import RbcConfig
from flexhub.agents.sac.networks import SacHyperparameters
from flexhub.env.reward import RewardConfig
from flexhub.exceptions import ConfigError

# Load environment variables
load_dotenv()

SECONDS_PER_DAY = 86400
LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL']

CASE_STUDY_TRAINING_DAYS = [date(2024, 7, d) for d in range(8, 20)]
CASE_STUDY_TEST_DAY = date(2024, 7, 20)


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ZoneOverride(StrictModel):
    """Replacement values for one zone or floor; unset fields keep defaults."""
    heat_capacitance: Optional[float] = None
    envelope_resistance: Optional[float] = None
    solar_aperture: Optional[float] = None
    max_occupants: Optional[float] = None
    gain_per_person: Optional[float] = None
    equipment_gain: Optional[float] = None


class VavOverride(StrictModel):
    nominal_flow: Optional[float] = None
    fan_nominal_power: Optional[float] = None
    min_flow_fraction: Optional[float] = None
    coil_cop: Optional[float] = None
    outdoor_air_fraction: Optional[float] = None
    thermostat_gain: Optional[float] = None


class UnitOverrides(StrictModel):
    zones: Dict[int, ZoneOverride] = Field(default_factory=dict, description="1-based zone/floor index")
    vav: Optional[VavOverride] = None
    occupancy: Optional[List[float]] = Field(default=None, description="24 hourly fractions")

    @field_validator('occupancy')
    def validate_occupancy(cls, v):
        if v is not None:
            if len(v) != 24:
                raise ValueError(f'occupancy needs 24 hourly values, got {len(v)}')
            if any(not 0 <= f <= 1 for f in v):
                raise ValueError('occupancy fractions must lie in [0, 1]')
        return v


class UnitEntry(StrictModel):
    """One configured building, expanded to ``count`` units."""
    unit_type: Literal["small_office", "medium_office"]
    name: Optional[str] = None
    count: int = Field(default=1, ge=1)
    schedule: Literal["constant", "lunch_dip"] = "constant"
    overrides: UnitOverrides = Field(default_factory=UnitOverrides)


class SimSettings(StrictModel):
    start: date = CASE_STUDY_TEST_DAY
    duration_days: int = Field(default=1, ge=1)
    step_seconds: int = 900
    log_steps: bool = False
    parallel_workers: int = Field(default=1, ge=1)

    @field_validator('step_seconds')
    def validate_step(cls, v):
        if v <= 0 or SECONDS_PER_DAY % v != 0:
            raise ValueError(f'step_seconds must divide {SECONDS_PER_DAY}, got {v}')
        return v

    @property
    def steps_per_day(self) -> int:
        return SECONDS_PER_DAY // self.step_seconds


class StorageSettings(StrictModel):
    record: bool = True
    export_csv: bool = True
    plots: bool = True


class HubConfig(StrictModel):
    """Building cluster, time axis and day schedule."""
    units: List[UnitEntry] = Field(..., min_length=1)
    sim: SimSettings = Field(default_factory=SimSettings)
    training_days: List[date] = Field(default_factory=lambda: list(CASE_STUDY_TRAINING_DAYS), min_length=1)
    test_day: Optional[date] = None
    storage: StorageSettings = Field(default_factory=StorageSettings)

    @model_validator(mode='after')
    def fill_test_day(self):
        if self.test_day is None:
            self.test_day = self.sim.start
        return self

    @model_validator(mode='after')
    def validate_unit_names(self):
        names = []
        for entry in self.units:
            base = entry.name or entry.unit_type
            names += [base] if entry.count == 1 else [f"{base}_{i}" for i in range(1, entry.count + 1)]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f'unit names must be unique, repeated: {duplicates}')
        return self

    def episode_days(self, day: date) -> List[date]:
        """Calendar days covered by an episode starting on ``day``."""
        return [day + timedelta(days=i) for i in range(self.sim.duration_days)]


class WeatherProfile(StrictModel):
    peak_temp: float
    min_temp: float
    peak_hour: float = 16.0
    min_hour: float = 6.0

    @model_validator(mode='after')
    def validate_range(self):
        if not self.min_temp < self.peak_temp:
            raise ValueError(f'min_temp ({self.min_temp}) must be below peak_temp ({self.peak_temp})')
        if not 0 <= self.min_hour < self.peak_hour < 24:
            raise ValueError('need 0 <= min_hour < peak_hour < 24')
        return self


class WeatherSettings(StrictModel):
    case_study: bool = Field(default=True, description="Include the built-in July profiles")
    profiles: Dict[date, WeatherProfile] = Field(default_factory=dict)
    csv: Dict[date, Path] = Field(default_factory=dict)


class ExperimentConfig(StrictModel):
    """A complete experiment document."""
    hub: HubConfig
    controller: Literal["rbc", "sac"] = "rbc"
    reward: RewardConfig = Field(default_factory=RewardConfig)
    sac: SacHyperparameters = Field(default_factory=SacHyperparameters)
    rbc: RbcConfig = Field(default_factory=RbcConfig)
    episodes: int = Field(default=100, ge=1)
    output_dir: Optional[Path] = None
    seed: int = Field(default=0, ge=0)
    weather: WeatherSettings = Field(default_factory=WeatherSettings)
    p_max_fraction_of_baseline: Optional[float] = Field(default=None, gt=0, le=2)
    action_mode: Literal["box", "multidiscrete"] = "box"
    action_mapping: Literal["absolute", "relative_incremental"] = "relative_incremental"
    checkpoint_every: int = Field(default=0, ge=0, description="0 keeps only final/best")

    @model_validator(mode='after')
    def validate_controller(self):
        if self.controller == "sac" and self.action_mode != "box":
            raise ValueError('the SAC controller needs action_mode "box"')
        return self


def _to_config_error(err: ValidationError, root: Sequence[Union[str, int]] = ()) -> ConfigError:
    located = [(tuple(root) + tuple(e["loc"]), e["msg"]) for e in err.errors()]
    (path, message), more = located[0], located[1:]
    return ConfigError(message, path, more)


def _load_json(text: str) -> dict:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    if not isinstance(document, dict):
        raise ConfigError("configuration must be a JSON object")
    return document


def parse_config(text: str) -> HubConfig:
    """Parse a hub configuration document."""
    try:
        return HubConfig.model_validate(_load_json(text))
    except ValidationError as e:
        raise _to_config_error(e) from None


def parse_experiment(text: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(_load_json(text))
    except ValidationError as e:
        raise _to_config_error(e) from None


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return parse_experiment(text)


class StorageConfig(BaseModel):
    """Checkpoint registry storage."""
    backend: str = Field(default="memory", description="Storage backend: memory, tinydb")

    @field_validator('backend')
    def validate_backend(cls, v):
        allowed = ['memory', 'tinydb']
        if v not in allowed:
            raise ValueError(f'Backend must be one of {allowed}')
        return v


class AppConfig(BaseModel):
    """Process-level settings."""
    log_level: str = Field(default="INFO", description="Logging level")
    output_dir: Path = Field(default=Path("./runs"), description="Default output directory")

    @field_validator('log_level')
    def validate_log_level(cls, v):
        if v.upper() not in LOG_LEVELS:
            raise ValueError(f'FLEXHUB_LOG_LEVEL must be one of {LOG_LEVELS}')
        return v.upper()


class Config:
    """Main configuration class."""

    def __init__(self):
        self.app = AppConfig(
            log_level=os.getenv('FLEXHUB_LOG_LEVEL', 'INFO'),
            output_dir=os.getenv('FLEXHUB_OUTPUT_DIR', './runs'),
        )
        self.storage = StorageConfig(
            backend=os.getenv('FLEXHUB_STATE_BACKEND', 'memory')
        )

    def __str__(self) -> str:
        return (
            f"Configuration: log level {self.app.log_level}, "
            f"output {self.app.output_dir}, state backend {self.storage.backend}"
        )


# Global configuration instance
config = Config()
