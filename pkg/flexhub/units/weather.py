"""
Weather days for the reference buildings: synthetic diurnal profiles and CSV ingestion.
"""
import logging
import math
from dataclasses import dataclass
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from flexhub.exceptions import ConfigError

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["dry_bulb", "rh", "wind", "solar"]
SECONDS_PER_DAY = 86400.0


def date_of(t: float) -> str:
    """ISO date of an epoch second, in UTC."""
    return datetime.fromtimestamp(t, tz=timezone.utc).date().isoformat()


def day_start(day: Union[str, date]) -> float:
    """Epoch seconds of midnight UTC on ``day``."""
    if isinstance(day, str):
        day = date.fromisoformat(day)
    return datetime(day.year, day.month, day.day, tzinfo=timezone.utc).timestamp()


class WeatherSample(NamedTuple):
    dry_bulb: float
    relative_humidity: float
    wind_speed: float
    direct_solar: float


@dataclass(frozen=True)
class WeatherDay:
    """Per-step weather for one simulated day."""
    dry_bulb_by_step: np.ndarray
    relative_humidity: np.ndarray
    wind_speed: np.ndarray
    direct_solar: np.ndarray

    def __post_init__(self):
        n = len(self.dry_bulb_by_step)
        for name in ("relative_humidity", "wind_speed", "direct_solar"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"WeatherDay.{name} has {len(getattr(self, name))} steps, expected {n}")
        if np.any(self.relative_humidity < 0) or np.any(self.relative_humidity > 100):
            raise ValueError("relative humidity must lie in [0, 100]")
        if np.any(self.direct_solar < 0):
            raise ValueError("direct solar must be >= 0")

    @property
    def steps_per_day(self) -> int:
        return len(self.dry_bulb_by_step)

    def sample(self, step: int) -> WeatherSample:
        """Weather at a step of the day; steps past midnight wrap."""
        k = step % self.steps_per_day
        return WeatherSample(
            float(self.dry_bulb_by_step[k]),
            float(self.relative_humidity[k]),
            float(self.wind_speed[k]),
            float(self.direct_solar[k]),
        )

    def day_at(self, t: float) -> "WeatherDay":
        """A single day repeats for every date."""
        return self

    @classmethod
    def constant(cls, sample: WeatherSample, steps_per_day: int) -> "WeatherDay":
        ones = np.ones(steps_per_day)
        return cls(ones * sample.dry_bulb, ones * sample.relative_humidity,
                   ones * sample.wind_speed, ones * sample.direct_solar)


def _diurnal_temperature(hour: float, peak_temp: float, min_temp: float,
                         peak_hour: float, min_hour: float) -> float:
    amplitude = peak_temp - min_temp
    rise = peak_hour - min_hour
    if min_hour <= hour <= peak_hour:
        x = (hour - min_hour) / rise
        return min_temp + amplitude * (1.0 - math.cos(math.pi * x)) / 2.0
    fall = 24.0 - rise
    x = ((hour - peak_hour) % 24.0) / fall
    return peak_temp - amplitude * (1.0 - math.cos(math.pi * x)) / 2.0


def synthetic_weather(
    peak_temp: float,
    min_temp: float,
    peak_hour: float,
    steps_per_day: int,
    min_hour: float = 6.0,
    solar_peak: float = 800.0,
    humidity_range: tuple = (45.0, 85.0),
    mean_wind: float = 2.5,
) -> WeatherDay:
    """
    Smooth diurnal day anchored at ``min_temp`` (``min_hour``) and ``peak_temp``
    (``peak_hour``). Humidity falls as temperature rises; solar is a half-sine
    over 06:00-18:00.
    """
    if not min_temp < peak_temp:
        raise ValueError(f"min_temp ({min_temp}) must be below peak_temp ({peak_temp})")
    if not 0 <= min_hour < peak_hour < 24:
        raise ValueError(f"need 0 <= min_hour < peak_hour < 24, got {min_hour}, {peak_hour}")
    if steps_per_day <= 0:
        raise ValueError("steps_per_day must be positive")

    hours = np.arange(steps_per_day) * 24.0 / steps_per_day
    dry_bulb = np.array([
        _diurnal_temperature(h, peak_temp, min_temp, peak_hour, min_hour) for h in hours
    ])

    rh_low, rh_high = humidity_range
    relative = (dry_bulb - min_temp) / (peak_temp - min_temp)
    rh = rh_high - (rh_high - rh_low) * relative

    wind = mean_wind + 0.8 * np.sin(2.0 * np.pi * (hours - 9.0) / 24.0)

    solar = np.where(
        (hours > 6.0) & (hours < 18.0),
        solar_peak * np.sin(np.pi * (hours - 6.0) / 12.0),
        0.0,
    )
    return WeatherDay(dry_bulb, rh, np.maximum(wind, 0.0), np.maximum(solar, 0.0))


def load_weather_csv(path: Union[str, Path], steps_per_day: int) -> WeatherDay:
    """Read one row per step with columns dry_bulb,rh,wind,solar."""
    frame = pd.read_csv(path)
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigError(f"weather CSV {path} lacks columns {missing}")
    if len(frame) != steps_per_day:
        raise ConfigError(f"weather CSV {path} has {len(frame)} rows, expected {steps_per_day}")
    return WeatherDay(
        frame["dry_bulb"].to_numpy(dtype=float),
        frame["rh"].to_numpy(dtype=float),
        frame["wind"].to_numpy(dtype=float),
        frame["solar"].to_numpy(dtype=float),
    )


# (peak °C, min °C) for the July heat wave; the last day is the test day
CASE_STUDY_PROFILES: Dict[str, tuple] = {
    "2024-07-08": (30.4, 25.9),
    "2024-07-09": (31.2, 26.3),
    "2024-07-10": (30.8, 26.8),
    "2024-07-11": (32.1, 26.5),
    "2024-07-12": (32.9, 27.0),
    "2024-07-13": (31.7, 27.2),
    "2024-07-14": (33.4, 27.1),
    "2024-07-15": (34.0, 27.6),
    "2024-07-16": (33.2, 27.9),
    "2024-07-17": (34.6, 27.8),
    "2024-07-18": (35.3, 28.1),
    "2024-07-19": (35.9, 28.3),
    "2024-07-20": (37.2, 28.6),
}


class WeatherLibrary:
    """Weather days keyed by ISO date."""

    def __init__(self, days: Optional[Dict[str, WeatherDay]] = None):
        self.days: Dict[str, WeatherDay] = dict(days or {})

    def add(self, day: str, weather: WeatherDay):
        self.days[day] = weather

    def get(self, day: str) -> WeatherDay:
        if day not in self.days:
            raise ConfigError(f"no weather data for day {day}", ("weather", "days"))
        return self.days[day]

    def __contains__(self, day: str) -> bool:
        return day in self.days

    def require(self, days: Iterable[str], path=("hub",)):
        for day in days:
            if day not in self.days:
                raise ConfigError(f"day {day} has no weather data", path)

    def day_at(self, t: float) -> WeatherDay:
        """
        Weather for the UTC date containing epoch second ``t``. The closing
        midnight of the last available day reads that day's profile.
        """
        day = date_of(t)
        if day in self.days:
            return self.days[day]
        previous = date_of(t - 1.0)
        if previous in self.days and t % SECONDS_PER_DAY == 0:
            return self.days[previous]
        return self.get(day)

    @property
    def steps_per_day(self) -> int:
        counts = {w.steps_per_day for w in self.days.values()}
        if len(counts) != 1:
            raise ConfigError(f"weather days disagree on resolution: {sorted(counts)}", ("weather",))
        return counts.pop()

    @classmethod
    def case_study(cls, steps_per_day: int) -> "WeatherLibrary":
        library = cls()
        for day, (peak, low) in CASE_STUDY_PROFILES.items():
            library.add(day, synthetic_weather(peak, low, 16.0, steps_per_day))
        logger.debug(f"Built case-study weather library with {len(library.days)} days")
        return library
