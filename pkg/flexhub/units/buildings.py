"""
Reference office buildings: lumped RC zones served by packaged VAV systems.

Two archetypes:
    small_office  - one AHU with five terminal boxes, one per zone
    medium_office - three identical AHUs, one per floor
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from flexhub.exceptions import UnknownVariableError
from flexhub.units.contract import (
    Causality,
    CoSimUnit,
    UnitMetadata,
    VariableKind,
    VariableSpec,
    lookup_variable,
    validate_metadata,
)
from flexhub.units.weather import WeatherDay, WeatherLibrary, WeatherSample, synthetic_weather

WeatherSource = Union[WeatherDay, WeatherLibrary]

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
SUBSTEP_S = 30.0
MAX_SUBSTEP_S = 60.0
THERMOSTAT_REFERENCE_S = 900.0
HVAC_ON_HOUR = 6.0
HVAC_OFF_HOUR = 18.0

SAT_BOUNDS = (10.0, 15.0)
ZONE_SETPOINT_BOUNDS = (23.0, 25.0)
SETPOINT_GRANULARITY = 0.1
ZONE_TEMP_RANGE = (18.0, 35.0)


@dataclass(frozen=True)
class ZoneParams:
    """Single-node zone: C dT/dt = (T_out - T)/R + gains - cooling."""
    heat_capacitance: float     # J/K
    envelope_resistance: float  # K/W
    solar_aperture: float       # m², effective
    max_occupants: float
    gain_per_person: float = 130.0  # W
    equipment_gain: float = 0.0     # W at full occupancy

    def __post_init__(self):
        for name in ("heat_capacitance", "envelope_resistance", "solar_aperture",
                     "max_occupants", "gain_per_person"):
            if not getattr(self, name) > 0:
                raise ValueError(f"ZoneParams.{name} must be > 0, got {getattr(self, name)}")
        if self.equipment_gain < 0:
            raise ValueError(f"ZoneParams.equipment_gain must be >= 0, got {self.equipment_gain}")

    def gains(self, occupancy_fraction: float, direct_solar: float) -> float:
        """Internal plus solar gains in W."""
        people = self.max_occupants * self.gain_per_person * occupancy_fraction
        equipment = self.equipment_gain * occupancy_fraction
        return people + equipment + self.solar_aperture * direct_solar

    @property
    def time_constant(self) -> float:
        return self.heat_capacitance * self.envelope_resistance


@dataclass(frozen=True)
class VavParams:
    """Packaged VAV system (or one terminal share of it)."""
    nominal_flow: float              # kg/s
    fan_nominal_power: float         # W
    min_flow_fraction: float = 0.3
    coil_cop: float = 3.5
    outdoor_air_fraction: float = 0.4
    air_cp: float = 1005.0           # J/(kg K)
    thermostat_gain: float = 15.0    # multiplier on C/900 s

    def __post_init__(self):
        if not self.nominal_flow > 0:
            raise ValueError(f"VavParams.nominal_flow must be > 0, got {self.nominal_flow}")
        if not 0 < self.min_flow_fraction < 1:
            raise ValueError(f"VavParams.min_flow_fraction must lie in (0, 1), got {self.min_flow_fraction}")
        if not self.coil_cop > 1:
            raise ValueError(f"VavParams.coil_cop must be > 1, got {self.coil_cop}")
        if not 0 <= self.outdoor_air_fraction <= 1:
            raise ValueError(f"VavParams.outdoor_air_fraction must lie in [0, 1], got {self.outdoor_air_fraction}")
        if not self.fan_nominal_power > 0 or not self.air_cp > 0 or not self.thermostat_gain > 0:
            raise ValueError("VavParams fan_nominal_power, air_cp and thermostat_gain must be > 0")

    @property
    def min_flow(self) -> float:
        return self.min_flow_fraction * self.nominal_flow

    def scaled(self, share: float) -> "VavParams":
        """Terminal box carrying ``share`` of the system's nominal flow."""
        return VavParams(
            nominal_flow=self.nominal_flow * share,
            fan_nominal_power=self.fan_nominal_power * share,
            min_flow_fraction=self.min_flow_fraction,
            coil_cop=self.coil_cop,
            outdoor_air_fraction=self.outdoor_air_fraction,
            air_cp=self.air_cp,
            thermostat_gain=self.thermostat_gain,
        )


@dataclass(frozen=True)
class OccupancySchedule:
    fraction_by_hour: Tuple[float, ...]

    def __post_init__(self):
        if len(self.fraction_by_hour) != 24:
            raise ValueError(f"schedule needs 24 hourly values, got {len(self.fraction_by_hour)}")
        if any(not 0 <= f <= 1 for f in self.fraction_by_hour):
            raise ValueError("schedule fractions must lie in [0, 1]")

    def fraction_at(self, hour: float) -> float:
        return self.fraction_by_hour[int(math.floor(hour)) % 24]

    @classmethod
    def constant(cls, level: float = 0.9, start: int = 8, end: int = 18) -> "OccupancySchedule":
        return cls(tuple(level if start <= h < end else 0.0 for h in range(24)))

    @classmethod
    def lunch_dip(cls, level: float = 0.9, dip: float = 0.4) -> "OccupancySchedule":
        hours = list(cls.constant(level).fraction_by_hour)
        hours[12] = dip
        return cls(tuple(hours))

    @classmethod
    def named(cls, name: str) -> "OccupancySchedule":
        presets = {"constant": cls.constant, "lunch_dip": cls.lunch_dip}
        if name not in presets:
            raise ValueError(f"unknown schedule '{name}', expected one of {sorted(presets)}")
        return presets[name]()


class VavResult(NamedTuple):
    mass_flow: float
    fan_power: float
    coil_power: float
    delivered_cooling: float


def demanded_load(zone_temp: float, setpoint: float, zone: ZoneParams, vav: VavParams) -> float:
    """Proportional thermostat: zero at or below setpoint."""
    error = max(0.0, zone_temp - setpoint)
    return vav.thermostat_gain * zone.heat_capacitance * error / THERMOSTAT_REFERENCE_S


def compute_vav(
    zone_temp: float,
    setpoint: float,
    sat: float,
    t_out: float,
    vav: VavParams,
    zone: ZoneParams,
) -> VavResult:
    """Single-zone VAV response at the given supply air temperature."""
    cp = vav.air_cp
    if zone_temp > sat:
        load = demanded_load(zone_temp, setpoint, zone, vav)
        flow = load / (cp * (zone_temp - sat))
        flow = min(max(flow, vav.min_flow), vav.nominal_flow)
    else:
        flow = vav.min_flow

    fan_power = vav.fan_nominal_power * (flow / vav.nominal_flow) ** 3
    mixed = vav.outdoor_air_fraction * t_out + (1.0 - vav.outdoor_air_fraction) * zone_temp
    coil_power = flow * cp * max(0.0, mixed - sat) / vav.coil_cop
    delivered = flow * cp * max(0.0, zone_temp - sat)
    return VavResult(flow, fan_power, coil_power, delivered)


class AhuResult(NamedTuple):
    mass_flow: float
    fan_power: float
    coil_power: float
    delivered: np.ndarray
    flow_fractions: np.ndarray


def compute_ahu(
    zone_temps: np.ndarray,
    setpoints: Sequence[float],
    sat: float,
    t_out: float,
    vav: VavParams,
    zones: Sequence[ZoneParams],
    shares: Sequence[float],
) -> AhuResult:
    """One AHU feeding one terminal per zone; fan and coil act on the summed flow."""
    terminals = [
        compute_vav(float(t), sp, sat, t_out, vav.scaled(share), zone)
        for t, sp, zone, share in zip(zone_temps, setpoints, zones, shares)
    ]
    flows = np.array([r.mass_flow for r in terminals])
    total = float(flows.sum())
    return_temp = float(np.dot(flows, zone_temps) / total)

    fan_power = vav.fan_nominal_power * (total / vav.nominal_flow) ** 3
    mixed = vav.outdoor_air_fraction * t_out + (1.0 - vav.outdoor_air_fraction) * return_temp
    coil_power = total * vav.air_cp * max(0.0, mixed - sat) / vav.coil_cop
    fractions = flows / (vav.nominal_flow * np.asarray(shares))
    return AhuResult(total, fan_power, coil_power,
                     np.array([r.delivered_cooling for r in terminals]), fractions)


def step_zone_thermal(
    temps: np.ndarray,
    t_out: float,
    gains: np.ndarray,
    zones: Sequence[ZoneParams],
    dt: float,
    cooling: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    max_substep: float = SUBSTEP_S,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Explicit-Euler update of every zone over ``dt`` seconds.

    ``cooling`` maps current zone temperatures to delivered cooling (W) and is
    re-evaluated each sub-step. Returns the new temperatures and the mean
    cooling load per zone over the interval.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not 0 < max_substep <= MAX_SUBSTEP_S:
        raise ValueError(f"max_substep must lie in (0, {MAX_SUBSTEP_S}], got {max_substep}")

    capacitance = np.array([z.heat_capacitance for z in zones])
    tau = np.array([z.time_constant for z in zones])
    gains = np.asarray(gains, dtype=float)
    temps = np.array(temps, dtype=float)

    n_sub = max(1, math.ceil(dt / max_substep - 1e-9))
    h = dt / n_sub
    total_cooling = np.zeros_like(temps)
    for _ in range(n_sub):
        q_cool = np.zeros_like(temps) if cooling is None else np.asarray(cooling(temps), dtype=float)
        temps = temps + h * ((t_out - temps) / tau + (gains - q_cool) / capacitance)
        total_cooling += q_cool
    return temps, total_cooling / n_sub


def _weather_outputs() -> List[VariableSpec]:
    out = Causality.OUTPUT
    return [
        VariableSpec("Site Outdoor Air Dry-bulb Temperature", out, "°C", 15.0, 45.0),
        VariableSpec("Site Outdoor Air Relative Humidity", out, "%", 0.0, 100.0),
        VariableSpec("Site Wind Speed", out, "m/s", 0.0, 15.0),
        VariableSpec("Site Direct Solar Radiation Rate per Area", out, "W/m²", 0.0, 1000.0),
    ]


def _coil_ceiling(vav: VavParams) -> float:
    # coil power at nominal flow with a 20 K mixed-to-supply difference
    return vav.nominal_flow * vav.air_cp * 20.0 / vav.coil_cop


def small_office_metadata(vav: VavParams, step: float = 900.0) -> UnitMetadata:
    inp, out = Causality.INPUT, Causality.OUTPUT
    variables = [
        VariableSpec("AHU Supply Air Temperature", inp, "°C", *SAT_BOUNDS,
                     SETPOINT_GRANULARITY, VariableKind.SAT_SETPOINT),
    ]
    variables += [
        VariableSpec(f"Zone {i} Cooling Setpoint", inp, "°C", *ZONE_SETPOINT_BOUNDS,
                     SETPOINT_GRANULARITY, VariableKind.ZONE_SETPOINT)
        for i in range(1, 6)
    ]
    variables += _weather_outputs()
    variables += [
        VariableSpec("Cooling Coil Electric Power", out, "W", 0.0, _coil_ceiling(vav), kind=VariableKind.COIL_POWER),
        VariableSpec("Fan Electric Power", out, "W", 0.0, vav.fan_nominal_power, kind=VariableKind.FAN_POWER),
        VariableSpec("Supply Air Temperature", out, "°C", *SAT_BOUNDS, kind=VariableKind.SUPPLY_TEMP),
        VariableSpec("Supply Air Mass Flow Rate", out, "kg/s", 0.0, vav.nominal_flow, kind=VariableKind.MASS_FLOW),
    ]
    variables += [
        VariableSpec(f"Zone {i} Indoor Air Temperature", out, "°C", *ZONE_TEMP_RANGE, kind=VariableKind.ZONE_TEMP)
        for i in range(1, 6)
    ]
    return UnitMetadata("small_office", tuple(variables), step)


def medium_office_metadata(vav: VavParams, step: float = 900.0) -> UnitMetadata:
    inp, out = Causality.INPUT, Causality.OUTPUT
    floors = range(1, 4)
    variables = [
        VariableSpec(f"AHU {j} Supply Air Temperature", inp, "°C", *SAT_BOUNDS,
                     SETPOINT_GRANULARITY, VariableKind.SAT_SETPOINT)
        for j in floors
    ]
    variables += [
        VariableSpec(f"Floor {j} Cooling Setpoint", inp, "°C", *ZONE_SETPOINT_BOUNDS,
                     SETPOINT_GRANULARITY, VariableKind.ZONE_SETPOINT)
        for j in floors
    ]
    variables += _weather_outputs()
    variables += [VariableSpec(f"Cooling Coil Electric Power {j}", out, "W", 0.0, _coil_ceiling(vav),
                               kind=VariableKind.COIL_POWER) for j in floors]
    variables += [VariableSpec(f"Fan Electric Power {j}", out, "W", 0.0, vav.fan_nominal_power,
                               kind=VariableKind.FAN_POWER) for j in floors]
    variables += [VariableSpec(f"Supply Air Temperature {j}", out, "°C", *SAT_BOUNDS,
                               kind=VariableKind.SUPPLY_TEMP) for j in floors]
    variables += [VariableSpec(f"Supply Air Mass Flow Rate {j}", out, "kg/s", 0.0, vav.nominal_flow,
                               kind=VariableKind.MASS_FLOW) for j in floors]
    variables += [VariableSpec(f"Floor {j} Indoor Air Temperature", out, "°C", *ZONE_TEMP_RANGE,
                               kind=VariableKind.ZONE_TEMP) for j in floors]
    return UnitMetadata("medium_office", tuple(variables), step)


class ReferenceBuilding(CoSimUnit):
    """
    Shared stepping logic. Inputs are ordered SAT setpoints (one per AHU) then
    zone setpoints; outputs are weather, then per-AHU coil, fan, supply
    temperature and flow, then zone temperatures.
    """

    n_ahus: int = 1

    def __init__(
        self,
        metadata: UnitMetadata,
        zones: Sequence[ZoneParams],
        schedule: OccupancySchedule,
        weather: WeatherSource,
        cooling_enabled: bool = True,
    ):
        validate_metadata(metadata)
        self._metadata = metadata
        self.zones: Tuple[ZoneParams, ...] = tuple(zones)
        self.schedule = schedule
        self.weather = weather
        self.cooling_enabled = cooling_enabled

        self._staged: Dict[str, float] = {
            v.name: v.upper_bound for v in metadata.inputs
        }
        self._time = 0.0
        self._temps = np.zeros(len(self.zones))
        self._ahu_state = self._idle_ahu_state()
        self._applied_sat = np.full(self.n_ahus, SAT_BOUNDS[1])
        self._snapshots: List[Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
        self._warnings: List[str] = []

    # contract -----------------------------------------------------------

    @property
    def metadata(self) -> UnitMetadata:
        return self._metadata

    @property
    def time(self) -> float:
        return self._time

    def initialize(self, start_time: float) -> None:
        self._time = float(start_time)
        start = self._weather_at(self._time)
        self._temps = np.full(len(self.zones), start.dry_bulb)
        self._ahu_state = self._idle_ahu_state()
        self._applied_sat = np.array(
            [self._staged[v.name] for v in self._metadata.inputs[: self.n_ahus]]
        )
        self._warnings.clear()

    def set_inputs(self, values: Mapping[str, float]) -> None:
        for name, value in values.items():
            spec = lookup_variable(self._metadata, name)
            if not spec.is_input:
                raise UnknownVariableError(name, self._metadata.unit_type)
            clamped = spec.clamp(value)
            if clamped != float(value):
                self._warnings.append(f"input '{name}' = {value} clamped to {clamped}")
            self._staged[name] = clamped

    def do_step(self, current_time: float, step_size: float) -> None:
        if abs(current_time - self._time) > 1e-6:
            raise ValueError(f"do_step at t={current_time} but unit clock is {self._time}")

        inputs = [self._staged[v.name] for v in self._metadata.inputs]
        sats = np.array(inputs[: self.n_ahus])
        setpoints = inputs[self.n_ahus:]

        hour = (current_time % SECONDS_PER_DAY) / 3600.0
        sample = self._weather_at(current_time)
        occupancy = self.schedule.fraction_at(hour)
        gains = np.array([z.gains(occupancy, sample.direct_solar) for z in self.zones])

        cooling = None
        if self.cooling_enabled and HVAC_ON_HOUR <= hour < HVAC_OFF_HOUR:
            self._snapshots = []
            cooling = self._cooling_callback(sample.dry_bulb, sats, setpoints)

        self._temps, _ = step_zone_thermal(self._temps, sample.dry_bulb, gains, self.zones, step_size, cooling)

        if cooling is not None:
            stacked = [np.mean([s[i] for s in self._snapshots], axis=0) for i in range(4)]
            self._ahu_state = tuple(stacked)
        else:
            self._ahu_state = self._idle_ahu_state()
        self._applied_sat = sats
        self._time = current_time + step_size

    def get_outputs(self) -> Dict[str, float]:
        sample = self._weather_at(self._time)
        coil, fan, flow, _ = self._ahu_state
        values: List[float] = list(sample)
        values += list(coil) + list(fan) + list(self._applied_sat) + list(flow)
        values += list(self._temps)
        return {name: float(v) for name, v in zip(self._metadata.output_names, values)}

    def get_diagnostics(self) -> Dict[str, float]:
        fractions = self._ahu_state[3]
        return {f"{self._diagnostic_label} {i} Flow Fraction": float(f)
                for i, f in enumerate(fractions, start=1)}

    def warnings(self) -> List[str]:
        drained, self._warnings = self._warnings, []
        return drained

    # internals ----------------------------------------------------------

    _diagnostic_label = "Terminal"

    def _weather_at(self, t: float) -> WeatherSample:
        day = self.weather.day_at(t)
        steps = day.steps_per_day
        k = int(math.floor((t % SECONDS_PER_DAY) / SECONDS_PER_DAY * steps + 1e-9))
        return day.sample(k)

    def _idle_ahu_state(self):
        zeros = np.zeros(self.n_ahus)
        return zeros, zeros.copy(), zeros.copy(), np.zeros(self._n_terminals())

    def _n_terminals(self) -> int:
        return self.n_ahus

    def _cooling_callback(self, t_out: float, sats: np.ndarray, setpoints: Sequence[float]):
        raise NotImplementedError


class SmallOffice(ReferenceBuilding):
    """Five zones on a single AHU; terminal shares follow zone capacitance."""

    n_ahus = 1

    def __init__(self, zones, vav: VavParams, schedule, weather, step: float = 900.0, cooling_enabled: bool = True):
        self.vav = vav
        capacitance = np.array([z.heat_capacitance for z in zones])
        self.shares = capacitance / capacitance.sum()
        super().__init__(small_office_metadata(vav, step), zones, schedule, weather, cooling_enabled)

    def _n_terminals(self) -> int:
        return len(self.zones)

    def _cooling_callback(self, t_out, sats, setpoints):
        sat = float(sats[0])

        def respond(temps: np.ndarray) -> np.ndarray:
            ahu = compute_ahu(temps, setpoints, sat, t_out, self.vav, self.zones, self.shares)
            self._snapshots.append((
                np.array([ahu.coil_power]), np.array([ahu.fan_power]),
                np.array([ahu.mass_flow]), ahu.flow_fractions,
            ))
            return ahu.delivered

        return respond


class MediumOffice(ReferenceBuilding):
    """Three floors, each on its own AHU."""

    n_ahus = 3
    _diagnostic_label = "AHU"

    def __init__(self, floors, vavs: Sequence[VavParams], schedule, weather, step: float = 900.0,
                 cooling_enabled: bool = True):
        self.vavs = tuple(vavs)
        if len(self.vavs) != 3:
            raise ValueError(f"medium office needs 3 VAV systems, got {len(self.vavs)}")
        super().__init__(medium_office_metadata(self.vavs[0], step), floors, schedule, weather, cooling_enabled)

    def _cooling_callback(self, t_out, sats, setpoints):
        def respond(temps: np.ndarray) -> np.ndarray:
            results = [
                compute_vav(float(t), sp, float(sat), t_out, vav, zone)
                for t, sp, sat, vav, zone in zip(temps, setpoints, sats, self.vavs, self.zones)
            ]
            self._snapshots.append((
                np.array([r.coil_power for r in results]),
                np.array([r.fan_power for r in results]),
                np.array([r.mass_flow for r in results]),
                np.array([r.mass_flow / v.nominal_flow for r, v in zip(results, self.vavs)]),
            ))
            return np.array([r.delivered_cooling for r in results])

        return respond


# Defaults are sized so four buildings under the baseline peak near 100-130 kW
# on the hottest synthetic day.
SMALL_OFFICE_ZONES: Tuple[ZoneParams, ...] = (
    ZoneParams(1.80e6, 0.006, 3.0, 4, 130.0, 1200.0),
    ZoneParams(2.16e6, 0.005, 4.0, 5, 130.0, 1200.0),
    ZoneParams(2.16e6, 0.005, 2.0, 5, 130.0, 1200.0),
    ZoneParams(2.16e6, 0.005, 6.0, 5, 130.0, 1200.0),
    ZoneParams(2.70e6, 0.004, 1.0, 12, 130.0, 2000.0),
)
SMALL_OFFICE_VAV = VavParams(nominal_flow=2.8, fan_nominal_power=1800.0)

MEDIUM_OFFICE_FLOORS: Tuple[ZoneParams, ...] = (
    ZoneParams(7.2e6, 0.0015, 4.0, 40, 130.0, 6000.0),
    ZoneParams(7.2e6, 0.0015, 15.0, 45, 130.0, 6000.0),
    ZoneParams(1.08e7, 0.0010, 20.0, 45, 130.0, 6000.0),
)
MEDIUM_OFFICE_VAV = VavParams(nominal_flow=3.0, fan_nominal_power=2200.0)


def _default_weather(steps: int = 96) -> WeatherDay:
    return synthetic_weather(37.2, 28.6, 16.0, steps)


def make_small_office(
    zones: Optional[Sequence[ZoneParams]] = None,
    vav: Optional[VavParams] = None,
    schedule: Optional[OccupancySchedule] = None,
    weather: Optional[WeatherSource] = None,
    step: float = 900.0,
    cooling_enabled: bool = True,
) -> SmallOffice:
    zones = tuple(zones) if zones is not None else SMALL_OFFICE_ZONES
    if len(zones) != 5:
        raise ValueError(f"small office needs 5 zones, got {len(zones)}")
    return SmallOffice(
        zones,
        vav or SMALL_OFFICE_VAV,
        schedule or OccupancySchedule.constant(),
        weather or _default_weather(),
        step,
        cooling_enabled,
    )


def make_medium_office(
    floors: Optional[Sequence[ZoneParams]] = None,
    vavs: Optional[Sequence[VavParams]] = None,
    schedule: Optional[OccupancySchedule] = None,
    weather: Optional[WeatherSource] = None,
    step: float = 900.0,
    cooling_enabled: bool = True,
) -> MediumOffice:
    floors = tuple(floors) if floors is not None else MEDIUM_OFFICE_FLOORS
    if len(floors) != 3:
        raise ValueError(f"medium office needs 3 floors, got {len(floors)}")
    return MediumOffice(
        floors,
        tuple(vavs) if vavs is not None else (MEDIUM_OFFICE_VAV,) * 3,
        schedule or OccupancySchedule.constant(),
        weather or _default_weather(),
        step,
        cooling_enabled,
    )


UNIT_FACTORIES = {
    "small_office": make_small_office,
    "medium_office": make_medium_office,
}
