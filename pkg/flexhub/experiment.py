"""
Experiment wiring: configuration to weather, hub, environment, controllers
and artifacts.
"""
import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np

from config import ExperimentConfig, WeatherSettings, config as app_config
from flexhub.agents.baseline import RuleBasedController
from flexhub.agents.sac.agent import SacAgent
from flexhub.agents.sac.trainer import rollout_rbc
from flexhub.core.hub import CommunicationHub
from flexhub.core.record import SimRecord, export_csv
from flexhub.env.flex_env import FlexEnv
from flexhub.exceptions import ConfigError
from flexhub.helpers import plots
from flexhub.helpers.formatting import Formatter
from flexhub.helpers.seeding import SeedBundle, spawn_seeds
from flexhub.persistence.checkpoints import CheckpointRegistry
from flexhub.persistence.storage import StorageBackend, create_storage_backend
from flexhub.units.contract import VariableKind
from flexhub.units.weather import WeatherLibrary, load_weather_csv, synthetic_weather

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def build_weather_library(settings: WeatherSettings, steps_per_day: int) -> WeatherLibrary:
    library = WeatherLibrary.case_study(steps_per_day) if settings.case_study else WeatherLibrary()
    for day, profile in settings.profiles.items():
        library.add(day.isoformat(), synthetic_weather(
            profile.peak_temp, profile.min_temp, profile.peak_hour, steps_per_day, min_hour=profile.min_hour,
        ))
    for day, path in settings.csv.items():
        try:
            library.add(day.isoformat(), load_weather_csv(path, steps_per_day))
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot load weather for {day}: {e}", ("weather", "csv", day.isoformat())) from None
    return library


class Experiment:
    """Main experiment object with all components."""

    def __init__(self, config: ExperimentConfig, output_dir: Optional[Union[str, Path]] = None):
        self.config = config
        self.output_dir = Path(output_dir or config.output_dir or app_config.app.output_dir)
        self.seeds: SeedBundle = spawn_seeds(config.seed)
        self._log_handler: Optional[logging.Handler] = None

        hub_config = config.hub
        self.weather = build_weather_library(config.weather, hub_config.sim.steps_per_day)
        for i, day in enumerate(hub_config.training_days):
            self.weather.require([d.isoformat() for d in hub_config.episode_days(day)], ("hub", "training_days", i))
        self.weather.require([d.isoformat() for d in hub_config.episode_days(hub_config.test_day)],
                             ("hub", "test_day"))

        self.hub = CommunicationHub.from_config(hub_config, self.weather)
        self.env = FlexEnv(
            self.hub,
            config.reward,
            [d.isoformat() for d in hub_config.training_days],
            config.action_mode,
            config.action_mapping,
            config.rbc,
        )
        self.env.action_space.seed(self.seeds.env)
        self.controller = RuleBasedController(self.env.action_spec, config.rbc)
        self.storage: Optional[StorageBackend] = None

    @property
    def test_day(self) -> str:
        return self.config.hub.test_day.isoformat()

    @property
    def p_max(self) -> float:
        return self.env.reward_config.p_max

    @property
    def obs_dim(self) -> int:
        return self.env.observation_spec.size

    @property
    def action_dim(self) -> int:
        return self.env.action_spec.size

    def start(self):
        """Create the output directory and mirror the log into it."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self._log_handler = logging.FileHandler(self.output_dir / "flexhub.log", encoding="utf-8")
        self._log_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(self._log_handler)
        self.storage = create_storage_backend(app_config.storage.backend, self.output_dir / "state.json")
        logger.info(f"Experiment output in {self.output_dir}, seed {self.config.seed}")
        self.calibrate_p_max()
        return self

    def calibrate_p_max(self) -> Optional[float]:
        """Set P_max to a fraction of the baseline's test-day peak, when configured."""
        fraction = self.config.p_max_fraction_of_baseline
        if fraction is None:
            return None
        if not self.config.hub.storage.record:
            raise ConfigError("calibration needs recording enabled", ("hub", "storage", "record"))
        _, record = rollout_rbc(self.env, self.controller, self.test_day)
        peak = float(record.rewards_frame()["power_w"].max())
        self.env.set_p_max(fraction * peak)
        logger.info(
            f"P_max calibrated to {Formatter.format_power(self.p_max)} "
            f"({fraction:.2f} x baseline peak {Formatter.format_power(peak)})"
        )
        return self.p_max

    def make_agent(self, dtype=None) -> SacAgent:
        kwargs = {} if dtype is None else {"dtype": dtype}
        return SacAgent(self.obs_dim, self.action_dim, self.config.sac, self.seeds, **kwargs)

    def checkpoint_registry(self) -> CheckpointRegistry:
        if self.storage is None:
            raise RuntimeError("experiment not started")
        return CheckpointRegistry(self.storage, self.output_dir / "checkpoints", run=self.output_dir.name)

    def zone_names(self) -> List[List[str]]:
        return [
            [v.name for v in meta.outputs if v.kind is VariableKind.ZONE_TEMP]
            for _, meta in self.hub.layout
        ]

    def write_building_plots(self, records: Dict[str, SimRecord], directory: Path,
                             prefix: str = "") -> List[Path]:
        """Per-unit power and one air-side figure per unit."""
        layout = [meta for _, meta in self.hub.layout]
        written = [plots.plot_building_power(records, layout, directory / f"{prefix}building_power.svg")]
        for u, (slot, meta) in enumerate(self.hub.layout):
            written.append(plots.plot_hvac_operation(records, u, meta, directory / f"{prefix}hvac_{slot.index}.svg"))
        return written

    def write_artifacts(self, record: SimRecord, directory: Optional[Path] = None,
                        label: str = "") -> List[Path]:
        """Unit CSVs, rewards.csv and the record's SVGs."""
        directory = Path(directory or self.output_dir)
        storage = self.config.hub.storage
        written: List[Path] = []
        if storage.export_csv:
            written += export_csv(record, f"{directory}/")
        if storage.plots:
            directory.mkdir(parents=True, exist_ok=True)
            written.append(plots.plot_power(record, self.p_max, directory / "power.svg"))
            written.append(plots.plot_reward(record, directory / "reward.svg"))
            written.append(plots.plot_temperatures(record, self.zone_names(), self.config.reward.comfort_band,
                                                   directory / "temperatures.svg"))
            written += self.write_building_plots({label or "run": record}, directory)
        return written

    def summarize(self, label: str, episode_return: float, record: SimRecord):
        power = record.rewards_frame()["power_w"].to_numpy()
        over = int(np.sum(power >= self.p_max))
        logger.info(
            f"{label} on {self.test_day}: return {episode_return:.3f}, "
            f"peak {Formatter.format_power(float(power.max()))} "
            f"({Formatter.format_ratio(float(power.max()), self.p_max)} of P_max), "
            f"{over} step(s) at or above P_max"
        )

    def close(self):
        self.env.close()
        if self.storage is not None:
            self.storage.close()
        if self._log_handler is not None:
            logging.getLogger().removeHandler(self._log_handler)
            self._log_handler.close()
            self._log_handler = None

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.close()
