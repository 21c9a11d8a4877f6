"""
train: fit a SAC agent over the training days.
"""
import argparse
import logging
import time

from pydantic import ValidationError

from config import load_experiment
from flexhub.agents.sac.agent import load_checkpoint, save_checkpoint
from flexhub.agents.sac.trainer import EpisodeLog, TrainingLog, train
from flexhub.exceptions import ConfigError, FlexHubError, NonFiniteError
from flexhub.experiment import Experiment
from flexhub.helpers import plots
from flexhub.helpers.formatting import Formatter

logger = logging.getLogger(__name__)

EXIT_NON_FINITE = 3


def train_command(args: argparse.Namespace) -> int:
    """Handle the train command."""
    try:
        cfg = load_experiment(args.config)
        if cfg.controller != "sac":
            raise ConfigError("training needs controller 'sac'", ("controller",))
        episodes = args.episodes or cfg.episodes

        with Experiment(cfg, args.output_dir) as experiment:
            registry = experiment.checkpoint_registry()
            start_episode = 0
            if args.resume:
                loaded = load_checkpoint(args.resume, experiment.obs_dim, experiment.action_dim)
                agent, start_episode = loaded.agent, loaded.episode
                registry.best_return = loaded.best_return
                if not loaded.has_buffer:
                    logger.warning(f"{args.resume} has no replay buffer; training restarts from an empty one")
                logger.info(f"Resuming at episode {start_episode + 1}")
            else:
                agent = experiment.make_agent()

            log_path = experiment.output_dir / "training_log.csv"
            log = TrainingLog()
            if start_episode and log_path.exists():
                try:
                    log = TrainingLog.from_csv(log_path, before=start_episode)
                except (OSError, ValueError) as e:
                    logger.warning(f"Cannot reload {log_path} ({e}); the log restarts at episode {start_episode + 1}")
                else:
                    logger.info(f"Continuing {log_path} after {len(log)} logged episodes")

            last_good = {"episode": start_episode, "snapshot": agent.snapshot()}

            def on_episode(entry: EpisodeLog):
                completed = entry.episode + 1
                last_good.update(episode=completed, snapshot=agent.snapshot())
                registry.offer_best(agent, completed, entry.episode_return)
                if cfg.checkpoint_every and completed % cfg.checkpoint_every == 0:
                    save_checkpoint(agent, registry.directory / f"episode_{completed:05d}.pt", completed,
                                    registry.best_return)

            started = time.monotonic()
            try:
                train(experiment.env, agent, episodes, start_episode, log, on_episode)
            except NonFiniteError as e:
                completed = last_good["episode"]
                path = registry.save("last_good", agent, completed, snapshot=last_good["snapshot"])
                log.to_csv(log_path)
                logger.error(f"Training aborted after {completed} episodes: {e}; state saved to {path}")
                return EXIT_NON_FINITE

            completed = start_episode + episodes
            registry.save("final", agent, completed, log.returns[-1] if len(log) else None)
            log.to_csv(log_path)
            if cfg.hub.storage.plots:
                plots.plot_learning_curve(log.returns, log.alphas, experiment.output_dir / "learning_curve.svg")
                plots.plot_losses(log.to_frame(), experiment.output_dir / "losses.svg")
            logger.info(
                f"Trained {episodes} episodes ({agent.updates} updates) in "
                f"{Formatter.format_duration(time.monotonic() - started)}; "
                f"best return {registry.best_return:.3f}"
            )
        return 0

    except (FlexHubError, ValidationError) as e:
        logger.error(f"train failed: {e}")
        return 1


def register_handlers(subparsers):
    """Register the train sub-command."""
    parser = subparsers.add_parser("train", help="train a SAC agent on the training days")
    parser.add_argument("--config", required=True, help="experiment JSON document")
    parser.add_argument("--resume", default=None, help="checkpoint to continue from")
    parser.add_argument("--episodes", type=int, default=None, help="overrides the configured episode count")
    parser.add_argument("--output-dir", dest="output_dir", default=None)
    parser.set_defaults(handler=train_command)
