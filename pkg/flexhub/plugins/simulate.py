"""
simulate: run one controller over the test day and write its artifacts.
"""
import argparse
import logging

from pydantic import ValidationError

from config import load_experiment
from flexhub.agents.sac.agent import load_checkpoint
from flexhub.agents.sac.trainer import evaluate, rollout_rbc
from flexhub.exceptions import ConfigError, FlexHubError
from flexhub.experiment import Experiment

logger = logging.getLogger(__name__)


def simulate_command(args: argparse.Namespace) -> int:
    """Handle the simulate command."""
    try:
        cfg = load_experiment(args.config)
        controller = args.controller or cfg.controller
        with Experiment(cfg, args.output_dir) as experiment:
            if controller == "sac":
                if args.checkpoint is None:
                    raise ConfigError("the sac controller needs --checkpoint", ("controller",))
                loaded = load_checkpoint(args.checkpoint, experiment.obs_dim, experiment.action_dim)
                episode_return, record = evaluate(loaded.agent, experiment.env, experiment.test_day)
            else:
                episode_return, record = rollout_rbc(experiment.env, experiment.controller, experiment.test_day)

            if record is None:
                logger.info(f"Return {episode_return:.3f}; recording disabled, no artifacts written")
                return 0
            experiment.summarize(controller.upper(), episode_return, record)
            written = experiment.write_artifacts(record, label=controller.upper())
            logger.info(f"Wrote {len(written)} artifacts to {experiment.output_dir}")
        return 0

    except (FlexHubError, ValidationError) as e:
        logger.error(f"simulate failed: {e}")
        return 1


def register_handlers(subparsers):
    """Register the simulate sub-command."""
    parser = subparsers.add_parser("simulate", help="run a controller over the test day")
    parser.add_argument("--config", required=True, help="experiment JSON document")
    parser.add_argument("--controller", choices=["rbc", "sac"], default=None,
                        help="overrides the configured controller")
    parser.add_argument("--checkpoint", default=None, help="SAC checkpoint (sac controller only)")
    parser.add_argument("--output-dir", dest="output_dir", default=None)
    parser.set_defaults(handler=simulate_command)
