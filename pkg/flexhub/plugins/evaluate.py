"""
evaluate: deterministic test-day rollout of a checkpoint next to the baseline.
"""
import argparse
import logging

from pydantic import ValidationError

from config import load_experiment
from flexhub.agents.sac.agent import load_checkpoint
from flexhub.agents.sac.trainer import evaluate, rollout_rbc
from flexhub.exceptions import ConfigError, FlexHubError
from flexhub.experiment import Experiment
from flexhub.helpers import plots

logger = logging.getLogger(__name__)


def evaluate_command(args: argparse.Namespace) -> int:
    """Handle the evaluate command."""
    try:
        cfg = load_experiment(args.config)
        if not cfg.hub.storage.record:
            raise ConfigError("evaluation needs recording enabled", ("hub", "storage", "record"))

        with Experiment(cfg, args.output_dir) as experiment:
            loaded = load_checkpoint(args.checkpoint, experiment.obs_dim, experiment.action_dim)

            sac_return, sac_record = evaluate(loaded.agent, experiment.env, experiment.test_day)
            experiment.summarize("SAC", sac_return, sac_record)
            written = experiment.write_artifacts(sac_record, label="SAC")

            rbc_return, rbc_record = rollout_rbc(experiment.env, experiment.controller, experiment.test_day)
            experiment.summarize("RBC", rbc_return, rbc_record)
            written += experiment.write_artifacts(rbc_record, experiment.output_dir / "baseline", label="RBC")

            if cfg.hub.storage.plots:
                written.append(plots.plot_comparison(sac_record, rbc_record, experiment.p_max,
                                                     experiment.output_dir / "comparison.svg"))
                written += experiment.write_building_plots({"SAC": sac_record, "RBC": rbc_record},
                                                           experiment.output_dir, prefix="comparison_")
            logger.info(
                f"Return SAC {sac_return:.3f} vs RBC {rbc_return:.3f}; "
                f"wrote {len(written)} artifacts to {experiment.output_dir}"
            )
        return 0

    except (FlexHubError, ValidationError) as e:
        logger.error(f"evaluate failed: {e}")
        return 1


def register_handlers(subparsers):
    """Register the evaluate sub-command."""
    parser = subparsers.add_parser("evaluate", help="evaluate a SAC checkpoint on the test day")
    parser.add_argument("--config", required=True, help="experiment JSON document")
    parser.add_argument("--checkpoint", required=True, help="SAC checkpoint")
    parser.add_argument("--output-dir", dest="output_dir", default=None)
    parser.set_defaults(handler=evaluate_command)
