"""
Text formatting helpers for log lines and console summaries.
"""
from datetime import timedelta
from typing import Optional

import humanize


class Formatter:
    """Text formatting utilities."""

    @staticmethod
    def format_power(watts: float) -> str:
        """Format power with an SI prefix, e.g. ``103 kW``."""
        return humanize.metric(watts, "W", precision=3)

    @staticmethod
    def format_duration(seconds: float) -> str:
        """Format elapsed wall time in human readable format."""
        return humanize.precisedelta(timedelta(seconds=seconds), minimum_unit="seconds", format="%0.1f")

    @staticmethod
    def format_ratio(value: float, reference: float) -> str:
        if reference == 0:
            return "n/a"
        return f"{100.0 * value / reference:.1f}%"

    @staticmethod
    def format_episode(episode: int, total: Optional[int], day: str, episode_return: float,
                       alpha: float, peak_w: float, elapsed_s: float) -> str:
        """One-line episode summary."""
        progress = f"{episode + 1}/{total}" if total else f"{episode + 1}"
        return (
            f"Episode {progress} [{day}]: return {episode_return:.2f}, "
            f"alpha {alpha:.4f}, peak {Formatter.format_power(peak_w)}, "
            f"took {Formatter.format_duration(elapsed_s)}"
        )
