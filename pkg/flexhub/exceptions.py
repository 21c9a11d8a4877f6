"""
Exception hierarchy for the flexibility hub.
"""
from typing import List, Optional, Sequence, Tuple


class FlexHubError(Exception):
    """Base class for all platform errors."""


class MetadataError(FlexHubError, ValueError):
    """A unit's metadata violates the contract."""


class UnknownVariableError(FlexHubError, KeyError):
    """A variable name is not declared by the unit."""

    def __init__(self, name: str, unit_type: str = ""):
        self.name = name
        self.unit_type = unit_type
        where = f" in {unit_type}" if unit_type else ""
        super().__init__(f"Unknown variable '{name}'{where}")

    def __str__(self) -> str:
        return self.args[0]


class ConfigError(FlexHubError, ValueError):
    """
    Invalid configuration. ``path`` is the dotted path of the first offending
    key; ``violations`` lists every (path, message) pair found.
    """

    def __init__(self, message: str, path: Sequence[object] = (),
                 more: Sequence[Tuple[Sequence[object], str]] = ()):
        self.path = ".".join(str(p) for p in path)
        self.message = message
        self.violations: List[Tuple[str, str]] = [(self.path, message)]
        self.violations += [(".".join(str(p) for p in where), msg) for where, msg in more]
        super().__init__("; ".join(f"{where}: {msg}" if where else msg for where, msg in self.violations))


class ShapeError(FlexHubError, ValueError):
    """Array or list shape does not match what the contract expects."""


class UnitDesyncError(FlexHubError, RuntimeError):
    """A unit clock disagrees with the hub time axis."""


class UnitStepError(FlexHubError, RuntimeError):
    """A unit failed while stepping."""

    def __init__(self, index: str, cause: BaseException):
        self.index = index
        self.cause = cause
        super().__init__(f"Unit {index} failed during do_step: {cause}")


class EpisodeDoneError(FlexHubError, RuntimeError):
    """step() called on a finished episode."""


class NonFiniteError(FlexHubError, FloatingPointError):
    """A loss or gradient became NaN or infinite."""

    def __init__(self, what: str, detail: Optional[str] = None):
        self.what = what
        msg = f"Non-finite value in {what}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class CheckpointError(FlexHubError, ValueError):
    """A checkpoint cannot be used with the current configuration."""
