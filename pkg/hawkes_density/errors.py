"""Exception hierarchy shared by every module.

Each error carries a short ``reason`` token and the process ``exit_code`` the
command-line front end uses when the error escapes a run.
"""
from typing import Any, Optional


class HawkesDensityError(Exception):
    """Base class for all errors raised by the package."""

    reason = "error"
    exit_code = 1


class ConfigError(HawkesDensityError):
    """Invalid configuration file, flag or override."""

    reason = "config"
    exit_code = 1

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class DomainError(HawkesDensityError):
    """An input lies outside the domain where an operation is defined."""

    reason = "domain"
    exit_code = 2


class KernelError(DomainError):
    reason = "kernel"


class UnsupportedKernelError(KernelError):
    reason = "unsupported-kernel"


class RegimeError(DomainError):
    """Subcritical/supercritical precondition violated."""

    reason = "regime"


class ScheduleError(DomainError):
    """No admissible window lattice for the requested time."""

    reason = "schedule"


class RangeError(DomainError):
    """A time point lies outside the observed horizon or grid."""

    reason = "range"


class DegenerateError(DomainError):
    """The moment inversion hits a division by zero."""

    reason = "degenerate"


class NotIrreducibleError(DomainError):
    reason = "not-irreducible"


class ScaleError(DomainError):
    reason = "scale"


class ExperimentError(DomainError):
    """An experiment configuration produces too many rejected samples."""

    reason = "experiment"


class ComputationError(HawkesDensityError):
    reason = "computation"
    exit_code = 3


class ConvergenceError(ComputationError):
    reason = "convergence"


class InternalError(ComputationError):
    reason = "internal"


class SimulationExplosionError(ComputationError):
    """The event-count guard fired; ``partial_log`` holds the events so far."""

    reason = "explosion"

    def __init__(self, message: str, partial_log: Optional[Any] = None):
        super().__init__(message)
        self.partial_log = partial_log


class OutputError(HawkesDensityError):
    reason = "io"
    exit_code = 4
