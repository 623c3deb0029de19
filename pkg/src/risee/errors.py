"""Exception types shared across the package."""


class RiseeError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RiseeError, ValueError):
    """Malformed arguments: dimension mismatch, zero filter, bad anchor."""


class DegenerateConfigError(RiseeError):
    """Configuration yields a meaningless quantity (e.g. nonpositive power)."""


class SurrogateDegenerateError(RiseeError):
    """Surrogate expansion point is degenerate and could not be repaired."""


class InfeasibleSubproblemError(RiseeError):
    """A projection target set is (numerically) empty."""


class SolverError(RiseeError):
    """Inner solver failure, annotated with the stage that raised it."""

    def __init__(self, stage, message):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class ConfigError(RiseeError):
    """Invalid user-facing configuration (file, env override or CLI value)."""
