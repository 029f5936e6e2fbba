"""Exception hierarchy shared by every module of the package."""


class RandHorizonError(Exception):
    """Base class for all package errors."""


class InputError(RandHorizonError, ValueError):
    """Invalid arguments or configuration."""


class NumericalError(RandHorizonError):
    """A numerical procedure could not produce a trustworthy answer."""


class DomainError(NumericalError):
    """Integral or operator evaluated outside its domain of convergence."""


class BracketError(NumericalError):
    """Root bracket without a sign change."""


class BoundaryError(NumericalError):
    """Free boundary could not be located."""


class DegenerateBoundaryError(BoundaryError):
    """Every candidate boundary solves the boundary equation."""


class StageError(NumericalError):
    """A recursion stage failed; carries the 1-based stage index."""

    def __init__(self, stage: int, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


class ConfigurationError(NumericalError):
    """Solver settings that cannot yield a stable scheme (e.g. CFL violation)."""
