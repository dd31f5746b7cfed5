"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class DynexError(Exception):
    """Base class for all errors raised by dynex."""


class ConfigError(DynexError):
    """A run configuration or precondition is invalid."""


class UnknownVariable(DynexError):
    """A variable id does not exist in the model."""


class CycleError(DynexError):
    """An algebraic cycle among auxiliaries survived validation."""


class NonFiniteDerivative(DynexError):
    """Evaluation produced non-finite values while estimating a partial derivative."""


class NonFiniteState(DynexError):
    """A stock or auxiliary became NaN or infinite during integration.

    Carries the trajectory truncated at the last fully finite saved row and
    the simulation time at which the bad value appeared.
    """

    def __init__(self, message, trajectory=None, time=None):
        super().__init__(message)
        self.trajectory = trajectory
        self.time = time


class DomainError(DynexError):
    """An argument lies outside the operation's domain."""


class NotInvertible(DynexError):
    """The curve is flat at the requested fraction; no unique quantile exists."""


class InfeasibleAnchors(DynexError):
    """Calibration anchors are non-monotone or duplicated."""


class CalibrationError(DynexError):
    """Model construction produced a spec that fails validation."""


class NotConverged(DynexError):
    """No steady state was reached within the run horizon.

    ``variable`` names the stock with the largest residual and ``residual``
    is its relative change per unit time over the trailing window.
    """

    def __init__(self, message, variable=None, residual=None):
        super().__init__(message)
        self.variable = variable
        self.residual = residual


class PatternViolation(DynexError):
    """A loop probe's qualitative signature did not hold.

    ``time`` is the first simulation time at which the signature fails.
    """

    def __init__(self, message, probe=None, time=None):
        super().__init__(message)
        self.probe = probe
        self.time = time


class KeyMismatch(DynexError):
    """Scenario results do not share the same metric keys."""


class UnknownColumn(DynexError):
    """A requested CSV column is not recorded in the trajectory."""


class SinkError(DynexError):
    """Writing to the output sink failed."""


class ValidationErrors(DynexError):
    """A model failed validation; carries the full report."""

    def __init__(self, report):
        self.report = report
        lines = "; ".join(f"{f.location}: {f.message}" for f in report.errors)
        super().__init__(f"model validation failed: {lines}")
