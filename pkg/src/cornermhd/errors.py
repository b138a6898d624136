"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: ConfigError -> 2, numerical
failures (SolverFailure, NumericalError, DivergenceError, EosDomainError)
-> 3, precondition/assertion failures -> 1.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ToolkitError):
    """Invalid configuration file or option."""

    def __init__(self, message, lineno=None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class DomainError(ToolkitError):
    """Operation not defined for the given domain kind or parameters."""


class SingularGeometryError(ToolkitError):
    """Degenerate boundary-distance gradient pair."""


class EosDomainError(ToolkitError):
    """Equation-of-state evaluated outside its admissible box."""


class PreconditionError(ToolkitError):
    """A documented operation precondition was violated."""


class SolverFailure(ToolkitError):
    """Iterative solve did not reach the requested tolerance."""

    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class NumericalError(ToolkitError):
    """NaN/Inf detected or a stability condition was violated."""

    def __init__(self, message, cell=None):
        if cell is not None:
            message = f"{message} (cell {cell})"
        super().__init__(message)
        self.cell = cell


class DivergenceError(ToolkitError):
    """Fixed-point iteration stopped contracting."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
