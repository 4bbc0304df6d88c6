"""Exception hierarchy shared by all modules.

Two families matter to callers: problems with the inputs (``ValueError``
subclasses) and numerical aborts (``NumericalAbort``). The command-line
runner maps the first to exit status 2 and the second to exit status 3.
"""


class FieldSpecError(ValueError):
    """A coefficient-field specification is malformed or out of range."""


class ConfigError(ValueError):
    """A run configuration is malformed; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class NumericalAbort(RuntimeError):
    """A computation could not certify its own result."""

    module = "kpp_lattice"

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class IntegrationError(NumericalAbort):
    module = "dynamics"


class ConvergenceError(NumericalAbort):
    module = "eigen"


class InvariantViolation(NumericalAbort):
    module = "speed"
