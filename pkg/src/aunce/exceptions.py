"""Exception taxonomy.

Each class maps to one failure family so callers (and the CLI exit-code
table) can tell misuse apart from bad configuration and from numerical
breakdown.
"""


class AunceError(Exception):
    """Base class for all library errors."""


class ContractViolationError(AunceError, ValueError):
    """An argument violates a structural contract (shape, length, emptiness)."""


class ConfigurationError(AunceError, ValueError):
    """A configuration value is outside its documented domain."""


class DegenerateInputError(AunceError, ValueError):
    """Input is structurally valid but numerically unusable (e.g. zero vector)."""


class EmptyBatchError(AunceError):
    """Every label of a loss evaluation was skipped; nothing to optimize."""


class NumericFailureError(AunceError, ArithmeticError):
    """A non-finite value surfaced mid-computation.

    ``diagnostics`` carries whatever context the raising site could attach
    (stage, epoch, batch index, offending value).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
