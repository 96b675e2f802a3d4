"""Exception hierarchy for fp-spectra.

Every error derives from :class:`SpectraError` and from the builtin it refines,
so callers can catch either ``SpectraError`` or e.g. ``ValueError``.
"""


class SpectraError(Exception):
    """Base class for all fp-spectra errors."""


class NotPrimeError(SpectraError, ValueError):
    """Modulus is composite, even, or smaller than 3."""


class ModulusOverflowError(SpectraError, OverflowError):
    """Modulus is 2**31 or larger."""


class FieldDivisionByZeroError(SpectraError, ZeroDivisionError):
    """Inverse of zero requested."""


class SizeTooLargeError(SpectraError, ValueError):
    """Requested set size exceeds the field size."""


class BadRatioError(SpectraError, ValueError):
    """Geometric ratio is zero modulo p."""


class CtxMismatchError(SpectraError, ValueError):
    """Operands live in different prime fields."""


class SetLiteralError(SpectraError, ValueError):
    """Set literal or generator syntax could not be parsed."""


class ExprSyntaxError(SpectraError, ValueError):
    """Set expression could not be parsed.

    Attributes:
        offset: Byte offset in the source where parsing failed
        expected: Description of the token the parser wanted
    """

    def __init__(self, message: str, offset: int, expected: str):
        super().__init__(f"{message} at offset {offset} (expected {expected})")
        self.offset = offset
        self.expected = expected


class BadRepeatError(SpectraError, ValueError):
    """Iteration count in ``k#E`` or ``E^k`` is zero."""


class UnboundVarError(SpectraError, KeyError):
    """Expression references a name missing from the environment."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class EmptySetError(SpectraError, ValueError):
    """An operation that requires a non-empty set received an empty one."""


class DimensionOutOfRangeError(SpectraError, ValueError):
    """Matrix dimension outside the supported range."""


class OddDimensionError(SpectraError, ValueError):
    """Construction requires an even dimension."""


class ConfigInvalidError(SpectraError, ValueError):
    """Experiment configuration failed validation."""


class BudgetExceededWithoutCertificateError(SpectraError, RuntimeError):
    """Exact enumeration is over budget and the preset has no certificate fallback."""


class InsufficientDataError(SpectraError, ValueError):
    """Not enough distinct set sizes to fit an exponent."""
