"""Exception types shared across the library."""


class LiftcharError(Exception):
    """Base class for all library errors."""


class NotHermitian(LiftcharError):
    pass


class NotPSD(LiftcharError):
    pass


class NotSquare(LiftcharError):
    pass


class NotContraction(LiftcharError):
    pass


class DimMismatch(LiftcharError, ValueError):
    pass


class IndexOutOfRange(LiftcharError, IndexError):
    pass


class Mismatch(LiftcharError):
    """Two objects that must coincide (e.g. nested lifting levels) do not."""


class ResidualTooLarge(LiftcharError):
    """A defining relation could not be met within tolerance."""


class OracleMismatch(LiftcharError):
    """Two independent computation routes of the same object disagree."""


class SubspaceLeak(LiftcharError):
    """A composite vector left the subspace where an inverse is defined."""


class NotPurelyContractive(LiftcharError):
    pass


class UnitaryExtensionFailure(LiftcharError):
    pass


class VerificationFailure(LiftcharError):
    pass


class ParseError(LiftcharError):
    pass


class ValidationError(LiftcharError):
    pass
