"""Exception types shared across the library."""


class CovertMimoError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(CovertMimoError, ValueError):
    """An argument is malformed, inconsistent, or outside its domain."""


class NumericalConsistencyError(CovertMimoError):
    """A quantity that is provably real/nonnegative came back outside tolerance.

    Raised instead of silently truncating large residues, so decomposition
    bugs surface as errors rather than as quietly wrong numbers.
    """


class RegimeError(CovertMimoError):
    """The requested quantity is undefined in this channel regime.

    Example: asking for the square-root-law constant when a null direction
    toward the adversary exists (the rate is then non-diminishing).
    """


class AlignmentError(CovertMimoError):
    """The adversary is aligned with the array (a sine denominator vanished)."""


class UndefinedSharesError(CovertMimoError):
    """Per-direction divergence shares are undefined because the total is zero."""


class InconsistentSharesError(InvalidInputError):
    """A positive share was requested in a direction with zero adversary gain."""


class UnsupportedCaseError(CovertMimoError):
    """The closed-form detector oracle does not cover this case.

    The Monte Carlo path handles the general (anisotropic) received
    covariance; the exact path intentionally rejects it.
    """


class InsufficientTrialsError(InvalidInputError):
    """Too few Monte Carlo trials for a meaningful estimate."""


class NoNullDirectionError(CovertMimoError):
    """Null steering is impossible with a single transmit antenna."""
