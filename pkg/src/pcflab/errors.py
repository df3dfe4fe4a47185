"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class, so
tests and the CLI can distinguish configuration mistakes from numerical
breakdown without string matching.
"""


class PcflabError(Exception):
    """Base class for all package-specific errors."""


class DomainError(PcflabError):
    """A parameter sits outside its mathematically admissible range."""


class NumericalDomainError(PcflabError):
    """A computed value left its admissible range by more than rounding allows.

    Raised e.g. when the arcosh argument drops below 1 by more than the
    clamp tolerance; that indicates misuse, not floating-point noise.
    """


class SingularDenominator(PcflabError):
    """A closed-form denominator fell below the safe floor."""


class CoefficientSingularity(PcflabError):
    """A field entered the region where an equation coefficient blows up."""


class BlowupDetected(PcflabError):
    """Non-finite values appeared in an evolved state."""


class BoundaryContamination(PcflabError):
    """Dynamic fields deviated from their far-field values inside the guard band."""


class SupportError(PcflabError):
    """Compactly supported data intrudes on the boundary guard band."""


class WindowUndefined(PcflabError):
    """The interior decay window is requested at a time where it is undefined."""


class InsufficientHistory(PcflabError):
    """An operation needs more stored time levels than were provided."""


class ConfigError(PcflabError):
    """A run configuration failed validation (unknown key, bad value, ...)."""
