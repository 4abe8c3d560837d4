"""Exception types raised across the package."""


class QspPulseError(Exception):
    """Base class for all package errors."""


class NotUnitary(QspPulseError, ValueError):
    pass


class AntipodalSingularity(QspPulseError, ValueError):
    """The SU(2) logarithm is undefined at U = -I."""


class Singular(QspPulseError, ValueError):
    pass


PolarSingular = Singular


class InsufficientPoints(QspPulseError, ValueError):
    pass


class NonMonotonicKnots(QspPulseError, ValueError):
    pass


class OutOfDomain(QspPulseError, ValueError):
    pass


class MagnusRangeViolation(QspPulseError, ValueError):
    """Segment rotation angle omega*tau is at or beyond pi."""


class GridMismatch(QspPulseError, ValueError):
    pass


class AliasingRisk(QspPulseError, ValueError):
    """Too few samples for the requested Fourier degree."""


class DegenerateCoefficient(QspPulseError, ValueError):
    """Leading Fourier coefficient has (numerically) zero norm."""


class ReferenceIllConditioned(QspPulseError, ValueError):
    pass


class TooFewPoints(QspPulseError, ValueError):
    pass


class MismatchedConfig(QspPulseError, ValueError):
    pass


class SingularFIM(QspPulseError, ValueError):
    pass


class ConfigError(QspPulseError, ValueError):
    pass
