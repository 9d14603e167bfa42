"""Exception hierarchy used throughout the package."""


class LidskiiError(Exception):
    """Base class for all errors raised by :mod:`lidskii`."""


class OperatorFormatError(LidskiiError, ValueError):
    """Raised when an operator description is malformed."""


class SingularBasisError(LidskiiError, ValueError):
    """Raised when a change-of-basis matrix is (numerically) singular.

    The condition number estimate is stored in ``condition``.
    """

    def __init__(self, msg, condition=None):
        super().__init__(msg)
        self.condition = condition


class SingularResolventError(LidskiiError, ArithmeticError):
    """Raised when ``I - lam B`` is singular to working precision.

    ``pole`` holds the characteristic number closest to the requested ``lam``.
    """

    def __init__(self, msg, pole=None):
        super().__init__(msg)
        self.pole = pole


class ChainConstructionError(LidskiiError):
    """Raised when numerically built Jordan chains violate the chain relation.

    ``residual`` holds the worst relative residual that was observed.
    """

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class PairingConditionError(LidskiiError):
    """Raised when the biorthogonal pairing matrix is too ill-conditioned."""

    def __init__(self, msg, condition=None):
        super().__init__(msg)
        self.condition = condition


class ForeignPoleError(LidskiiError, ValueError):
    """Raised when an integration circle encloses or touches a foreign pole."""

    def __init__(self, msg, pole=None):
        super().__init__(msg)
        self.pole = pole


class ContourError(LidskiiError, ValueError):
    """Raised when no admissible contour can be built."""


class QuadratureError(LidskiiError):
    """Raised when adaptive quadrature exhausts its panel budget."""

    def __init__(self, msg, estimate=None):
        super().__init__(msg)
        self.estimate = estimate


class DomainError(LidskiiError, ValueError):
    """Raised when a parameter lies outside its admissible domain."""


class HorizonError(LidskiiError, ValueError):
    """Raised when a finite horizon is too short for the requested accuracy."""


class DivergentIntegralError(LidskiiError, ValueError):
    """Raised when an improper integral does not converge."""
