"""Exception hierarchy shared by every module."""


class EllqgError(Exception):
    """Base class for all library errors."""


class InvalidParams(EllqgError, ValueError):
    """Modular parameters violate an invariant (|p| < 1, genericity of hbar, ...)."""


class InvalidArgument(EllqgError, ValueError):
    """A function argument is malformed or out of its domain."""


class InvalidCartan(EllqgError, ValueError):
    """Matrix is not a symmetrizable generalized Cartan matrix."""


class PoleHit(EllqgError, ArithmeticError):
    """Evaluation point lies on (or within tolerance of) a pole."""

    def __init__(self, message, pole=None):
        super().__init__(message)
        self.pole = pole


class Unsupported(EllqgError, NotImplementedError):
    """Feature outside the implemented scope."""


class CommutatorTooLarge(EllqgError, ValueError):
    """A family expected to commute does not."""

    def __init__(self, message, pair=None, norm=None):
        super().__init__(message)
        self.pair = pair
        self.norm = norm


class NotHighestWeight(EllqgError):
    """Representation has no one-dimensional top weight space killed by raising operators."""


class FormMismatch(NotHighestWeight):
    """A function is not of the required normal form (e.g. a highest-weight eigenvalue)."""

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic


class FunctorUndefined(EllqgError):
    """Input lies outside the domain of a functor (e.g. congruent poles)."""


class InconsistentData(EllqgError, ValueError):
    """Analytic data violate a consistency condition."""


class SamplingError(EllqgError, RuntimeError):
    """Could not draw samples avoiding the pole loci."""


class InvalidMorphism(EllqgError, ValueError):
    """Proposed morphism does not preserve weights."""


class ConfigError(EllqgError, ValueError):
    """Run configuration could not be parsed or validated."""
