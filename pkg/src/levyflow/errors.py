"""Exception types shared across the package.

Each failure mode gets its own class so experiment drivers can map them to
distinct exit codes (see :mod:`levyflow.cli`).
"""


class LevyflowError(Exception):
    """Base class for all package errors."""


class DivergentMoment(LevyflowError):
    """The small-jump moment integral diverges for the requested exponent."""


class UnsupportedModel(LevyflowError):
    """No supported example family applies to this model."""


class InadmissibleModel(LevyflowError):
    """Model parameters violate the structural admissibility constraints."""


class EnvelopeFailure(LevyflowError):
    """Rejection-sampling envelope acceptance ratio fell below threshold."""


class QuadratureFailure(LevyflowError):
    """Adaptive quadrature could not reach the requested tolerance."""


class InsufficientDecades(LevyflowError):
    """A log-log fit was requested on a grid spanning too few dyadic decades."""


class NoConvergence(LevyflowError):
    """Picard iteration hit the iteration cap before contracting."""

    def __init__(self, message, ratio_history=None):
        super().__init__(message)
        self.ratio_history = list(ratio_history or [])


class LambdaSearchFailure(LevyflowError):
    """No damping parameter up to the cap produced a small enough gradient."""


class R0SearchFailure(LevyflowError):
    """No dyadic jump threshold satisfies the smallness rule."""


class InverseNoConvergence(LevyflowError):
    """Fixed-point inversion of the transform failed to contract."""


class StateEscape(LevyflowError):
    """A trajectory left the resolved spatial domain."""


class ConfigError(LevyflowError):
    """Malformed or inconsistent experiment configuration."""


class AdmissibilityError(LevyflowError):
    """Configured model/drift pair is outside the admissible range."""
