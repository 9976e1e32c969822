"""Exception and warning taxonomy shared by all modules."""


class EdgeCalcError(Exception):
    """Base class for all library errors."""


class NonFiniteSampleError(EdgeCalcError):
    """A closed form produced a non-finite value at a grid node."""


class DomainError(EdgeCalcError, ValueError):
    """An argument lies outside the mathematically admissible range."""


class PoleOnLineError(EdgeCalcError):
    """A weight line passes through (or too close to) a declared pole."""

    def __init__(self, z, distance, message=None):
        self.z = z
        self.distance = distance
        super().__init__(
            message or f"pole at z={z} within {distance:.3e} of the weight line"
        )


class WeightConditionError(EdgeCalcError, ValueError):
    """A weight-interval condition on Mellin weights is violated."""


class ContourError(EdgeCalcError):
    """A contour is unresolved or passes through a pole."""


class StripError(EdgeCalcError, ValueError):
    """An exponent leaves the weight strip of its asymptotic type."""


class RichardsonError(EdgeCalcError):
    """Finite-difference noise dominates a derivative estimate."""

    def __init__(self, step, noise, message=None):
        self.step = step
        self.noise = noise
        super().__init__(
            message
            or f"finite-difference noise {noise:.3e} dominates at step {step:.3e}"
        )


class NonLinearApplierError(EdgeCalcError):
    """Kernel extraction was asked to run on a non-linear map."""


class NonIntegrableKernelError(EdgeCalcError):
    """Kernel cut-off input has no integrable inverse Fourier transform."""


class ConfigError(EdgeCalcError, ValueError):
    """An experiment configuration is malformed."""


class BoundaryDecayWarning(UserWarning):
    """Input does not decay at a grid end (weight-mismatch signal)."""


class AliasingWarning(UserWarning):
    """Samples do not decay at the covariable band edge."""


class TruncationWarning(UserWarning):
    """A quadrature window misses a non-negligible part of the integrand."""


class AccuracyWarning(UserWarning):
    """A declared band or step is insufficient for the requested tolerance."""


class ConditionWarning(UserWarning):
    """A projection or fit is close to degenerate."""
