"""Exception types shared across the package."""


class ClutterForgeError(Exception):
    """Base class for numerical and pipeline failures."""


class InsufficientOrders(ClutterForgeError):
    """Series supplies too few coefficients for the requested operation."""


class UnsupportedOrder(ClutterForgeError):
    """Only diagonal (K = L) and sub-diagonal (K = L - 1) orders are handled."""


class SingularHankel(ClutterForgeError):
    """The denominator system is degenerate or its solution failed verification."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class RepeatedRoots(ClutterForgeError):
    """Denominator roots coincide and no simple-pole decomposition reproduces the fit."""


class DegreeMismatch(ClutterForgeError):
    """Numerator degree incompatible with the requested decomposition form."""


class AllPolesDiscarded(ClutterForgeError):
    """Pole filtering removed every term; continuation impossible at this order."""


class ComplexPoleStructure(ClutterForgeError):
    """No scanned order yields an all-real-positive exponential-product form."""


class PoleHit(ClutterForgeError):
    """Laplace-transform evaluation requested exactly at a pole."""


class WrongPath(ClutterForgeError):
    """Operation requires the other continuation path."""


class WrongForm(ClutterForgeError):
    """Pole-residue form incompatible with the requested operation."""


class NonDecayingLT(ClutterForgeError):
    """Transform magnitude does not decay enough along the inversion contour."""


class NearSingularFilterPowerSum(ClutterForgeError):
    """A filter power sum iota_n is too close to zero to divide by."""

    def __init__(self, n, value):
        super().__init__(
            f"filter power sum iota_{n} = {value:.3e} is below the degeneracy "
            "threshold; the impulse response is too oscillatory for a cumulant back-solve"
        )
        self.n = n
        self.value = value


class NotPositiveDefinite(ClutterForgeError):
    """Autocorrelation matrix is not positive definite."""


class UnstableModel(ClutterForgeError):
    """Autoregressive model has characteristic roots on or outside the unit circle."""


class TruncationCapExceeded(ClutterForgeError):
    """Impulse response did not fall below threshold within the length cap."""


class SingularCumulantSystem(ClutterForgeError):
    """The per-order multichannel cumulant system is not invertible."""

    def __init__(self, n, cond=None):
        super().__init__(
            f"cumulant system at order n = {n} is singular or too ill-conditioned"
            + (f" (cond ~ {cond:.2e})" if cond is not None else "")
        )
        self.n = n
        self.cond = cond


class LengthMismatch(ClutterForgeError):
    """Paired vectors must have equal length."""


class PipelineError(ClutterForgeError):
    """Failure inside a named pipeline stage; the original error is chained."""

    def __init__(self, stage, cause):
        super().__init__(f"pipeline stage '{stage}' failed: {cause}")
        self.stage = stage
