"""
Error classes for the multi-bubble Hartree toolkit
Every failure a computation can report is a subclass of BubbleToolkitError
"""


class BubbleToolkitError(Exception):
    """Base class for all toolkit errors"""
    pass


# ================= PARAMETER ERRORS =================

class ConfigError(BubbleToolkitError):
    """Raised when a run configuration is malformed or has unknown keys"""
    pass

class DimensionTooSmall(BubbleToolkitError):
    """Raised when N < 5"""
    pass

class AlphaOutOfRange(BubbleToolkitError):
    """Raised when alpha is outside (5 - 6/(N-2), N)"""
    pass

class NonPositiveArgument(BubbleToolkitError):
    """Raised when Gamma is asked for a non-positive argument"""
    pass

class SOutOfRange(BubbleToolkitError):
    """Raised when the Riesz identity exponent s is outside (0, N/2)"""
    pass

class MTooSmall(BubbleToolkitError):
    """Raised when an interaction needs at least two bubbles"""
    pass

class CurvatureTooLarge(BubbleToolkitError):
    """Raised when the quadratic potential would lose positivity"""
    pass

class DegenerateHessian(BubbleToolkitError):
    """Raised when the Hessian of K at the critical point is singular"""
    pass

class ExponentOutOfRange(BubbleToolkitError):
    """Raised when lemma exponents are outside their admissible ranges"""
    pass

class RhoOutOfRange(BubbleToolkitError):
    """Raised when the Pohozaev tube radius is outside (2 delta, 5 delta)"""
    pass

class NonPositiveCoefficient(BubbleToolkitError):
    """Raised when a balance coefficient is not strictly positive"""
    pass


# ================= NUMERICAL ERRORS =================

class QuadratureFailure(BubbleToolkitError):
    """Raised when an integration engine misses its tolerance badly"""
    pass

class CoincidentCenters(BubbleToolkitError):
    """Raised when a two-center integral gets identical centers"""
    pass

class TooClose(BubbleToolkitError):
    """Raised when lambda * |z1 - z2| is below the asymptotic regime"""
    pass

class StepTooCoarse(BubbleToolkitError):
    """Raised when a finite-difference step is too large for lambda"""
    pass

class IllConditionedFit(BubbleToolkitError):
    """Raised when the expansion fit cannot be trusted"""
    pass

class NewtonDiverged(BubbleToolkitError):
    """Raised when the damped Newton iteration does not converge"""
    pass

class RootOutsideWindow(BubbleToolkitError):
    """Raised when the balance root falls outside [L0, L1]"""
    pass

class EmptySampleSet(BubbleToolkitError):
    """Raised when a weighted norm is asked for with no samples"""
    pass


# Errors the CLI reports as usage/config problems (exit 2); everything else is a check failure (exit 1)
USAGE_ERRORS = (
    ConfigError, DimensionTooSmall, AlphaOutOfRange, NonPositiveArgument, SOutOfRange, MTooSmall,
    CurvatureTooLarge, DegenerateHessian, ExponentOutOfRange, RhoOutOfRange,
)
