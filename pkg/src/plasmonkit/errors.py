"""Exception and warning types shared across the package."""


class PlasmonkitError(Exception):
    """Base class for all numerical/domain failures raised by plasmonkit."""


class ArgumentAtSingularity(PlasmonkitError):
    """Function evaluated at a point where it is singular (e.g. K_m at 0)."""


class OverflowRange(PlasmonkitError):
    """Argument outside the range where the evaluation is guaranteed finite."""


class BranchPoint(PlasmonkitError):
    """Dispersion quantity requested at/too close to a branch point k = sqrt(eps) k0."""


class NoConvergence(PlasmonkitError):
    """Iterative solver failed to converge."""


class NoMode(PlasmonkitError):
    """No guided mode exists for the requested parameters."""


class NoCutoffFound(PlasmonkitError):
    """Cutoff-radius equation has no root in the admissible regime."""


class OutOfValidity(PlasmonkitError):
    """Asymptotic formula requested outside its documented validity range."""


class OutOfTable(PlasmonkitError):
    """Wavelength outside the permittivity table."""


class LossyModeRejected(PlasmonkitError):
    """Quantization requires a lossless mode (Im eps2 = 0)."""


class TailNotConverged(PlasmonkitError):
    """Winding-number sum truncated before the certified tail bound was met."""


class QuadratureNotConverged(PlasmonkitError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class QuasistaticViolated(PlasmonkitError):
    """Hard violation of the quasistatic validity condition."""


class ConstraintInfeasible(PlasmonkitError):
    """Optimization constraint set is empty."""


class SingularOverlapMatrix(PlasmonkitError):
    """Cross-power matrix is numerically singular along the integration path."""


class StepControlFailure(PlasmonkitError):
    """ODE step controller failed."""


class ResonanceNotResolved(PlasmonkitError):
    """Grid too coarse to resolve the plasmon resonance width."""


class FitFailure(PlasmonkitError):
    """Lorentzian fit residual exceeded the acceptance threshold."""


class PlasmonResonanceWarning(UserWarning):
    """eps2/eps1 close to -1: quasistatic surface-plasmon resonance."""


class ValidityWarning(UserWarning):
    """Soft warning: parameters outside a formula's comfort zone."""
