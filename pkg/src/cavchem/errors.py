"""Exception hierarchy shared by all modules."""


class CavChemError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameterError(CavChemError, ValueError):
    """A physical parameter violates its precondition."""


class SingularParameterError(CavChemError, ValueError):
    """Parameters hit a singular point of a closed-form expression."""


class StructuralError(CavChemError, ValueError):
    """Operator dimensions or trajectory contents do not fit together."""


class IntegrationError(CavChemError, RuntimeError):
    """The adaptive integrator could not meet its tolerances."""


class StiffnessError(IntegrationError):
    """Step size underflow; carries the time at which it happened."""

    def __init__(self, t, h):
        super().__init__(f"step size underflow (h={h:.3e}) at t={t:.6e}")
        self.t = t
        self.h = h


class StepTooLargeError(IntegrationError):
    """Fixed-step integration blew up."""


class ConvergenceError(CavChemError, RuntimeError):
    """An iterative procedure did not converge within its budget."""


class TransferTimeoutError(CavChemError, RuntimeError):
    """The 99.9 % transfer threshold was not reached within the time budget."""

    def __init__(self, budget):
        super().__init__(f"|i,0> population did not drop below 1e-3 within {budget:.3e} s")
        self.budget = budget


class ConstraintInfeasibleError(CavChemError, RuntimeError):
    """The weakest trial drive already violates the inefficiency constraint."""


class UnsupportedSizeError(CavChemError, ValueError):
    """Requested collective system is larger than the dense engine supports."""
