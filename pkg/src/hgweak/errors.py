"""Exception and warning types shared across the package."""


class PhysicsError(ValueError):
    """A quantity violates a physical precondition (normalization, domain,
    vanishing overlap, parameter out of validity range, ...)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to meet its accuracy or convergence
    contract (grid too coarse, optimizer stuck, singular inversion, ...)."""


class FirstOrderValidityWarning(UserWarning):
    """Displacement parameters are large enough that first-order expressions
    start to pick up visible curvature."""


class NumericalAccuracyWarning(UserWarning):
    """A finite-difference or quadrature result disagrees with its coarser
    cross-check by more than the advisory threshold."""
