"""Exception types shared across the package."""


class AntennaError(Exception):
    """Base class for all errors raised by planar_antenna."""


class StackValidationError(AntennaError, ValueError):
    """A LayerStack violates one or more of its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class InvalidPlaneWaveError(AntennaError, ArithmeticError):
    """Degenerate Fresnel denominator for the requested plane-wave state."""


class NumericalAccuracyError(AntennaError, ArithmeticError):
    """Quadrature or normalization did not reach the requested tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (achieved residual {residual:.3e})"
        super().__init__(message)


class InvalidObjectiveError(AntennaError, ValueError):
    pass


class CoverageError(AntennaError, ValueError):
    pass


class InfeasibleDomainError(AntennaError, ValueError):
    pass


class ContractError(AntennaError, RuntimeError):
    pass


class AbsorbingTripletError(AntennaError, ValueError):
    pass


class FitError(AntennaError, RuntimeError):
    def __init__(self, message, last_iterate=None):
        self.last_iterate = last_iterate
        super().__init__(message)


class InsufficientDataError(AntennaError, ValueError):
    pass


class UndefinedEfficiencyError(AntennaError, ZeroDivisionError):
    pass


class LowContrastWarning(UserWarning):
    pass
