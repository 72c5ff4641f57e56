"""Exception hierarchy shared by all nbreg modules."""


class NBRegError(Exception):
    """Base class for every error raised by nbreg."""


class CollisionConfiguration(NBRegError):
    """Two bodies occupy the same position, so the Newtonian force is undefined."""


class InsufficientData(NBRegError):
    pass


class IntegrationError(NBRegError):
    """Raised when an integration cannot reach the end of its span."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class StepUnderflow(IntegrationError):
    pass


class StepLimit(IntegrationError):
    pass


class NoSignChange(NBRegError):
    pass


class NotOnEnergyLevel(NBRegError):
    pass


class NonNegativeEnergy(NBRegError, ValueError):
    pass


class ChartAbort(NBRegError):
    """The state left the domain on which a regularizing chart is valid."""


class TripleCollisionChart(ChartAbort):
    pass


class ChartDomain(NBRegError, ValueError):
    pass


class NoConvergence(NBRegError):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class ContinuationStalled(NoConvergence):
    pass


class SameClassification(NBRegError):
    pass


class IllConditionedSpectrum(NBRegError):
    pass
