"""Exception hierarchy for the implosion package."""


class ImplosionError(Exception):
    """Base class for all numerical failures raised by this package."""


class PullbackObstructed(ImplosionError):
    pass


class RayObstructed(ImplosionError):
    pass


class ContourHitsFixedPoint(ImplosionError):
    pass


class ContourUnresolved(ImplosionError):
    """Doubling the quadrature nodes moved the contour integral too much."""


class ParabolicMultiplier(ImplosionError):
    pass


class LogSingularity(ImplosionError):
    pass


class DegenerateParabolic(ImplosionError):
    pass


class CriticalNotInBasin(ImplosionError):
    pass


class NotInBasin(ImplosionError):
    pass


class NormalizationDivergence(ImplosionError):
    pass


class OrbitEscaped(ImplosionError):
    pass


class Undetermined(ImplosionError):
    pass


class ComponentNotReached(ImplosionError):
    pass


class NotEscaping(ImplosionError):
    pass


class StiffnessFailure(ImplosionError):
    pass


class AmbiguousGate(ImplosionError):
    def __init__(self, message, trajectories=None):
        super().__init__(message)
        self.trajectories = trajectories or []


class BranchCut(ImplosionError):
    pass


class NewtonDiverged(ImplosionError):
    pass
