"""Exception hierarchy shared by all modules."""


class NonlocFrontError(Exception):
    """Base class for every error raised by the package."""


# geometry
class DisconnectedDomain(NonlocFrontError):
    pass


class EmptyDomain(NonlocFrontError):
    pass


class PointInsideObstacle(NonlocFrontError):
    pass


class InvalidGeometry(NonlocFrontError):
    pass


# kernel / nonlinearity
class ZeroMass(NonlocFrontError):
    pass


class InvalidNonlinearity(NonlocFrontError):
    pass


# wave1d
class NoConvergence(NonlocFrontError):
    pass


class DegenerateProfile(NonlocFrontError):
    pass


class RootBracketFailure(NonlocFrontError):
    pass


class PoorFit(NonlocFrontError):
    pass


class NotFound(NonlocFrontError):
    pass


# operator / solver
class SizeMismatch(NonlocFrontError):
    pass


class CflViolation(NonlocFrontError):
    pass


class LinearSolveDivergence(NonlocFrontError):
    pass


class BoundViolation(NonlocFrontError):
    pass


# subsuper / analysis
class OutOfValidity(NonlocFrontError):
    pass


class PlacementViolation(NonlocFrontError):
    pass


class InsufficientData(NonlocFrontError):
    pass


class NotConverged(NonlocFrontError):
    pass


# scenarios
class ConfigError(NonlocFrontError):
    pass


class AssumptionViolation(NonlocFrontError):
    pass
