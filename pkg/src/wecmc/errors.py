"""Exception hierarchy shared by all modules."""


class WecmcError(Exception):
    """Base class for every error raised by the package."""


class StencilOnSingularity(WecmcError):
    pass


class PathThroughSingularity(WecmcError):
    pass


class EmptyDomain(WecmcError):
    pass


class OutOfValidatedRange(WecmcError):
    pass


class PeriodDiverges(WecmcError):
    pass


class DegenerateFamily(WecmcError):
    pass


class NotHarmonic(WecmcError):
    pass


class ProfileVanishes(WecmcError):
    pass


class InconsistentSeed(WecmcError):
    pass


class InconsistentProfile(WecmcError):
    """Profile handed to the linearized marcher does not solve the reduced ODE."""


class LeakageExceeded(WecmcError):
    def __init__(self, leakage: float, tolerance: float):
        super().__init__(f"immersion leakage {leakage:.3e} exceeds tolerance {tolerance:.3e}")
        self.leakage = leakage
        self.tolerance = tolerance


class TailTooLarge(WecmcError):
    def __init__(self, tail: float, tolerance: float):
        super().__init__(f"boundary-ring tail estimate {tail:.3e} exceeds {tolerance:.3e}")
        self.tail = tail
        self.tolerance = tolerance


class RankDeficient(WecmcError):
    pass


class PoleApproached(WecmcError):
    """Raised when the ODE solution runs into a movable pole (or collapses to zero).

    The partial profile integrated so far is attached as ``profile``.
    """

    def __init__(self, message: str, profile=None):
        super().__init__(message)
        self.profile = profile


class OutOfRange(WecmcError):
    pass


class ParameterConstraintViolated(WecmcError):
    pass


class UnknownFamily(WecmcError):
    pass


class BadParams(WecmcError):
    pass
