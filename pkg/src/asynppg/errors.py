"""Exception hierarchy shared by all modules."""


class AsynPPGError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(AsynPPGError, ValueError):
    pass


class NonStronglyConvexAgent(AsynPPGError, ValueError):
    pass


class ConvergenceFailure(AsynPPGError, RuntimeError):
    pass


class NonPositiveStep(AsynPPGError, ValueError):
    pass


class EmptyBox(AsynPPGError, ValueError):
    pass


class BracketNotConvex(AsynPPGError, ValueError):
    pass


class InvalidFraction(AsynPPGError, ValueError):
    pass


class DelayBoundViolated(AsynPPGError, ValueError):
    pass


class InfeasibleQSchedule(AsynPPGError, ValueError):
    pass


class QBelowLipschitz(AsynPPGError, ValueError):
    pass


class NonFiniteState(AsynPPGError, FloatingPointError):
    pass


class ScheduleInvalid(AsynPPGError, ValueError):
    pass


class MissingSaddleData(AsynPPGError, ValueError):
    pass


class IdentityViolation(AsynPPGError, AssertionError):
    def __init__(self, violations):
        self.violations = list(violations)
        head = "; ".join(str(v) for v in self.violations[:5])
        more = len(self.violations) - 5
        if more > 0:
            head += f"; ... ({more} more)"
        super().__init__(head)


class DisconnectedGraph(AsynPPGError, ValueError):
    pass


class SingularDesign(AsynPPGError, ValueError):
    pass


class MaxIterExceeded(AsynPPGError, RuntimeError):
    pass


class NoMarketClearing(AsynPPGError, ValueError):
    pass


class ResidualTooLarge(AsynPPGError, ValueError):
    pass


class ParseError(AsynPPGError, ValueError):
    pass


class ConstraintViolation(AsynPPGError, ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
