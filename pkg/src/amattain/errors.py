"""Exception hierarchy shared by every module."""


class AMError(Exception):
    """Base class for all errors raised by the package."""


class ParseError(AMError):
    def __init__(self, message, position=None):
        self.position = position
        self.detail = message
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ZeroDenominator(AMError):
    pass


class NegativeSqrt(AMError):
    pass


class Undecided(AMError):
    """A comparison could not be settled within the precision budget.

    Callers must treat this as a failure; it never stands in for EQ.
    """


class LimitUndetermined(AMError):
    pass


class TailViolation(AMError):
    def __init__(self, kind, n, message=""):
        self.kind = kind
        self.n = n
        super().__init__(f"{kind} at n={n}" + (f": {message}" if message else ""))


class MonotonicityViolation(TailViolation):
    def __init__(self, n, message=""):
        super().__init__("MonotonicityViolation", n, message)


class LimitSideViolation(TailViolation):
    def __init__(self, n, message=""):
        super().__init__("LimitSideViolation", n, message)


class EmptySelection(AMError):
    pass


class MisalignedIndexModels(AMError):
    pass


class InvalidOperator(AMError):
    pass


class NotPositive(AMError):
    pass


class OverlappingSupports(AMError):
    pass


class NormBoundViolated(AMError):
    pass


class NotAMember(AMError):
    pass


class NotAPartialIsometry(AMError):
    pass


class LimitsEqual(AMError):
    pass


class ConsistencyError(AMError):
    """Internal consistency failure: signals a bug, never a valid input."""


class EquivalenceViolation(ConsistencyError):
    pass


class CertificateMismatch(ConsistencyError):
    pass


class ConvergenceFailure(AMError):
    pass
