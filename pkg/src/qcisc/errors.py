"""Exception types shared across qcisc."""


class QcIscError(Exception):
    """Base for every domain error raised by the toolkit."""

    @property
    def name(self) -> str:
        return type(self).__name__


class MissingBlockEntry(QcIscError):
    def __init__(self, kind):
        super().__init__(f"no library entry for {kind}")
        self.kind = kind


class OverlapViolation(QcIscError):
    pass


class ParseError(QcIscError):
    pass


class InvariantViolation(QcIscError):
    pass


class NoValidOverheadSplit(QcIscError):
    pass


class PlanConstraintViolated(QcIscError):
    pass


class OddMForVariantII(QcIscError):
    pass


class NoEvenSplit(QcIscError):
    pass


class NotSelfInverse(QcIscError):
    pass


class WrongDeterminant(QcIscError):
    pass


class DimensionCapExceeded(QcIscError):
    pass


class DimensionTooLarge(QcIscError):
    pass


class UndefinedGate(QcIscError):
    pass


class RootNotBracketed(QcIscError):
    pass


class NonConvergence(QcIscError):
    def __init__(self, max_iters, result=None):
        super().__init__(f"no convergence within {max_iters} iterations")
        self.max_iters = max_iters
        self.result = result
