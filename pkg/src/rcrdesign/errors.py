"""Exception types shared across the package."""


class DesignError(Exception):
    """Base class for all errors raised by rcrdesign."""


class NotPositiveDefinite(DesignError, ValueError):
    pass


class NotSymmetric(DesignError, ValueError):
    pass


class ShapeMismatch(DesignError, ValueError):
    pass


class IndexOutOfRange(DesignError, IndexError):
    pass


class CountMismatch(DesignError, ValueError):
    pass


class ZeroVector(DesignError, ValueError):
    pass


class MeasureNotNormalized(DesignError, ValueError):
    pass


class DomainError(DesignError, ValueError):
    pass


class GroupsNotIdentical(DesignError, ValueError):
    pass


class RankDeficient(DesignError, ValueError):
    pass


class Infeasible(DesignError):
    """A moment matrix (or the pooled information sum) is singular."""

    def __init__(self, message="infeasible: singular moment matrix"):
        super().__init__(message)


class NoFeasibleStart(DesignError):
    pass
