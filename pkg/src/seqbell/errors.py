"""Exception types raised across the package."""


class SeqBellError(ValueError):
    """Base class for domain errors (bad inputs, invalid states, undefined branches)."""


class NotHermitian(SeqBellError):
    pass


class NotPsd(SeqBellError):
    pass


class DimensionMismatch(SeqBellError):
    pass


class BadWeights(SeqBellError):
    pass


class InvalidState(SeqBellError):
    pass


class IncompletePartition(SeqBellError):
    def __init__(self, residual: float):
        super().__init__(f"operators do not form a partition of unity (residual {residual:.3e})")
        self.residual = residual


class ZeroProbabilityBranch(SeqBellError):
    pass


class ZeroProbabilityEvent(SeqBellError):
    pass


class ZeroOperator(SeqBellError):
    pass


class BadIndex(SeqBellError):
    pass


class ScenarioTooLarge(SeqBellError):
    pass


class WrongScenario(SeqBellError):
    pass


class OutOfRange(SeqBellError):
    pass


class FilterUndefined(SeqBellError):
    pass


class DegenerateProtocol(SeqBellError):
    pass
