"""Exception hierarchy shared by every opxlab module."""


class OpxError(Exception):
    """Base class for all library errors."""


class NonConvergence(OpxError):
    pass


class IndexOutOfStencil(OpxError):
    pass


class PrecisionExhausted(OpxError):
    pass


class DivergentMoment(OpxError):
    """Weight parameters lie outside the region where all moments exist."""


class CrossCheckFailure(OpxError):
    """Two independent moment routes disagree beyond the certified digits."""


class PositivityViolation(OpxError):
    pass


class ModulusViolation(OpxError):
    pass


class OffCircle(OpxError):
    pass


class SizeMismatch(OpxError):
    pass


class InvariantBreach(OpxError):
    pass


class StepRejected(OpxError):
    pass


class SingularDenominator(OpxError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BranchAmbiguity(OpxError):
    pass


class ConfigError(OpxError):
    def __init__(self, message, path=None):
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path
