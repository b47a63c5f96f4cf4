"""Exception hierarchy shared by all permlaw modules."""


class PermlawError(ValueError):
    """Base class for every error raised by permlaw."""


class SizeExceededError(PermlawError):
    pass


class NegativeEntryError(PermlawError):
    pass


class ZeroPermanentError(PermlawError):
    pass


class NotBinaryError(PermlawError):
    pass


class ZeroRowError(PermlawError):
    pass


class PrecisionLossError(PermlawError):
    """Raised when an exact engine loses all significant digits."""


class NoTotalSupportError(PermlawError):
    pass


class MaxIterationsError(PermlawError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class BandViolationError(PermlawError):
    pass


class EpsilonTooLargeError(PermlawError):
    pass


class BalanceInvariantError(PermlawError):
    pass


class AmplitudeError(PermlawError):
    pass


class ProbabilityRangeError(PermlawError):
    pass


class HypothesisViolationError(PermlawError):
    pass


class ConfigError(PermlawError):
    pass
