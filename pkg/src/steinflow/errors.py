class SteinflowError(Exception):
    pass


class InvalidParameterError(SteinflowError, ValueError):
    pass


class NotFactorizableError(SteinflowError):
    pass


class TruncationError(SteinflowError):
    """The truncated domain carries too much mass at its boundary."""


class NumericalBlowupError(SteinflowError):
    def __init__(self, message, index=None, time=None, diagnostics=None):
        super().__init__(message)
        self.index = index
        self.time = time
        self.diagnostics = diagnostics


class StepRejectedError(SteinflowError):
    def __init__(self, message, suggested_dt=None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class HorizonTooLongError(SteinflowError):
    pass


class ConfigError(SteinflowError, ValueError):
    pass
