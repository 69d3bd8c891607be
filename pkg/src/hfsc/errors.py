"""Exception hierarchy.

Validation errors map to CLI exit status 1, numerical failures to 2.
"""


class HFSCError(Exception):
    exit_code = 1


class ValidationError(HFSCError, ValueError):
    exit_code = 1


class InvalidParameterError(ValidationError):
    pass


class DegenerateModelError(ValidationError):
    pass


class HalfPlaneError(ValidationError):
    pass


class SimpleZeroError(ValidationError):
    pass


class DegenerateVectorError(ValidationError):
    pass


class ConfigError(ValidationError):
    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NumericalError(HFSCError, ArithmeticError):
    exit_code = 2


class DomainTooLargeError(NumericalError):
    """Phase overflow guard tripped."""


class ConditioningError(NumericalError):
    def __init__(self, message, cond=None):
        self.cond = cond
        super().__init__(message)


class BlowUpError(NumericalError):
    def __init__(self, message, step=None):
        self.step = step
        super().__init__(message)


class DomainTooSmallError(NumericalError):
    def __init__(self, message, suggested_half_width=None):
        self.suggested_half_width = suggested_half_width
        super().__init__(message)


class TrackingError(NumericalError):
    def __init__(self, message, slice_index=None):
        self.slice_index = slice_index
        super().__init__(message)


class PeakCountError(TrackingError):
    pass
