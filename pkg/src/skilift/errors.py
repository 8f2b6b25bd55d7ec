"""Exception types shared across the package."""


class SkiliftError(Exception):
    pass


class ParseError(SkiliftError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


class RangeError(ParseError):
    pass


class CoefficientError(ParseError):
    """Non-finite coefficient values."""


class ResourceError(SkiliftError):
    """Raised when a dense computation would exceed the qubit cap."""


class StructuralError(SkiliftError):
    pass


class CoverageError(SkiliftError):
    pass


class ScheduleAlgorithmError(SkiliftError):
    pass
