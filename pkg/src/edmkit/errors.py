from typing import Iterable, Optional


class EdmError(Exception):
    """Base class for every error raised by edmkit."""


class ConfigError(EdmError):
    """Invalid run configuration or parameters (CLI exit code 2)."""


class DataError(EdmError):
    """Unreadable or inconsistent input data (CLI exit code 3)."""


class InvalidSpec(ConfigError, ValueError):
    def __init__(self, violations: Iterable[str]):
        self.violations = list(violations)
        super().__init__("Invalid cost spec: " + "; ".join(self.violations))


class IndexOutOfRange(EdmError, IndexError):
    pass


class InvalidParam(ConfigError, ValueError):
    pass


class UnknownConfigKey(InvalidParam):
    def __init__(self, key: str, suggestion: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.suggestion = suggestion
        self.line = line
        message = f"Unknown config key '{key}'"
        if line is not None:
            message += f" (line {line})"
        if suggestion:
            message += f", did you mean '{suggestion}'?"
        super().__init__(message)


class ParseError(DataError, ValueError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class RaggedLengths(DataError, ValueError):
    pass


class EmptyFile(DataError, ValueError):
    pass


class TooFewPerClass(DataError, ValueError):
    pass


class EmptyTrainingSet(DataError, ValueError):
    pass


class DegenerateLabels(DataError, ValueError):
    pass


class LengthMismatch(DataError, ValueError):
    pass


class EmptyInput(DataError, ValueError):
    pass


class PrefixTooShort(DataError, ValueError):
    pass


class TimestampMismatch(DataError, ValueError):
    pass


class EmptyCube(DataError, ValueError):
    pass


class BlobFormatError(DataError, ValueError):
    pass


class MissingCalibrationCube(ConfigError, ValueError):
    pass


class MemberFitError(EdmError):
    """A collection member failed to train; carries the timestamp it was fit for."""

    def __init__(self, timestamp: int, cause: Exception):
        self.timestamp = timestamp
        self.cause = cause
        super().__init__(f"Classifier for timestamp {timestamp} failed: {cause}")
