"""Exception hierarchy. Each family maps to a CLI exit code."""


class NotesumError(Exception):
    exit_code = 2


class UsageError(NotesumError):
    exit_code = 1


class ConfigurationError(NotesumError):
    exit_code = 1


class DataError(NotesumError):
    exit_code = 2


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateKeyError(DataError):
    pass


class DateFormatError(ParseError):
    pass


class DimensionError(DataError):
    pass


class CoverageError(DataError):
    """Summaries and references do not describe the same notes."""


class UndefinedReferenceError(DataError):
    pass


class EmptyTrainingSetError(DataError):
    pass


class CapExceededError(NotesumError):
    """Instance too large for the exact solver."""


class CapacityError(DataError):
    pass


class NumericalError(NotesumError):
    exit_code = 3


class TrainingDivergenceError(NumericalError):
    def __init__(self, parameter):
        super().__init__(f"non-finite gradient in parameter {parameter!r}")
        self.parameter = parameter


class StageError(NotesumError):
    """A pipeline stage failed; keeps the cause's exit code."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 2)
