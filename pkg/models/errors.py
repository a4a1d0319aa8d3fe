# errors.py
from typing import Iterable, Optional


class CastMatchError(Exception):
    """Root of every error raised by castmatch."""


class ValidationError(CastMatchError):
    """Input violates a precondition. The CLI maps this to exit code 1."""


class DimensionMismatch(ValidationError):
    def __init__(self, expected: int, actual: int, what: str = "descriptor"):
        super().__init__(f"{what} has dimension {actual}, expected {expected}")
        self.expected = expected
        self.actual = actual


class ZeroVector(ValidationError):
    pass


class EmptySet(ValidationError):
    pass


class EmptyMatrix(ValidationError):
    pass


class NonFiniteCost(ValidationError):
    pass


class NonMonotonicFrame(ValidationError):
    def __init__(self, frame: int, last_frame: int):
        super().__init__(f"frame {frame} arrives after frame {last_frame}")
        self.frame = frame
        self.last_frame = last_frame


class EmptyTemplates(ValidationError):
    pass


class EmptyTrack(ValidationError):
    pass


class EmptyActorFile(ValidationError):
    pass


class InvalidConfig(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line
        self.reason = reason


class KeyMismatch(ValidationError):
    def __init__(self, missing: Iterable[int], extra: Iterable[int]):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        super().__init__(f"track ids differ: missing from predictions {self.missing}, "
                         f"not in ground truth {self.extra}")


class StageError(CastMatchError):
    """A pipeline stage failed; `cause` holds the original exception."""

    def __init__(self, stage: str, cause: Optional[BaseException] = None):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def is_validation(self) -> bool:
        return isinstance(self.cause, ValidationError)
