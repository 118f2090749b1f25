"""
errors.py
Exception hierarchy for nidwatch.

Every error carries a stable ``code`` so the CLI can report it the same way the
API layer reports ``VALIDATION_ERROR`` style codes.
"""

from typing import Optional


class NidError(ValueError):
    """Base class for data and precondition errors."""

    code = "NID_ERROR"

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code is not None:
            self.code = code

    def to_dict(self) -> dict:
        return {"error": str(self), "code": self.code}


class CorpusError(NidError):
    """Malformed corpus, stopword or lemma input."""

    code = "CORPUS_ERROR"


class VocabularyError(NidError):
    code = "EMPTY_VOCABULARY"


class RepresentationError(NidError):
    """Invalid document distribution or topic model input."""

    code = "REPRESENTATION_ERROR"


class DimensionError(NidError):
    code = "DIMENSION_MISMATCH"


class SeriesTooShortError(NidError):
    """Raised when a document stream cannot hold a full window on both sides."""

    code = "SERIES_TOO_SHORT"

    def __init__(self, source: str, length: int, minimum: int):
        self.source = source
        self.length = length
        self.minimum = minimum
        super().__init__(
            f"series too short for window: source '{source}' has {length} points, "
            f"needs at least {minimum}"
        )


class DegenerateFitError(NidError):
    code = "DEGENERATE_FIT"


class PeriodTooSmallError(NidError):
    """A regression period holds fewer than three defined points."""

    code = "PERIOD_TOO_SMALL"

    def __init__(self, period: str, n: int):
        self.period = period
        self.n = n
        super().__init__(f"period '{period}' has {n} defined points, needs at least 3")


class ModelSpecError(NidError):
    code = "MODEL_SPEC_ERROR"


class ConfigError(NidError):
    code = "CONFIG_ERROR"
