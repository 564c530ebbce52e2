"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class ScholarEvalError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(ScholarEvalError):
    """A domain value violates one of its invariants."""


class DatasetNotFoundError(ScholarEvalError):
    """A dataset path or file does not exist."""


class DatasetParseError(ScholarEvalError):
    """A dataset record is malformed; carries file and line context."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f" [{path}"
            where += f":{line}]" if line is not None else "]"
        super().__init__(message + where)


class TemplateError(ScholarEvalError):
    """Prompt rendering failed; names the offending placeholder."""


class FormatError(ScholarEvalError):
    """A backend response did not contain the expected structured block."""


class StructuredParseError(ScholarEvalError):
    """A structured block was found but could not be parsed after bounded repair."""


class ContractError(ScholarEvalError):
    """A backend response parsed but violates an output contract (range, shape)."""


class ExtractionEmptyError(ScholarEvalError):
    """The backend extracted nothing from an idea that should yield units."""


class BackendUnavailableError(ScholarEvalError):
    """A remote backend failed after exhausting its retry budget."""


class FixtureMissError(ScholarEvalError):
    """The fixture transcript has no response for a prompt digest."""

    def __init__(self, digest: str):
        self.digest = digest
        super().__init__(f"no recorded response for prompt digest {digest}")


class RetrievalError(ScholarEvalError):
    """A scholarly endpoint failed after retries."""


class RateLimitExceededError(RetrievalError):
    """The scholarly endpoint rejected the request for quota reasons."""

    def __init__(self, message: str, retry_after: float | None = None):
        self.retry_after = retry_after
        super().__init__(message)


class NotFoundError(ScholarEvalError):
    """A requested identifier is unknown to the corpus or job store."""


class DownloadError(ScholarEvalError):
    """Full-text download failed."""


class CapacityError(ScholarEvalError):
    """A payload exceeded a configured size cap."""


class DocumentParseError(ScholarEvalError):
    """The structure-extraction service rejected the document."""


class DependencyUnavailableError(ScholarEvalError):
    """An external service (parser, embeddings) is unreachable."""


class EvidenceUnavailableError(ScholarEvalError):
    """Retrieval failed entirely for a method; no evidence could be gathered."""


class CitationIntegrityError(ScholarEvalError):
    """A citation marker does not resolve to the run's evidence store."""

    def __init__(self, message: str, markers: list[str] | None = None):
        self.markers = markers or []
        super().__init__(message)


class UndefinedRateError(ScholarEvalError):
    """A rate was requested over an empty reference list."""


class JobStateError(ScholarEvalError):
    """A job operation conflicts with the job's current state."""
