"""Exception types shared across the package."""


class ClarigateError(Exception):
    """Base class for all package-specific errors."""


class DatasetSchemaError(ClarigateError):
    """A task record does not match the documented dataset schema.

    Carries the offending record index and field name when known.
    """

    def __init__(self, message: str, index: int | None = None, field: str | None = None):
        self.index = index
        self.field = field
        if index is not None:
            message = f"record {index}: {message}"
        super().__init__(message)


class GrammarError(ClarigateError):
    """Assistant text violates the dialogue marker grammar."""

    def __init__(self, message: str, span: str | None = None):
        self.span = span
        if span is not None:
            preview = span if len(span) <= 120 else span[:117] + "..."
            message = f"{message} (offending span: {preview!r})"
        super().__init__(message)


class PhaseError(GrammarError):
    """Assistant text is well-formed but wrong for the current phase."""


class BackendError(ClarigateError):
    """Base class for chat-backend failures."""

    retryable = False


class RateLimitError(BackendError):
    retryable = True


class BackendTimeoutError(BackendError):
    retryable = True


class AuthError(BackendError):
    retryable = False


class MalformedResponseError(BackendError):
    """The backend answered, but not in the expected wire shape."""

    retryable = False


class StructuredOutputError(BackendError):
    """The model failed to produce arguments matching the tool schema.

    ``raw_text`` holds the last raw model output for debugging.
    """

    retryable = False

    def __init__(self, message: str, raw_text: str = ""):
        self.raw_text = raw_text
        super().__init__(message)


class ProtocolError(ClarigateError):
    """A session could not be driven through the clarification protocol.

    Raised after grammar-repair retries are exhausted; carries the raw
    transcript so the failure can be audited.
    """

    def __init__(self, message: str, transcript: list | None = None):
        self.transcript = list(transcript or [])
        super().__init__(message)


class SessionStateError(ClarigateError):
    """An operation was applied to a session in the wrong phase."""


class SessionBusyError(ClarigateError):
    """A session is already advancing in another thread."""


class RecordRejectedError(ClarigateError):
    """A simulated conversation failed validation and was rejected.

    The partially built record payload is kept on the exception so callers
    can write it to an audit log.
    """

    def __init__(self, message: str, audit: dict | None = None):
        self.audit = audit or {}
        super().__init__(message)


class PipelineError(ClarigateError):
    """A CLI pipeline failed; message is safe to show to the operator."""
