"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for every error the engine raises on purpose."""


class PreconditionError(EngineError, ValueError):
    """An operation was called with arguments outside its contract."""


class TransportError(EngineError):
    """A backend could not be reached, or kept failing after retries."""


class ProtocolError(EngineError):
    """A backend answered, but the response violates the wire contract."""


class JudgeVerdictError(ProtocolError):
    """The judge returned something other than TRUE/FALSE."""

    def __init__(self, verdict: str):
        super().__init__(f"judge returned unrecognized verdict: {verdict!r}")
        self.verdict = verdict


class InputError(EngineError):
    """Bulk input (JSONL, config file, request body) failed validation."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
