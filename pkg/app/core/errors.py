"""
Error hierarchy shared by the analysis engine, the tool server and the CLI.
Every error maps to a stable code so callers never have to parse messages.
"""
from typing import Any, Optional


class CodeBadgerError(Exception):
    code = "internal_error"
    http_status = 500

    def __init__(self, message: str, detail: Optional[Any] = None):
        super().__init__(message)
        self.message = message
        self.detail = detail

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message, "detail": self.detail}


class ValidationFailed(CodeBadgerError):
    code = "validation_error"
    http_status = 422


class UnknownTool(CodeBadgerError):
    code = "unknown_tool"
    http_status = 404


class UnknownSession(CodeBadgerError):
    code = "unknown_session"
    http_status = 404


class UnknownJob(CodeBadgerError):
    code = "unknown_job"
    http_status = 404


class SessionNotReady(CodeBadgerError):
    code = "session_not_ready"
    http_status = 409


class ConfigError(CodeBadgerError):
    code = "config_error"
    http_status = 400


class IoError(CodeBadgerError):
    code = "io_error"
    http_status = 400


class ResponseTooLarge(CodeBadgerError):
    code = "response_too_large"
    http_status = 400


# --- Frontend ---

class LexError(CodeBadgerError):
    code = "lex_error"
    http_status = 400

    def __init__(self, location, message: str):
        super().__init__(f"{location}: {message}", detail={"location": str(location)})
        self.location = location


class ParseError(CodeBadgerError):
    code = "parse_error"
    http_status = 400

    def __init__(self, location, expected: str, found: str):
        super().__init__(
            f"{location}: expected {expected}, found {found}",
            detail={"location": str(location), "expected": expected, "found": found},
        )
        self.location = location
        self.expected = expected
        self.found = found


class ParseFailed(CodeBadgerError):
    """All file-level errors of one codebase, reported together."""

    code = "parse_error"
    http_status = 400

    def __init__(self, errors: list):
        self.errors = list(errors)
        super().__init__(
            f"{len(self.errors)} file(s) failed to parse",
            detail=[e.message for e in self.errors],
        )


class BuildFailed(CodeBadgerError):
    code = "build_failed"
    http_status = 400

    def __init__(self, report: list):
        self.report = list(report)
        super().__init__(f"CPG build failed for {len(self.report)} file(s)", detail=self.report)


# --- Analyses ---

class UnknownMethod(CodeBadgerError):
    code = "unknown_method"
    http_status = 400


class AmbiguousMethod(CodeBadgerError):
    code = "ambiguous_method"
    http_status = 400


class UnresolvedPoint(CodeBadgerError):
    code = "unresolved_point"
    http_status = 400


class NotABoundsContext(CodeBadgerError):
    code = "not_a_bounds_context"
    http_status = 400


class QueryError(CodeBadgerError):
    code = "query_error"
    http_status = 400


class RangeError(CodeBadgerError):
    code = "range_error"
    http_status = 400
