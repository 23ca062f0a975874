"""Diagnostic exceptions shared by every stage of the toolchain."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Span:
    file: str
    start: tuple[int, int]
    end: tuple[int, int]

    def __str__(self) -> str:
        line, col = self.start
        return f"{self.file}:{line}:{col}"

    def to(self, other: Span | None) -> Span:
        if other is None:
            return self
        return Span(self.file, self.start, other.end)


class Diagnostic(Exception):
    """Base class for user-facing errors; `code` is stable for tooling."""

    code = "error"

    def __init__(self, message: str, span: Span | None = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def render(self) -> str:
        # first line after "Error: ", continuation lines indented under it
        first, *rest = self.message.split("\n")
        where = f"{self.span}: " if self.span else ""
        lines = [f"{where}Error: {first}"]
        lines += ["       " + line for line in rest]
        return "\n".join(lines)

    def to_json(self) -> dict:
        span = self.span
        return {
            "file": span.file if span else None,
            "line": span.start[0] if span else None,
            "col": span.start[1] if span else None,
            "code": self.code,
            "message": self.message,
        }


class ParseError(Diagnostic):
    code = "parse-error"

    def __init__(self, message, span=None, expected=()):
        super().__init__(message, span)
        self.expected = frozenset(expected)


class KindError(Diagnostic):
    code = "kind-error"


class VarianceError(KindError):
    code = "variance-error"

    def __init__(self, message, span=None, param=None, inferred=None, declared=None):
        super().__init__(message, span)
        self.param = param
        self.inferred = inferred
        self.declared = declared


class TypeCheckError(Diagnostic):
    """Type error; `kind` is one of the codes listed in KINDS."""

    KINDS = (
        "mismatch",
        "not-a-function",
        "unknown-name",
        "coercion-failed",
        "pack-mismatch",
        "nonexhaustive-match",
        "annotation-required",
    )

    def __init__(self, kind, message, span=None, expected=None, actual=None, failure=None):
        assert kind in self.KINDS, kind
        super().__init__(message, span)
        self.kind = kind
        self.expected = expected
        self.actual = actual
        self.failure = failure

    @property
    def code(self):
        return self.kind
