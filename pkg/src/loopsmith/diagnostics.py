"""Source positions, diagnostics, and the error types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourcePos:
    line: int
    col: int
    filename: str | None = None

    def __str__(self) -> str:
        name = self.filename or "<input>"
        return f"{name}:{self.line}:{self.col}"


@dataclass(frozen=True)
class Diagnostic:
    """One reportable problem. Severity is 'error' or 'warning'."""

    message: str
    pos: SourcePos | None = None
    severity: str = "error"

    def render(self) -> str:
        where = str(self.pos) if self.pos else "<input>"
        return f"{where}: {self.severity}: {self.message}"


class LangError(Exception):
    """Raised when parsing, validation, or evaluation produces error diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic] | Diagnostic | str):
        if isinstance(diagnostics, str):
            diagnostics = [Diagnostic(diagnostics)]
        elif isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(d.message for d in self.diagnostics))

    def render(self) -> str:
        return "\n".join(d.render() for d in self.diagnostics)


def error(message: str, pos: SourcePos | None = None) -> Diagnostic:
    return Diagnostic(message, pos)
