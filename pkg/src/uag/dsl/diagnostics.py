"""Positioned diagnostics for workspace sources."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    file: str
    line: int
    col: int
    message: str
    kind: str = "syntax"        # lexical, syntax, resolution, typing, totality, identity
    hint: str | None = None

    def format(self) -> str:
        text = f"{self.file}:{self.line}:{self.col}: {self.severity}: [{self.kind}] {self.message}"
        if self.hint:
            text += f"\n  hint: {self.hint}"
        return text

    def to_json(self) -> dict:
        out = {"severity": self.severity, "file": self.file, "line": self.line, "col": self.col,
               "kind": self.kind, "message": self.message}
        if self.hint:
            out["hint"] = self.hint
        return out


class DslError(Exception):
    """Raised with one or more diagnostics when a source cannot be accepted."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("\n".join(d.format() for d in diagnostics))
        self.diagnostics = diagnostics
