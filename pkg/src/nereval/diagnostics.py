"""Diagnostics reported by parsers, validators and the perturbation engine.

An ERROR means the offending item was excluded from evaluation; a WARNING
means the item was kept (possibly after repair). Diagnostics are returned to
callers, never accumulated globally.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    doc_id: str
    location: str  # e.g. "line 3", "offset 17", or "" when not applicable
    code: str
    detail: str

    def render(self) -> str:
        where = f"{self.doc_id}:{self.location}" if self.location else self.doc_id
        return f"{self.severity.value}: {where}: {self.code}: {self.detail}"


def error(doc_id: str, location: str, code: str, detail: str) -> Diagnostic:
    return Diagnostic(Severity.ERROR, doc_id, location, code, detail)


def warning(doc_id: str, location: str, code: str, detail: str) -> Diagnostic:
    return Diagnostic(Severity.WARNING, doc_id, location, code, detail)


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity is Severity.ERROR for d in diagnostics)
