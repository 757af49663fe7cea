"""Shared issue model used by every validation surface.

An Issue pinpoints one problem in one place. Row indices are 1-based and
count the header as row 1, so the first data row is row 2. Issues carry a
code from a closed, published set (each module declares its own codes) so
reports are machine-readable and stable across versions.
"""

from __future__ import annotations

from dataclasses import dataclass

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True, order=True)
class Issue:
    severity: str
    code: str
    file: str
    row: int
    column: str
    message: str

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "file": self.file,
            "row": self.row,
            "column": self.column,
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Issue":
        return cls(
            severity=d["severity"],
            code=d["code"],
            file=d.get("file", ""),
            row=int(d.get("row", 0)),
            column=d.get("column", ""),
            message=d.get("message", ""),
        )

    def render(self) -> str:
        loc = self.file or "-"
        return f"{self.severity.upper()} {self.code} {loc}:{self.row}:{self.column or '-'} {self.message}"


def error(code: str, message: str, *, file: str = "", row: int = 0, column: str = "") -> Issue:
    return Issue(ERROR, code, file, row, column, message)


def warning(code: str, message: str, *, file: str = "", row: int = 0, column: str = "") -> Issue:
    return Issue(WARNING, code, file, row, column, message)


def has_errors(issues: list[Issue]) -> bool:
    return any(i.severity == ERROR for i in issues)


def sort_issues(issues: list[Issue]) -> list[Issue]:
    """Deterministic order: by location first, then code, then severity."""
    return sorted(issues, key=lambda i: (i.file, i.row, i.column, i.code, i.severity, i.message))
