"""Rule-based PII/PHI screening of tables.

Two detector kinds: ``cell-pattern`` detectors run against every cell,
``column-name`` detectors against every header name. Findings mask the
matched text to its first and last character so reports never reproduce a
full identifier. High-confidence findings are the ones a pipeline treats as
gating; column-name heuristics and the street-address heuristic are medium.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .tabledata import Table

CELL_PATTERN = "cell-pattern"
COLUMN_NAME = "column-name"

HIGH = "high"
MEDIUM = "medium"


@dataclass(frozen=True)
class Detector:
    id: str
    kind: str
    pattern: str
    confidence: str

    def compiled(self) -> re.Pattern:
        return _compile(self.pattern)


@dataclass(frozen=True)
class Finding:
    detector_id: str
    row: int
    column: str
    excerpt: str
    confidence: str

    def to_dict(self) -> dict:
        return {
            "detector": self.detector_id,
            "row": self.row,
            "column": self.column,
            "excerpt": self.excerpt,
            "confidence": self.confidence,
        }


_PATTERN_CACHE: dict[str, re.Pattern] = {}


def _compile(pattern: str) -> re.Pattern:
    pat = _PATTERN_CACHE.get(pattern)
    if pat is None:
        pat = re.compile(pattern)
        _PATTERN_CACHE[pattern] = pat
    return pat


_STREET_SUFFIXES = (
    "street|st|avenue|ave|road|rd|boulevard|blvd|drive|dr|lane|ln|court|ct|place|pl|terrace|ter|way"
)

_COLUMN_TOKENS = ("name", "ssn", "address", "phone", "email", "dob")


def builtin_detectors() -> list[Detector]:
    """The default detector set. Pattern matching only; no statistical model."""
    detectors = [
        Detector("ssn", CELL_PATTERN, r"\b\d{3}-\d{2}-\d{4}\b", HIGH),
        Detector("email", CELL_PATTERN, r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}\b", HIGH),
        Detector("phone", CELL_PATTERN, r"(?<!\d)(?:\+?1[-.\s])?\(?\d{3}\)?[-.\s]\d{3}[-.\s]\d{4}(?!\d)", HIGH),
        Detector("zip_plus4", CELL_PATTERN, r"\b\d{5}-\d{4}\b", HIGH),
        Detector(
            "street_address",
            CELL_PATTERN,
            r"(?i:\b\d+\s+[A-Za-z][A-Za-z ]*\s(?:%s)\b)" % _STREET_SUFFIXES,
            MEDIUM,
        ),
    ]
    for token in _COLUMN_TOKENS:
        detectors.append(Detector(f"column_{token}", COLUMN_NAME, r"(?i:%s)" % re.escape(token), MEDIUM))
    return detectors


def mask_excerpt(matched: str) -> str:
    """First and last character with a fixed infix; never the full token."""
    if len(matched) <= 2:
        return "***"
    return f"{matched[0]}***{matched[-1]}"


def scan_table(t: Table, detectors: list[Detector] | None = None) -> list[Finding]:
    """Run every detector over a table.

    Cell-pattern detectors are evaluated once per distinct value per column
    and only matching values are traced back to row coordinates. Findings
    are sorted by (row, column, detector id); header findings sit at row 1.
    """
    if detectors is None:
        detectors = builtin_detectors()
    cell_detectors = [(d, d.compiled()) for d in detectors if d.kind == CELL_PATTERN]
    name_detectors = [(d, d.compiled()) for d in detectors if d.kind == COLUMN_NAME]
    # one screening pass per value; individual detectors only run on hits
    screen = _compile("|".join(f"(?:{d.pattern})" for d, _ in cell_detectors)) if cell_detectors else None

    findings: list[Finding] = []
    for col in t.header:
        for det, pat in name_detectors:
            m = pat.search(col)
            if m:
                findings.append(Finding(det.id, 1, col, mask_excerpt(m.group(0)), det.confidence))

    columns = t.columns()
    for ci, col in enumerate(t.header):
        hits: dict[str, list[tuple[Detector, str]]] = {}
        for value in t.distinct(ci):
            if not value or screen is None or screen.search(value) is None:
                continue
            for det, pat in cell_detectors:
                m = pat.search(value)
                if m:
                    hits.setdefault(value, []).append((det, m.group(0)))
        if not hits:
            continue
        for ri, value in enumerate(columns[ci]):
            for det, matched in hits.get(value, ()):
                findings.append(Finding(det.id, ri + 2, col, mask_excerpt(matched), det.confidence))

    findings.sort(key=lambda f: (f.row, f.column, f.detector_id))
    return findings


def has_high_confidence(findings: list[Finding]) -> bool:
    return any(f.confidence == HIGH for f in findings)
