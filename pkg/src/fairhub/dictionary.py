"""Data dictionary parsing, validation, and serialization.

A dictionary is a CSV file with the exact header
``Id,Label,Datatype,Units,Enumeration,Required,Pattern,Min,Max`` where each
row specifies one variable. The Enumeration cell uses the grammar
``code="label"; code="label"`` with ``"`` escaped as ``""`` inside labels.

Issue codes published by this module:

  DICT_BAD_ENCODING   input is not valid UTF-8
  DICT_BAD_HEADER     header row missing or not exactly the nine columns
  DICT_EMPTY          no variable rows
  DICT_RAGGED_ROW     row does not have nine cells
  DICT_BAD_ID         variable name empty or not an identifier
  DICT_DUP_ID         variable name repeats an earlier row
  DICT_BAD_DATATYPE   datatype not one of the seven supported tags
  DICT_BAD_ENUM_SYNTAX  enumeration cell does not follow the grammar
  DICT_DUP_ENUM_CODE  one enumeration lists the same code twice
  DICT_ENUM_REQUIRED  datatype is enum but enumeration is empty
  DICT_UNEXPECTED_ENUM  enumeration given for a non-enum datatype
  DICT_BAD_REQUIRED   Required cell is not TRUE/FALSE/empty
  DICT_BAD_PATTERN    pattern does not compile as a regular expression
  DICT_BAD_BOUNDS     min/max unparseable, inverted, or on a non-numeric type
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass

from .issues import Issue, error, sort_issues

HEADER = ["Id", "Label", "Datatype", "Units", "Enumeration", "Required", "Pattern", "Min", "Max"]

DATATYPES = frozenset({"integer", "decimal", "string", "date", "datetime", "boolean", "enum"})
NUMERIC_DATATYPES = frozenset({"integer", "decimal"})

_ID_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class EnumerationEntry:
    code: str
    label: str


@dataclass(frozen=True)
class VariableSpec:
    id: str
    label: str
    datatype: str
    units: str | None = None
    enumeration: tuple[EnumerationEntry, ...] = ()
    required: bool = False
    pattern: str | None = None
    min: float | None = None
    max: float | None = None

    def enum_codes(self) -> set[str]:
        return {e.code for e in self.enumeration}


@dataclass(frozen=True)
class DataDictionary:
    variables: tuple[VariableSpec, ...]
    source_name: str = "dictionary.csv"

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {v.id: v for v in self.variables})

    def get(self, var_id: str) -> VariableSpec | None:
        return self._by_id.get(var_id)

    def ids(self) -> list[str]:
        return [v.id for v in self.variables]


class EnumerationSyntaxError(ValueError):
    pass


def parse_enumeration(cell: str) -> list[EnumerationEntry]:
    """Parse a ``code="label"; ...`` cell. Raises EnumerationSyntaxError."""
    s = cell.strip()
    entries: list[EnumerationEntry] = []
    i = 0
    while i < len(s):
        eq = s.find("=", i)
        if eq < 0:
            raise EnumerationSyntaxError(f"expected '=' after position {i}")
        code = s[i:eq].strip()
        if not code or any(c in code for c in '=";'):
            raise EnumerationSyntaxError(f"bad enumeration code {code!r}")
        if eq + 1 >= len(s) or s[eq + 1] != '"':
            raise EnumerationSyntaxError("label must be double-quoted")
        j = eq + 2
        parts: list[str] = []
        while True:
            q = s.find('"', j)
            if q < 0:
                raise EnumerationSyntaxError("unterminated label")
            if q + 1 < len(s) and s[q + 1] == '"':  # "" escapes a literal quote
                parts.append(s[j : q + 1])
                j = q + 2
                continue
            parts.append(s[j:q])
            j = q + 1
            break
        label = "".join(parts)
        if not label:
            raise EnumerationSyntaxError("empty label")
        entries.append(EnumerationEntry(code=code, label=label))
        if j == len(s):
            break
        if s[j] != ";":
            raise EnumerationSyntaxError(f"expected ';' at position {j}")
        i = j + 1
        while i < len(s) and s[i] == " ":
            i += 1
        if i == len(s):
            raise EnumerationSyntaxError("trailing ';'")
    return entries


def serialize_enumeration(entries: tuple[EnumerationEntry, ...]) -> str:
    return "; ".join(f'{e.code}="{e.label.replace(chr(34), chr(34) * 2)}"' for e in entries)


def _parse_bound(cell: str) -> float:
    return float(cell)


def _format_bound(v: float | None) -> str:
    if v is None:
        return ""
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def parse_dictionary(
    raw: bytes, source_name: str = "dictionary.csv"
) -> tuple[DataDictionary | None, list[Issue]]:
    """Parse dictionary CSV bytes.

    Returns ``(dictionary, issues)``; the dictionary is present iff there are
    no error-severity issues. All problems are reported, not just the first.
    """
    issues: list[Issue] = []
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        return None, [error("DICT_BAD_ENCODING", f"not valid UTF-8: {exc}", file=source_name, row=0)]
    if text.startswith("﻿"):
        text = text[1:]

    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return None, [error("DICT_BAD_HEADER", "file is empty, expected header row", file=source_name, row=1)]
    if rows[0] != HEADER:
        return None, [
            error(
                "DICT_BAD_HEADER",
                f"header must be exactly {','.join(HEADER)}, got {','.join(rows[0])}",
                file=source_name,
                row=1,
            )
        ]
    if len(rows) == 1:
        return None, [error("DICT_EMPTY", "dictionary declares no variables", file=source_name, row=1)]

    variables: list[VariableSpec] = []
    seen: set[str] = set()
    for idx, cells in enumerate(rows[1:], start=2):
        if len(cells) != len(HEADER):
            issues.append(
                error("DICT_RAGGED_ROW", f"expected {len(HEADER)} cells, got {len(cells)}", file=source_name, row=idx)
            )
            continue
        var_id, label, datatype, units, enum_cell, required_cell, pattern, min_cell, max_cell = (
            c.strip() for c in cells
        )
        row_ok = True

        if not _ID_RE.fullmatch(var_id):
            issues.append(error("DICT_BAD_ID", f"variable name {var_id!r} is not a valid identifier", file=source_name, row=idx, column="Id"))
            row_ok = False
        elif var_id in seen:
            issues.append(error("DICT_DUP_ID", f"variable {var_id!r} already declared", file=source_name, row=idx, column="Id"))
            row_ok = False
        else:
            seen.add(var_id)

        if datatype not in DATATYPES:
            issues.append(
                error(
                    "DICT_BAD_DATATYPE",
                    f"datatype {datatype!r} not in {sorted(DATATYPES)}",
                    file=source_name,
                    row=idx,
                    column="Datatype",
                )
            )
            row_ok = False

        enumeration: tuple[EnumerationEntry, ...] = ()
        if enum_cell:
            try:
                entries = parse_enumeration(enum_cell)
                enumeration = tuple(entries)
                codes = [e.code for e in entries]
                if len(set(codes)) != len(codes):
                    dupes = sorted({c for c in codes if codes.count(c) > 1})
                    issues.append(
                        error("DICT_DUP_ENUM_CODE", f"duplicate enumeration codes {dupes}", file=source_name, row=idx, column="Enumeration")
                    )
                    row_ok = False
            except EnumerationSyntaxError as exc:
                issues.append(error("DICT_BAD_ENUM_SYNTAX", str(exc), file=source_name, row=idx, column="Enumeration"))
                row_ok = False

        if datatype == "enum" and not enum_cell:
            issues.append(error("DICT_ENUM_REQUIRED", "enum datatype requires an enumeration", file=source_name, row=idx, column="Enumeration"))
            row_ok = False
        if datatype in DATATYPES and datatype != "enum" and enum_cell:
            issues.append(
                error("DICT_UNEXPECTED_ENUM", f"enumeration not allowed on datatype {datatype!r}", file=source_name, row=idx, column="Enumeration")
            )
            row_ok = False

        required = False
        if required_cell:
            if required_cell.upper() == "TRUE":
                required = True
            elif required_cell.upper() == "FALSE":
                required = False
            else:
                issues.append(
                    error("DICT_BAD_REQUIRED", f"Required must be TRUE or FALSE, got {required_cell!r}", file=source_name, row=idx, column="Required")
                )
                row_ok = False

        if pattern:
            try:
                re.compile(pattern)
            except re.error as exc:
                issues.append(error("DICT_BAD_PATTERN", f"pattern does not compile: {exc}", file=source_name, row=idx, column="Pattern"))
                row_ok = False

        min_v: float | None = None
        max_v: float | None = None
        for cell, col in ((min_cell, "Min"), (max_cell, "Max")):
            if not cell:
                continue
            try:
                v = _parse_bound(cell)
            except ValueError:
                issues.append(error("DICT_BAD_BOUNDS", f"{col} {cell!r} is not numeric", file=source_name, row=idx, column=col))
                row_ok = False
                continue
            if col == "Min":
                min_v = v
            else:
                max_v = v
        if (min_v is not None or max_v is not None) and datatype in DATATYPES and datatype not in NUMERIC_DATATYPES:
            issues.append(
                error("DICT_BAD_BOUNDS", f"bounds only allowed on integer/decimal, not {datatype!r}", file=source_name, row=idx, column="Min")
            )
            row_ok = False
        if min_v is not None and max_v is not None and min_v > max_v:
            issues.append(error("DICT_BAD_BOUNDS", f"min {min_v:g} > max {max_v:g}", file=source_name, row=idx, column="Min"))
            row_ok = False

        if row_ok:
            variables.append(
                VariableSpec(
                    id=var_id,
                    label=label,
                    datatype=datatype,
                    units=units or None,
                    enumeration=enumeration,
                    required=required,
                    pattern=pattern or None,
                    min=min_v,
                    max=max_v,
                )
            )

    issues = sort_issues(issues)
    if issues:
        return None, issues
    return DataDictionary(variables=tuple(variables), source_name=source_name), []


def validate_dictionary(d: DataDictionary) -> list[Issue]:
    """Check every VariableSpec invariant on an already-constructed dictionary.

    Rows are reported as if the dictionary were a CSV file: the variable at
    position i lives on row i + 2 (header is row 1). Empty list iff valid.
    """
    issues: list[Issue] = []
    src = d.source_name
    if not d.variables:
        issues.append(error("DICT_EMPTY", "dictionary declares no variables", file=src, row=1))
    seen: set[str] = set()
    for i, v in enumerate(d.variables):
        row = i + 2
        if not _ID_RE.fullmatch(v.id):
            issues.append(error("DICT_BAD_ID", f"variable name {v.id!r} is not a valid identifier", file=src, row=row, column="Id"))
        elif v.id in seen:
            issues.append(error("DICT_DUP_ID", f"variable {v.id!r} already declared", file=src, row=row, column="Id"))
        else:
            seen.add(v.id)
        if v.datatype not in DATATYPES:
            issues.append(error("DICT_BAD_DATATYPE", f"datatype {v.datatype!r} not in {sorted(DATATYPES)}", file=src, row=row, column="Datatype"))
        if v.datatype == "enum" and not v.enumeration:
            issues.append(error("DICT_ENUM_REQUIRED", "enum datatype requires an enumeration", file=src, row=row, column="Enumeration"))
        if v.datatype != "enum" and v.enumeration:
            issues.append(error("DICT_UNEXPECTED_ENUM", f"enumeration not allowed on datatype {v.datatype!r}", file=src, row=row, column="Enumeration"))
        codes = [e.code for e in v.enumeration]
        if len(set(codes)) != len(codes):
            dupes = sorted({c for c in codes if codes.count(c) > 1})
            issues.append(error("DICT_DUP_ENUM_CODE", f"duplicate enumeration codes {dupes}", file=src, row=row, column="Enumeration"))
        for e in v.enumeration:
            if not e.code or e.code != e.code.strip() or any(c in e.code for c in '=";') or not e.label:
                issues.append(error("DICT_BAD_ENUM_SYNTAX", f"entry {e.code!r} violates the enumeration grammar", file=src, row=row, column="Enumeration"))
        if v.pattern is not None:
            try:
                re.compile(v.pattern)
            except re.error as exc:
                issues.append(error("DICT_BAD_PATTERN", f"pattern does not compile: {exc}", file=src, row=row, column="Pattern"))
        if (v.min is not None or v.max is not None) and v.datatype not in NUMERIC_DATATYPES:
            issues.append(error("DICT_BAD_BOUNDS", f"bounds only allowed on integer/decimal, not {v.datatype!r}", file=src, row=row, column="Min"))
        if v.min is not None and v.max is not None and v.min > v.max:
            issues.append(error("DICT_BAD_BOUNDS", f"min {v.min:g} > max {v.max:g}", file=src, row=row, column="Min"))
    return sort_issues(issues)


def serialize_dictionary(d: DataDictionary) -> bytes:
    """Emit dictionary CSV such that parse(serialize(d)) reproduces d."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for v in d.variables:
        w.writerow(
            [
                v.id,
                v.label,
                v.datatype,
                v.units or "",
                serialize_enumeration(v.enumeration),
                "TRUE" if v.required else "FALSE",
                v.pattern or "",
                _format_bound(v.min),
                _format_bound(v.max),
            ]
        )
    return buf.getvalue().encode("utf-8")
