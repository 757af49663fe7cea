"""Tabular data files: parsing, dictionary conformance, summary statistics.

Tables are rectangular grids of string cells under a header of distinct
column names. Conformance checks every cell against its variable spec and
every column against the dictionary. Cell values equal to a configured
missing sentinel (empty string by default) count as missing everywhere.

Issue codes published by this module:

  DATA_BAD_ENCODING        input is not valid UTF-8
  DATA_EMPTY               no header row at all
  DATA_DUP_COLUMN          header repeats a column name
  DATA_RAGGED_ROW          row length differs from header length
  DATA_UNDECLARED_VARIABLE column not declared in the dictionary (error)
  DATA_MISSING_VARIABLE    declared variable absent from the table (warning)
  DATA_REQUIRED_MISSING    required variable has a missing cell
  DATA_TYPE_MISMATCH       cell does not parse as the declared datatype
  DATA_ENUM_VIOLATION      cell not among the enumeration codes
  DATA_PATTERN_MISMATCH    cell does not match the declared pattern
  DATA_OUT_OF_BOUNDS       numeric cell outside [min, max]
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from datetime import date, datetime

from .dictionary import DataDictionary, VariableSpec
from .issues import Issue, error, sort_issues, warning

DEFAULT_MISSING = frozenset({""})

_INT_RE = re.compile(r"[+-]?\d+\Z")
_DECIMAL_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?\Z")
_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}\Z")
_DATETIME_RE = re.compile(r"\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\Z")
_BOOL_VALUES = frozenset({"true", "false"})


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    source_name: str = "data.csv"

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column_index(self, name: str) -> int:
        return self.header.index(name)

    def columns(self) -> list[tuple[str, ...]]:
        """Column-major view, computed once and cached (Table is immutable)."""
        cached = self.__dict__.get("_columns")
        if cached is None:
            cached = list(zip(*self.rows)) if self.rows else [() for _ in self.header]
            object.__setattr__(self, "_columns", cached)
        return cached

    def column(self, name: str) -> tuple[str, ...]:
        return self.columns()[self.header.index(name)]

    def distinct(self, index: int) -> frozenset:
        """Distinct cell values of one column, cached."""
        cache = self.__dict__.get("_distinct")
        if cache is None:
            cache = {}
            object.__setattr__(self, "_distinct", cache)
        values = cache.get(index)
        if values is None:
            values = frozenset(self.columns()[index])
            cache[index] = values
        return values

    @classmethod
    def from_columns(cls, header, columns, source_name: str = "data.csv", distinct_seed: dict | None = None) -> "Table":
        """Build a table column-wise, seeding the column cache.

        distinct_seed carries already-known distinct sets (index -> frozenset)
        for columns copied unchanged from another table.
        """
        columns = [tuple(c) for c in columns]
        rows = tuple(zip(*columns)) if columns and columns[0] else ()
        t = cls(header=tuple(header), rows=rows, source_name=source_name)
        object.__setattr__(t, "_columns", columns)
        if distinct_seed:
            object.__setattr__(t, "_distinct", dict(distinct_seed))
        return t

    def renamed(self, source_name: str) -> "Table":
        """Same data under a new source name; caches carry over."""
        t = Table(header=self.header, rows=self.rows, source_name=source_name)
        for attr in ("_columns", "_distinct"):
            if attr in self.__dict__:
                object.__setattr__(t, attr, self.__dict__[attr])
        return t

    def known_distinct(self) -> dict[int, frozenset]:
        return dict(self.__dict__.get("_distinct", ()))


@dataclass(frozen=True)
class VariableStats:
    missing: int
    min: float | None = None
    max: float | None = None
    mean: float | None = None

    def to_dict(self) -> dict:
        d: dict = {"missing": self.missing}
        if self.min is not None:
            d.update({"min": self.min, "max": self.max, "mean": self.mean})
        return d


@dataclass(frozen=True)
class SummaryStats:
    n_records: int
    n_variables: int
    per_variable: dict[str, VariableStats] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_variables": self.n_variables,
            "per_variable": {k: v.to_dict() for k, v in sorted(self.per_variable.items())},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SummaryStats":
        per = {
            k: VariableStats(
                missing=int(v["missing"]),
                min=v.get("min"),
                max=v.get("max"),
                mean=v.get("mean"),
            )
            for k, v in d.get("per_variable", {}).items()
        }
        return cls(n_records=int(d["n_records"]), n_variables=int(d["n_variables"]), per_variable=per)


def parse_table(raw: bytes, source_name: str = "data.csv") -> tuple[Table | None, list[Issue]]:
    """Parse CSV bytes into a rectangular Table, or report why not."""
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        return None, [error("DATA_BAD_ENCODING", f"not valid UTF-8: {exc}", file=source_name, row=0)]
    if text.startswith("﻿"):
        text = text[1:]

    if '"' not in text:
        # no quoting anywhere, so line and comma splits are exact
        if "\r" in text:
            text = text.replace("\r\n", "\n")
        if not text:
            return None, [error("DATA_EMPTY", "file has no header row", file=source_name, row=1)]
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if not lines:
            return None, [error("DATA_EMPTY", "file has no header row", file=source_name, row=1)]
        header = lines[0].split(",")
        raw_rows = [line.split(",") for line in lines[1:]]
    else:
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            return None, [error("DATA_EMPTY", "file has no header row", file=source_name, row=1)]
        raw_rows = list(reader)
        if any(not r for r in raw_rows):  # blank line: a record holding one empty field
            raw_rows = [r if r else [""] for r in raw_rows]

    issues: list[Issue] = []
    dupes = sorted({c for c in header if header.count(c) > 1})
    for c in dupes:
        issues.append(error("DATA_DUP_COLUMN", f"column {c!r} appears more than once", file=source_name, row=1, column=c))

    width = len(header)
    if any(len(r) != width for r in raw_rows):
        for idx, cells in enumerate(raw_rows, start=2):
            if len(cells) != width:
                issues.append(
                    error("DATA_RAGGED_ROW", f"expected {width} cells, got {len(cells)}", file=source_name, row=idx)
                )

    issues = sort_issues(issues)
    if issues:
        return None, issues
    return Table(header=tuple(header), rows=tuple(map(tuple, raw_rows)), source_name=source_name), []


def serialize_table(t: Table) -> bytes:
    # join fast path, verified exact: if no cell needed quoting, the comma,
    # newline, quote, and CR counts all come out right; otherwise re-emit
    # through the csv writer
    parts = [",".join(t.header)]
    parts.extend(map(",".join, t.rows))
    text = "\n".join(parts) + "\n"
    if (
        '"' not in text
        and "\r" not in text
        and text.count(",") == (t.n_rows + 1) * (len(t.header) - 1)
        and text.count("\n") == t.n_rows + 1
    ):
        return text.encode("utf-8")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(t.header)
    w.writerows(t.rows)
    return buf.getvalue().encode("utf-8")


def is_valid_cell(value: str, var: VariableSpec) -> bool:
    """True iff a single non-missing cell conforms to the variable spec."""
    dt = var.datatype
    if dt == "integer":
        if not _INT_RE.fullmatch(value):
            return False
    elif dt == "decimal":
        if not _DECIMAL_RE.fullmatch(value):
            return False
    elif dt == "date":
        if not _DATE_RE.fullmatch(value):
            return False
        try:
            date.fromisoformat(value)
        except ValueError:
            return False
    elif dt == "datetime":
        if not _DATETIME_RE.fullmatch(value):
            return False
        try:
            datetime.fromisoformat(value)
        except ValueError:
            return False
    elif dt == "boolean":
        if value.lower() not in _BOOL_VALUES:
            return False
    elif dt == "enum":
        if value not in var.enum_codes():
            return False
    if var.pattern is not None and re.fullmatch(var.pattern, value) is None:
        return False
    if var.min is not None or var.max is not None:
        try:
            num = float(value)
        except ValueError:
            return True  # a type mismatch, already reported separately
        if var.min is not None and num < var.min:
            return False
        if var.max is not None and num > var.max:
            return False
    return True


def _classify_cell(value: str, var: VariableSpec) -> list[tuple[str, str]]:
    """All (code, message) pairs for one non-missing cell."""
    out: list[tuple[str, str]] = []
    dt = var.datatype
    type_ok = True
    if dt == "integer" and not _INT_RE.fullmatch(value):
        type_ok = False
    elif dt == "decimal" and not _DECIMAL_RE.fullmatch(value):
        type_ok = False
    elif dt == "date":
        if not _DATE_RE.fullmatch(value):
            type_ok = False
        else:
            try:
                date.fromisoformat(value)
            except ValueError:
                type_ok = False
    elif dt == "datetime":
        if not _DATETIME_RE.fullmatch(value):
            type_ok = False
        else:
            try:
                datetime.fromisoformat(value)
            except ValueError:
                type_ok = False
    elif dt == "boolean" and value.lower() not in _BOOL_VALUES:
        type_ok = False
    if not type_ok:
        out.append(("DATA_TYPE_MISMATCH", f"{value!r} is not a valid {dt}"))
    if dt == "enum" and value not in var.enum_codes():
        out.append(("DATA_ENUM_VIOLATION", f"{value!r} not in enumeration {sorted(var.enum_codes())}"))
    if var.pattern is not None and re.fullmatch(var.pattern, value) is None:
        out.append(("DATA_PATTERN_MISMATCH", f"{value!r} does not match pattern {var.pattern!r}"))
    if type_ok and (var.min is not None or var.max is not None):
        try:
            num = float(value)
        except ValueError:
            num = None
        if num is not None:
            if var.min is not None and num < var.min:
                out.append(("DATA_OUT_OF_BOUNDS", f"{value} < min {var.min:g}"))
            elif var.max is not None and num > var.max:
                out.append(("DATA_OUT_OF_BOUNDS", f"{value} > max {var.max:g}"))
    return out


def validate_against_dictionary(
    t: Table,
    d: DataDictionary,
    missing_values: frozenset[str] = DEFAULT_MISSING,
) -> list[Issue]:
    """Check every column and cell of a table against its dictionary.

    Classifies distinct values once per column and only walks the cells of
    columns that actually contain offending or missing values, so clean wide
    tables validate in roughly one set-build per column.
    """
    issues: list[Issue] = []
    src = t.source_name
    declared = {v.id for v in d.variables}

    for col in t.header:
        if col not in declared:
            issues.append(
                error("DATA_UNDECLARED_VARIABLE", f"column {col!r} not declared in dictionary", file=src, row=1, column=col)
            )
    present = set(t.header)
    for v in d.variables:
        if v.id not in present:
            issues.append(
                warning("DATA_MISSING_VARIABLE", f"declared variable {v.id!r} absent from data file", file=src, row=1, column=v.id)
            )

    columns = t.columns()
    for ci, col in enumerate(t.header):
        var = d.get(col)
        if var is None:
            continue
        distinct = t.distinct(ci)
        bad: dict[str, list[tuple[str, str]]] = {}
        for value in distinct:
            if value in missing_values:
                continue
            found = _classify_cell(value, var)
            if found:
                bad[value] = found
        has_missing = bool(distinct & missing_values)
        if not bad and not (var.required and has_missing):
            continue
        for ri, value in enumerate(columns[ci]):
            row = ri + 2
            if value in missing_values:
                if var.required:
                    issues.append(
                        error("DATA_REQUIRED_MISSING", f"required variable {col!r} is missing", file=src, row=row, column=col)
                    )
                continue
            for code, msg in bad.get(value, ()):
                issues.append(error(code, msg, file=src, row=row, column=col))

    return sort_issues(issues)


def summarize(
    t: Table,
    d: DataDictionary | None = None,
    missing_values: frozenset[str] = DEFAULT_MISSING,
    reuse: tuple[Table, DataDictionary, SummaryStats] | None = None,
) -> SummaryStats:
    """Record/variable counts plus per-variable missingness and numeric stats.

    Numeric min/max/mean are computed for columns declared integer or decimal
    (every parseable column when no dictionary is given), skipping missing
    and unparseable cells. ``reuse`` lets a caller hand in another table's
    stats; columns that are the same object with the same numeric
    classification copy over instead of being recomputed.
    """
    reusable: dict[int, tuple[bool, VariableStats]] = {}
    if reuse is not None:
        src_table, src_dict, src_stats = reuse
        src_columns = src_table.columns()
        for sci, src_name in enumerate(src_table.header):
            stats = src_stats.per_variable.get(src_name)
            src_var = src_dict.get(src_name)
            if stats is not None and src_var is not None:
                numeric_src = src_var.datatype in ("integer", "decimal")
                reusable[id(src_columns[sci])] = (numeric_src, stats)

    per: dict[str, VariableStats] = {}
    columns = t.columns()
    empty_only = missing_values == DEFAULT_MISSING
    for ci, col in enumerate(t.header):
        cells = columns[ci]
        var = d.get(col) if d is not None else None
        numeric = var.datatype in ("integer", "decimal") if var is not None else True
        prior = reusable.get(id(cells))
        if prior is not None and prior[0] == numeric:
            per[col] = prior[1]
            continue
        values: list[float] = []
        if numeric:
            if empty_only:
                non_missing = [c for c in cells if c]
            else:
                non_missing = [c for c in cells if c not in missing_values]
            missing = len(cells) - len(non_missing)
            try:
                values = list(map(float, non_missing))
            except ValueError:  # unparseable cells: fall back and skip them
                values = []
                for c in non_missing:
                    try:
                        values.append(float(c))
                    except ValueError:
                        continue
        else:
            missing = sum(cells.count(mv) for mv in missing_values)
        if values:
            total = math.fsum(values)
            per[col] = VariableStats(
                missing=missing, min=min(values), max=max(values), mean=total / len(values)
            )
        else:
            per[col] = VariableStats(missing=missing)
    return SummaryStats(n_records=len(t.rows), n_variables=len(t.header), per_variable=per)
