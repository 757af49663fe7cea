"""Keyed, deterministic de-identification of file bundles.

Every transform is a pure function of (value, secret key, scope), so a
re-run over the same input produces byte-identical output. The rules:

  direct identifiers  whole column replaced by "[REDACTED]"
  zip codes           first three digits kept; restricted prefixes -> "000"
  dates               shifted by one keyed offset per scope, in [-180,-1]+[1,180]
  ages                <1 -> 0, 1-20 unchanged, 21-89 +/-2 by keyed parity, >=90 -> 90
  sites               "SITE-" + 6 hex chars of a keyed hash

Issue codes published by this module (warnings attached to the report):
DEID_BAD_ZIP, DEID_BAD_DATE, DEID_BAD_AGE.
Hard failures raise DeidError with code DEID_ALREADY_APPLIED,
DEID_UNKNOWN_COLUMN, or DEID_BAD_CONFIG.
"""

from __future__ import annotations

import hashlib
import hmac
import math
import re
from dataclasses import dataclass, field, replace
from datetime import date, timedelta

from .dictionary import DataDictionary, VariableSpec
from .issues import Issue, warning
from .tabledata import DEFAULT_MISSING, Table

PER_STUDY = "per-study"
PER_PARTICIPANT = "per-participant"

REDACTED = "[REDACTED]"
ZIP_ZERO = "000"
AGE_TOP_CODE = 90

# Conventional sparsely-populated ZIP3 prefixes, shipped as a configurable
# default only; substitute current census-derived prefixes for real use.
DEFAULT_RESTRICTED_ZIP3 = frozenset(
    {"036", "059", "063", "102", "203", "556", "692", "790", "821", "823", "830", "831", "878", "879", "884", "890", "893"}
)

_ZIP5_RE = re.compile(r"\d{5}\Z")


class DeidError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class DeidConfig:
    key: bytes
    study_key: str = "study"
    date_shift_scope: str = PER_STUDY
    id_column: str | None = None
    restricted_zip3: frozenset[str] = DEFAULT_RESTRICTED_ZIP3
    direct_identifier_columns: frozenset[str] = frozenset()
    zip_columns: frozenset[str] = frozenset()
    date_columns: frozenset[str] = frozenset()
    age_columns: frozenset[str] = frozenset()
    site_columns: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(self.key) < 16:
            raise DeidError("DEID_BAD_CONFIG", "key must be at least 16 bytes")
        groups = [
            self.direct_identifier_columns,
            self.zip_columns,
            self.date_columns,
            self.age_columns,
            self.site_columns,
        ]
        total = sum(len(g) for g in groups)
        merged = set().union(*groups)
        if len(merged) != total:
            raise DeidError("DEID_BAD_CONFIG", "column sets must be pairwise disjoint")
        if self.date_shift_scope not in (PER_STUDY, PER_PARTICIPANT):
            raise DeidError("DEID_BAD_CONFIG", f"unknown date_shift_scope {self.date_shift_scope!r}")
        if self.date_shift_scope == PER_PARTICIPANT and not self.id_column:
            raise DeidError("DEID_BAD_CONFIG", "per-participant scope requires id_column")

    @classmethod
    def from_dict(cls, d: dict, key: bytes) -> "DeidConfig":
        return cls(
            key=key,
            study_key=d.get("study_key", "study"),
            date_shift_scope=d.get("date_shift_scope", PER_STUDY),
            id_column=d.get("id_column"),
            restricted_zip3=frozenset(d.get("restricted_zip3", DEFAULT_RESTRICTED_ZIP3)),
            direct_identifier_columns=frozenset(d.get("direct_identifier_columns", [])),
            zip_columns=frozenset(d.get("zip_columns", [])),
            date_columns=frozenset(d.get("date_columns", [])),
            age_columns=frozenset(d.get("age_columns", [])),
            site_columns=frozenset(d.get("site_columns", [])),
        )

    def restrict_to(self, columns: set[str]) -> "DeidConfig":
        """Narrow all column sets to the ones present in a given table."""
        return replace(
            self,
            direct_identifier_columns=self.direct_identifier_columns & columns,
            zip_columns=self.zip_columns & columns,
            date_columns=self.date_columns & columns,
            age_columns=self.age_columns & columns,
            site_columns=self.site_columns & columns,
        )


@dataclass
class DeidReport:
    cells_redacted: int = 0
    zips_generalized: int = 0
    zips_zeroed: int = 0
    dates_shifted: int = 0
    ages_altered: int = 0
    sites_pseudonymized: int = 0
    offsets: dict[str, int] = field(default_factory=dict)
    deid_applied: bool = True
    warnings: list[Issue] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "cells_redacted": self.cells_redacted,
            "zips_generalized": self.zips_generalized,
            "zips_zeroed": self.zips_zeroed,
            "dates_shifted": self.dates_shifted,
            "ages_altered": self.ages_altered,
            "sites_pseudonymized": self.sites_pseudonymized,
            "offsets": dict(sorted(self.offsets.items())),
            "deid_applied": self.deid_applied,
            "warnings": [w.to_dict() for w in self.warnings],
        }


def _keyed_hash(key: bytes, domain: str, value: str) -> bytes:
    return hmac.new(key, f"{domain}:{value}".encode("utf-8"), hashlib.sha256).digest()


def generalize_zip(zip_code: str, restricted: frozenset[str] = DEFAULT_RESTRICTED_ZIP3) -> tuple[str, bool]:
    """Return (generalized value, well_formed flag).

    Five-digit zips keep their first three digits unless that prefix is
    restricted; anything malformed is defensively replaced by "000".
    """
    if not _ZIP5_RE.fullmatch(zip_code):
        return ZIP_ZERO, False
    prefix = zip_code[:3]
    if prefix in restricted:
        return ZIP_ZERO, True
    return prefix, True


def derive_date_shift(scope_key: str, key: bytes) -> int:
    """Deterministic nonzero day offset in [-180, -1] or [1, 180]."""
    digest = _keyed_hash(key, "date-shift", scope_key)
    v = int.from_bytes(digest[:8], "big") % 360  # 0..359
    if v < 180:
        return v + 1  # 1..180
    return -(v - 179)  # -1..-180


def shift_date(d: date, offset_days: int) -> date:
    return d + timedelta(days=offset_days)


def transform_age(age: float, subject_key: str, key: bytes) -> int:
    """Apply the age rules after rounding to whole years.

    Under one year becomes 0; 1-20 passes through; 21-89 moves by exactly
    two years with the sign taken from a keyed hash of the subject, so
    re-runs agree; 90 and over is top-coded to 90.
    """
    if age < 0:
        raise ValueError("age must be non-negative")
    years = int(math.floor(age + 0.5))
    if age < 1:
        return 0
    if years <= 20:
        return years
    if years >= AGE_TOP_CODE:
        return AGE_TOP_CODE
    sign = 2 if _keyed_hash(key, "age-sign", subject_key)[-1] & 1 else -2
    return years + sign


def pseudonymize_site(site: str, key: bytes) -> str:
    digest = _keyed_hash(key, "site", site.strip())
    return "SITE-" + digest.hex()[:6]


def hashed_scope_label(scope_key: str, key: bytes) -> str:
    """Pseudonymous label for per-participant offsets in reports."""
    return _keyed_hash(key, "scope-label", scope_key).hex()[:8]


def _parse_age(value: str) -> float | None:
    try:
        age = float(value)
    except ValueError:
        return None
    if age < 0 or math.isnan(age) or math.isinf(age):
        return None
    return age


def deidentify_table(
    t: Table,
    d: DataDictionary,
    cfg: DeidConfig,
    missing_values: frozenset[str] = DEFAULT_MISSING,
) -> tuple[Table, DataDictionary, DeidReport]:
    """Transform a table and its dictionary under a de-identification config.

    Missing cells stay missing in every transformed column except direct
    identifiers, which are replaced wholesale. Raises DeidError when the
    config names a column the table does not have.
    """
    columns = set(t.header)
    for group_name, group in (
        ("direct_identifier_columns", cfg.direct_identifier_columns),
        ("zip_columns", cfg.zip_columns),
        ("date_columns", cfg.date_columns),
        ("age_columns", cfg.age_columns),
        ("site_columns", cfg.site_columns),
    ):
        unknown = group - columns
        if unknown:
            raise DeidError("DEID_UNKNOWN_COLUMN", f"{group_name} not in table: {sorted(unknown)}")
    if cfg.date_shift_scope == PER_PARTICIPANT and cfg.id_column not in columns:
        raise DeidError("DEID_UNKNOWN_COLUMN", f"id_column {cfg.id_column!r} not in table")

    report = DeidReport()
    src = t.source_name
    n = t.n_rows
    table_columns = t.columns()
    new_columns: dict[int, list[str]] = {}

    subject_keys: list[str] | None = None
    if cfg.id_column and cfg.id_column in columns:
        id_idx = t.column_index(cfg.id_column)
        subject_keys = [f"{cfg.study_key}|{v}" for v in table_columns[id_idx]]

    def subject_key(ri: int) -> str:
        if subject_keys is not None:
            return subject_keys[ri]
        return f"{cfg.study_key}|row{ri}"

    for col in sorted(cfg.direct_identifier_columns):
        ci = t.column_index(col)
        new_columns[ci] = [REDACTED] * n
        report.cells_redacted += n

    for col in sorted(cfg.zip_columns):
        ci = t.column_index(col)
        out: list[str] = []
        for ri, value in enumerate(table_columns[ci]):
            if value in missing_values:
                out.append(value)
                continue
            generalized, well_formed = generalize_zip(value, cfg.restricted_zip3)
            if not well_formed:
                report.warnings.append(
                    warning("DEID_BAD_ZIP", "malformed zip replaced by '000'", file=src, row=ri + 2, column=col)
                )
            if generalized == ZIP_ZERO:
                report.zips_zeroed += 1
            else:
                report.zips_generalized += 1
            out.append(generalized)
        new_columns[ci] = out

    if cfg.date_columns:
        study_offset: int | None = None
        if cfg.date_shift_scope == PER_STUDY:
            study_offset = derive_date_shift(cfg.study_key, cfg.key)
            report.offsets[cfg.study_key] = study_offset
        for col in sorted(cfg.date_columns):
            ci = t.column_index(col)
            out = []
            for ri, value in enumerate(table_columns[ci]):
                if value in missing_values:
                    out.append(value)
                    continue
                try:
                    parsed = date.fromisoformat(value)
                except ValueError:
                    # an unshiftable date would leak the real one; blank it
                    report.warnings.append(
                        warning("DEID_BAD_DATE", "unparseable date cell blanked", file=src, row=ri + 2, column=col)
                    )
                    out.append("")
                    continue
                if study_offset is not None:
                    offset = study_offset
                else:
                    sk = subject_key(ri)
                    offset = derive_date_shift(sk, cfg.key)
                    report.offsets.setdefault(hashed_scope_label(sk, cfg.key), offset)
                out.append(shift_date(parsed, offset).isoformat())
                report.dates_shifted += 1
            new_columns[ci] = out

    for col in sorted(cfg.age_columns):
        ci = t.column_index(col)
        out = []
        for ri, value in enumerate(table_columns[ci]):
            if value in missing_values:
                out.append(value)
                continue
            age = _parse_age(value)
            if age is None:
                report.warnings.append(
                    warning("DEID_BAD_AGE", "non-numeric or negative age blanked", file=src, row=ri + 2, column=col)
                )
                out.append("")
                continue
            transformed = str(transform_age(age, subject_key(ri), cfg.key))
            if transformed != value:
                report.ages_altered += 1
            out.append(transformed)
        new_columns[ci] = out

    for col in sorted(cfg.site_columns):
        ci = t.column_index(col)
        cache = {value: pseudonymize_site(value, cfg.key) for value in t.distinct(ci) if value not in missing_values}
        new_columns[ci] = [cache.get(value, value) for value in table_columns[ci]]
        report.sites_pseudonymized += sum(1 for value in table_columns[ci] if value not in missing_values)

    if new_columns:
        out_columns = list(table_columns)
        for ci, col_values in new_columns.items():
            out_columns[ci] = col_values
        seed = {ci: v for ci, v in t.known_distinct().items() if ci not in new_columns}
        new_table = Table.from_columns(t.header, out_columns, source_name=t.source_name, distinct_seed=seed)
    else:
        new_table = t

    new_dict = _deidentified_dictionary(d, cfg)
    report.warnings = sorted(report.warnings, key=lambda i: (i.row, i.column, i.code))
    return new_table, new_dict, report


def _deidentified_dictionary(d: DataDictionary, cfg: DeidConfig) -> DataDictionary:
    out: list[VariableSpec] = []
    for v in d.variables:
        if v.id in cfg.direct_identifier_columns:
            out.append(replace(v, datatype="string", enumeration=(), pattern=None, min=None, max=None))
        elif v.id in cfg.zip_columns:
            out.append(replace(v, datatype="string", enumeration=(), pattern=r"\d{3}", min=None, max=None))
        elif v.id in cfg.age_columns:
            # 21-89 can move by two in either direction, hence the 91 cap
            out.append(replace(v, datatype="integer", enumeration=(), pattern=None, min=0, max=91))
        elif v.id in cfg.site_columns:
            out.append(replace(v, datatype="string", enumeration=(), pattern=r"SITE-[0-9a-f]{6}", min=None, max=None))
        else:
            out.append(v)
    return DataDictionary(variables=tuple(out), source_name=d.source_name)


def load_key_hex(hex_key: str) -> bytes:
    try:
        key = bytes.fromhex(hex_key.strip())
    except ValueError as exc:
        raise DeidError("DEID_BAD_CONFIG", f"key is not valid hex: {exc}") from None
    if len(key) < 16:
        raise DeidError("DEID_BAD_CONFIG", "key must be at least 16 bytes of hex")
    return key
