"""Searchable study catalog: free text, facets, autocomplete, histograms.

The index is immutable once built and answers exactly what a full scan over
the records would answer (tested against one). Text terms are AND-combined
and match indexed tokens by prefix; filters OR within a field and AND across
fields; results sort deterministically with the accession as tiebreak.

Facet fields: program, nih_institute, study_domains, population_focus,
data_collection_methods, study_design, cohort_size (bucketed), variable,
has_data_files. Error code: QRY_BAD_FIELD / IDX_DUP_ACCESSION (raised).
"""

from __future__ import annotations

import csv
import io
import re
from bisect import bisect_left
from dataclasses import dataclass

from .metadata import StudyMetadata

_TOKEN_RE = re.compile(r"[a-z0-9]+")

COHORT_BUCKETS = (
    (0, 100, "1-100"),
    (101, 1_000, "101-1000"),
    (1_001, 10_000, "1001-10000"),
    (10_001, None, "10001+"),
)

FACET_FIELDS = (
    "program",
    "nih_institute",
    "study_domains",
    "population_focus",
    "data_collection_methods",
    "study_design",
    "cohort_size",
    "has_data_files",
    "variable",
)

# safe to stack by: at most one value per study
SINGLE_VALUED_FIELDS = frozenset({"program", "nih_institute", "study_design", "cohort_size", "has_data_files"})

SORT_FIELDS = ("title", "accession", "estimated_cohort_size", "release_date")


class CatalogError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def cohort_bucket(size: int) -> str:
    for lo, hi, label in COHORT_BUCKETS:
        if size >= lo and (hi is None or size <= hi):
            return label
    return COHORT_BUCKETS[0][2]


@dataclass(frozen=True)
class StudyRecord:
    study: StudyMetadata
    variable_names: frozenset[str] = frozenset()
    n_data_files: int = 0

    @property
    def accession(self) -> str:
        return self.study.accession

    def tokens(self) -> frozenset[str]:
        parts = [self.study.title, self.study.principal_investigator]
        parts.extend(self.study.keywords)
        parts.extend(self.study.study_domains)
        out: set[str] = set()
        for p in parts:
            out.update(tokenize(p))
        return frozenset(out)

    def facet_values(self, fieldname: str) -> tuple[str, ...]:
        s = self.study
        if fieldname == "program":
            return (s.program,) if s.program else ()
        if fieldname == "nih_institute":
            return (s.nih_institute,) if s.nih_institute else ()
        if fieldname == "study_domains":
            return s.study_domains
        if fieldname == "population_focus":
            return s.population_focus
        if fieldname == "data_collection_methods":
            return s.data_collection_methods
        if fieldname == "study_design":
            return (s.study_design,) if s.study_design else ()
        if fieldname == "cohort_size":
            return (cohort_bucket(s.estimated_cohort_size),)
        if fieldname == "has_data_files":
            return ("true" if self.n_data_files > 0 else "false",)
        if fieldname == "variable":
            return tuple(sorted(self.variable_names))
        raise CatalogError("QRY_BAD_FIELD", f"unknown facet field {fieldname!r}")

    def to_dict(self) -> dict:
        return {
            "study": self.study.to_instance(),
            "variable_names": sorted(self.variable_names),
            "n_data_files": self.n_data_files,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StudyRecord":
        return cls(
            study=StudyMetadata.from_instance(d["study"]),
            variable_names=frozenset(d.get("variable_names", [])),
            n_data_files=int(d.get("n_data_files", 0)),
        )


@dataclass(frozen=True)
class Query:
    text: str | None = None
    filters: tuple[tuple[str, str], ...] = ()
    sort_field: str = "title"
    sort_dir: str = "asc"
    offset: int = 0
    limit: int = 50

    def __post_init__(self):
        if not (1 <= self.limit <= 500):
            raise ValueError(f"limit must be in [1, 500], got {self.limit}")
        if self.offset < 0:
            raise ValueError("offset must be non-negative")
        if self.sort_dir not in ("asc", "desc"):
            raise ValueError(f"sort_dir must be asc or desc, got {self.sort_dir!r}")


class Index:
    """Inverted token index plus facet tables over a fixed record set."""

    def __init__(self, records: list[StudyRecord]):
        by_accession: dict[str, StudyRecord] = {}
        for r in records:
            if r.accession in by_accession:
                raise CatalogError("IDX_DUP_ACCESSION", f"accession {r.accession!r} appears twice")
            by_accession[r.accession] = r
        self.records = dict(sorted(by_accession.items()))

        postings: dict[str, set[str]] = {}
        for acc, r in self.records.items():
            for tok in r.tokens():
                postings.setdefault(tok, set()).add(acc)
        self._postings: dict[str, tuple[str, ...]] = {t: tuple(sorted(s)) for t, s in postings.items()}
        self._tokens: list[str] = sorted(self._postings)

        self._facets: dict[str, dict[str, frozenset[str]]] = {}
        for f in FACET_FIELDS:
            table: dict[str, set[str]] = {}
            for acc, r in self.records.items():
                for value in r.facet_values(f):
                    table.setdefault(value, set()).add(acc)
            self._facets[f] = {v: frozenset(s) for v, s in table.items()}

    def facet_table(self, fieldname: str) -> dict[str, frozenset[str]]:
        if fieldname not in self._facets:
            raise CatalogError("QRY_BAD_FIELD", f"unknown facet field {fieldname!r}")
        return self._facets[fieldname]

    def tokens_with_prefix(self, prefix: str) -> list[str]:
        prefix = prefix.lower()
        i = bisect_left(self._tokens, prefix)
        out = []
        while i < len(self._tokens) and self._tokens[i].startswith(prefix):
            out.append(self._tokens[i])
            i += 1
        return out

    def accessions_matching_term(self, term: str) -> set[str]:
        out: set[str] = set()
        for tok in self.tokens_with_prefix(term):
            out.update(self._postings[tok])
        return out


def build_index(records: list[StudyRecord]) -> Index:
    return Index(records)


def _sort_key(r: StudyRecord, sort_field: str):
    s = r.study
    if sort_field == "title":
        return s.title
    if sort_field == "accession":
        return s.accession
    if sort_field == "estimated_cohort_size":
        return s.estimated_cohort_size
    if sort_field == "release_date":
        return s.release_date or ""
    raise CatalogError("QRY_BAD_FIELD", f"unknown sort field {sort_field!r}")


def search(idx: Index, q: Query) -> tuple[int, list[StudyRecord]]:
    """Run a query. Returns (total matching, requested page)."""
    if q.sort_field not in SORT_FIELDS:
        raise CatalogError("QRY_BAD_FIELD", f"unknown sort field {q.sort_field!r}")

    candidates = set(idx.records)
    if q.text:
        for term in tokenize(q.text):
            candidates &= idx.accessions_matching_term(term)
            if not candidates:
                break

    by_field: dict[str, set[str]] = {}
    for fieldname, value in q.filters:
        if fieldname not in FACET_FIELDS:
            raise CatalogError("QRY_BAD_FIELD", f"unknown filter field {fieldname!r}")
        by_field.setdefault(fieldname, set()).add(value)
    for fieldname, values in by_field.items():
        table = idx.facet_table(fieldname)
        allowed: set[str] = set()
        for v in values:
            allowed |= table.get(v, frozenset())
        candidates &= allowed

    matched = [idx.records[a] for a in candidates]
    matched.sort(key=lambda r: r.accession)
    matched.sort(key=lambda r: _sort_key(r, q.sort_field), reverse=(q.sort_dir == "desc"))
    total = len(matched)
    return total, matched[q.offset : q.offset + q.limit]


def autocomplete(idx: Index, prefix: str, k: int) -> list[str]:
    if k < 1:
        raise ValueError("k must be >= 1")
    return idx.tokens_with_prefix(prefix)[:k]


def facet_histogram(
    idx: Index, fieldname: str, stack_by: str | None = None
) -> list[tuple[str, dict[str, int]]]:
    """Per-value study counts, optionally split by a single-valued field.

    Multi-valued facet fields count a study once per value; within one value
    the stack counts always sum to the plain count.
    """
    table = idx.facet_table(fieldname)
    if stack_by is not None:
        if stack_by not in FACET_FIELDS:
            raise CatalogError("QRY_BAD_FIELD", f"unknown facet field {stack_by!r}")
        if stack_by not in SINGLE_VALUED_FIELDS:
            raise CatalogError("QRY_BAD_FIELD", f"stack_by field {stack_by!r} is not single-valued")
        stack_table = idx.facet_table(stack_by)
        out = []
        for value in sorted(table):
            accs = table[value]
            stacks = {sv: len(accs & s_accs) for sv, s_accs in sorted(stack_table.items()) if accs & s_accs}
            out.append((value, stacks))
        return out
    return [(value, {"count": len(table[value])}) for value in sorted(table)]


def facet_histogram_csv(idx: Index, fieldname: str, stack_by: str | None = None) -> str:
    """CSV rendering suitable for plotting stacked bars."""
    hist = facet_histogram(idx, fieldname, stack_by)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if stack_by is None:
        w.writerow([fieldname, "count"])
        for value, counts in hist:
            w.writerow([value, counts["count"]])
    else:
        stack_values = sorted({sv for _, stacks in hist for sv in stacks})
        w.writerow([fieldname, *stack_values, "total"])
        for value, stacks in hist:
            row = [value] + [stacks.get(sv, 0) for sv in stack_values]
            w.writerow(row + [sum(stacks.values())])
    return buf.getvalue()
