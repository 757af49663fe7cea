"""Template-driven metadata validation with an offline ontology-term registry.

Templates are ordered field specifications grouped into sections; instances
are plain field-value maps. Term-kind fields must hold an IRI resolvable in
the loaded registry. Serialization is stable-ordered JSON with a fixed
``@context`` block mapping field names to their IRIs, plus a YAML mirror.

Issue codes published by this module:

  TERM_BAD_JSON, TERM_BAD_RECORD, TERM_BAD_IRI, TERM_DUP_IRI
  TPL_BAD_JSON, TPL_DUP_SECTION, TPL_DUP_FIELD, TPL_BAD_KIND, TPL_BAD_FIELD
  META_MISSING_REQUIRED, META_BAD_KIND, META_BAD_VALUE,
  META_UNRESOLVED_TERM, META_UNKNOWN_FIELD (warning)
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from datetime import date
from urllib.parse import urlparse

import yaml

from .issues import Issue, error, sort_issues, warning
from .tabledata import SummaryStats

FIELD_KINDS = frozenset({"text", "integer", "date", "boolean", "controlled", "term", "list"})

PROGRAMS = ("RADx-UP", "RADx-rad", "RADx-Tech", "RADx-DHT")
ACCESS_TIERS = ("public", "controlled")

NIH_INSTITUTES = ("NLM", "NIAID", "NIDA", "NHLBI", "NIBIB", "NIMHD", "NCATS", "NIA")

STUDY_DOMAINS = (
    "Vaccination Rate/Uptake",
    "Pandemic Perceptions and Decision-Making",
    "Testing Rate/Uptake",
    "Virological Testing",
    "Diagnostic Technology",
    "Wastewater Surveillance",
    "Social Determinants of Health",
    "Mental Health",
    "Long COVID",
    "Community Engagement",
)

POPULATION_FOCUS = (
    "Underserved/Vulnerable Populations",
    "General Population",
    "Children",
    "Older Adults",
    "Racial and Ethnic Minorities",
    "Essential Workers",
    "People with Disabilities",
    "Pregnant Women",
)

DATA_COLLECTION_METHODS = (
    "Interview or Focus Group",
    "Survey",
    "Wearable Device Monitoring",
    "Diagnostic Testing",
    "Electronic Medical Records",
    "Mobile App",
    "Biospecimen Collection",
    "Environmental Sampling",
)

STUDY_DESIGNS = (
    "Longitudinal Cohort",
    "Cross-Sectional",
    "Case-Control",
    "Randomized Controlled Trial",
    "Observational",
    "Device Validation Study",
)

DATA_TYPES = (
    "Behavioral",
    "Clinical",
    "Electronic Medical Records",
    "Genomic",
    "Imaging",
    "Questionnaire",
    "Other",
)

ACCESSION_PATTERN = r"phs\d{6}"
DOI_PATTERN = r"10\.\d{4,9}/\S+"

_DATE_RE = re.compile(r"\d{4}-\d{2}-\d{2}\Z")


@dataclass(frozen=True)
class OntologyTerm:
    iri: str
    label: str
    source: str

    def to_dict(self) -> dict:
        return {"iri": self.iri, "label": self.label, "source": self.source}


class TermRegistry:
    """Immutable-after-load IRI -> term table with O(1) lookup."""

    def __init__(self, terms: dict[str, OntologyTerm]):
        self._terms = terms

    def resolve(self, iri: str) -> OntologyTerm | None:
        return self._terms.get(iri)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.values())


class RemoteTerminologyClient:
    """Interface for a remote terminology service. Only a stub ships; the
    offline registry file is the supported path."""

    def resolve(self, iri: str) -> OntologyTerm | None:
        raise NotImplementedError("remote terminology lookup is not implemented")


def is_absolute_iri(iri: str) -> bool:
    parsed = urlparse(iri)
    return bool(parsed.scheme)


def load_term_registry(raw: bytes, source_name: str = "terms.jsonl") -> tuple[TermRegistry | None, list[Issue]]:
    """Load JSON-lines of ontology term records into a registry."""
    issues: list[Issue] = []
    terms: dict[str, OntologyTerm] = {}
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            issues.append(error("TERM_BAD_JSON", f"line is not valid JSON: {exc}", file=source_name, row=lineno))
            continue
        if not isinstance(rec, dict) or not all(isinstance(rec.get(k), str) and rec.get(k) for k in ("iri", "label", "source")):
            issues.append(error("TERM_BAD_RECORD", "record needs string iri, label, source", file=source_name, row=lineno))
            continue
        iri = rec["iri"]
        if not is_absolute_iri(iri):
            issues.append(error("TERM_BAD_IRI", f"IRI {iri!r} is not absolute", file=source_name, row=lineno))
            continue
        if iri in terms:
            issues.append(error("TERM_DUP_IRI", f"IRI {iri!r} already loaded", file=source_name, row=lineno))
            continue
        terms[iri] = OntologyTerm(iri=iri, label=rec["label"], source=rec["source"])
    if issues:
        return None, sort_issues(issues)
    return TermRegistry(terms), []


@dataclass(frozen=True)
class FieldSpec:
    name: str
    kind: str
    section: str
    required: bool = False
    values: tuple[str, ...] = ()
    sources: tuple[str, ...] = ()
    item_kind: str | None = None
    pattern: str | None = None
    min: float | None = None
    iri: str | None = None

    def field_iri(self) -> str:
        return self.iri or f"https://fairhub.local/vocab/{self.name}"


@dataclass(frozen=True)
class Template:
    name: str
    version: str
    fields: tuple[FieldSpec, ...]
    sections: tuple[str, ...]

    def get(self, name: str) -> FieldSpec | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None


def parse_template(raw: bytes, source_name: str = "template.json") -> tuple[Template | None, list[Issue]]:
    issues: list[Issue] = []
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return None, [error("TPL_BAD_JSON", f"not valid JSON: {exc}", file=source_name)]
    if not isinstance(doc, dict) or not isinstance(doc.get("sections"), list):
        return None, [error("TPL_BAD_JSON", "template must be an object with a sections list", file=source_name)]

    fields: list[FieldSpec] = []
    section_names: list[str] = []
    seen_fields: set[str] = set()
    for section in doc["sections"]:
        if not isinstance(section, dict) or "name" not in section:
            issues.append(error("TPL_BAD_JSON", "section needs a name", file=source_name))
            continue
        sname = section["name"]
        if sname in section_names:
            issues.append(error("TPL_DUP_SECTION", f"section {sname!r} repeats", file=source_name, column=sname))
            continue
        section_names.append(sname)
        for f in section.get("fields", []):
            fname = f.get("name", "")
            kind = f.get("kind", "")
            if not fname:
                issues.append(error("TPL_BAD_FIELD", "field needs a name", file=source_name, column=sname))
                continue
            if fname in seen_fields:
                issues.append(error("TPL_DUP_FIELD", f"field {fname!r} repeats", file=source_name, column=fname))
                continue
            seen_fields.add(fname)
            if kind not in FIELD_KINDS:
                issues.append(error("TPL_BAD_KIND", f"field {fname!r} has unknown kind {kind!r}", file=source_name, column=fname))
                continue
            item_kind = f.get("item_kind")
            values = tuple(f.get("values", []))
            sources = tuple(f.get("sources", []))
            pattern = f.get("pattern")
            if kind == "controlled" and not values:
                issues.append(error("TPL_BAD_FIELD", f"controlled field {fname!r} needs values", file=source_name, column=fname))
                continue
            if kind == "term" and not sources:
                issues.append(error("TPL_BAD_FIELD", f"term field {fname!r} needs sources", file=source_name, column=fname))
                continue
            if kind == "list":
                if item_kind not in FIELD_KINDS or item_kind == "list":
                    issues.append(error("TPL_BAD_FIELD", f"list field {fname!r} needs a scalar item_kind", file=source_name, column=fname))
                    continue
                if item_kind == "controlled" and not values:
                    issues.append(error("TPL_BAD_FIELD", f"controlled list field {fname!r} needs values", file=source_name, column=fname))
                    continue
                if item_kind == "term" and not sources:
                    issues.append(error("TPL_BAD_FIELD", f"term list field {fname!r} needs sources", file=source_name, column=fname))
                    continue
            if pattern is not None:
                try:
                    re.compile(pattern)
                except re.error as exc:
                    issues.append(error("TPL_BAD_FIELD", f"field {fname!r} pattern does not compile: {exc}", file=source_name, column=fname))
                    continue
            fields.append(
                FieldSpec(
                    name=fname,
                    kind=kind,
                    section=sname,
                    required=bool(f.get("required", False)),
                    values=values,
                    sources=sources,
                    item_kind=item_kind,
                    pattern=pattern,
                    min=f.get("min"),
                    iri=f.get("iri"),
                )
            )
    if issues:
        return None, sort_issues(issues)
    return (
        Template(
            name=doc.get("name", "template"),
            version=str(doc.get("version", "1")),
            fields=tuple(fields),
            sections=tuple(section_names),
        ),
        [],
    )


def serialize_template(tpl: Template) -> bytes:
    sections = []
    for sname in tpl.sections:
        fields = []
        for f in tpl.fields:
            if f.section != sname:
                continue
            entry: dict = {"name": f.name, "kind": f.kind}
            if f.required:
                entry["required"] = True
            if f.values:
                entry["values"] = list(f.values)
            if f.sources:
                entry["sources"] = list(f.sources)
            if f.item_kind:
                entry["item_kind"] = f.item_kind
            if f.pattern:
                entry["pattern"] = f.pattern
            if f.min is not None:
                entry["min"] = f.min
            if f.iri:
                entry["iri"] = f.iri
            fields.append(entry)
        sections.append({"name": sname, "fields": fields})
    doc = {"name": tpl.name, "version": tpl.version, "sections": sections}
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _is_empty(value) -> bool:
    return value is None or value == "" or value == []


def _check_scalar(name: str, kind: str, value, spec: FieldSpec, reg: TermRegistry | None, src: str) -> list[Issue]:
    issues: list[Issue] = []
    if kind == "text":
        if not isinstance(value, str):
            issues.append(error("META_BAD_KIND", f"{name} must be text, got {type(value).__name__}", file=src, column=name))
        elif spec.pattern is not None and re.fullmatch(spec.pattern, value) is None:
            issues.append(error("META_BAD_VALUE", f"{name} value {value!r} does not match {spec.pattern!r}", file=src, column=name))
    elif kind == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            issues.append(error("META_BAD_KIND", f"{name} must be an integer", file=src, column=name))
        elif spec.min is not None and value < spec.min:
            issues.append(error("META_BAD_VALUE", f"{name} must be >= {spec.min:g}", file=src, column=name))
    elif kind == "date":
        ok = isinstance(value, str) and _DATE_RE.fullmatch(value) is not None
        if ok:
            try:
                date.fromisoformat(value)
            except ValueError:
                ok = False
        if not ok:
            issues.append(error("META_BAD_KIND", f"{name} must be a YYYY-MM-DD date", file=src, column=name))
    elif kind == "boolean":
        if not isinstance(value, bool):
            issues.append(error("META_BAD_KIND", f"{name} must be a boolean", file=src, column=name))
    elif kind == "controlled":
        if not isinstance(value, str):
            issues.append(error("META_BAD_KIND", f"{name} must be text", file=src, column=name))
        elif value not in spec.values:
            issues.append(error("META_BAD_VALUE", f"{name} value {value!r} not in {list(spec.values)}", file=src, column=name))
    elif kind == "term":
        if not isinstance(value, str):
            issues.append(error("META_BAD_KIND", f"{name} must be a term IRI", file=src, column=name))
        elif reg is None or reg.resolve(value) is None:
            issues.append(error("META_UNRESOLVED_TERM", f"{name} IRI {value!r} not in the term registry", file=src, column=name))
    return issues


def validate_metadata(
    instance: dict,
    tpl: Template,
    reg: TermRegistry | None = None,
    source_name: str = "metadata",
) -> list[Issue]:
    """Check an instance against a template: required-field presence, kind
    conformance, controlled-value membership, and term resolution."""
    issues: list[Issue] = []
    known = {f.name for f in tpl.fields}
    for name in instance:
        if name not in known:
            issues.append(warning("META_UNKNOWN_FIELD", f"field {name!r} not in template {tpl.name!r}", file=source_name, column=name))
    for spec in tpl.fields:
        value = instance.get(spec.name)
        if _is_empty(value):
            if spec.required:
                issues.append(error("META_MISSING_REQUIRED", f"required field {spec.name!r} is missing", file=source_name, column=spec.name))
            continue
        if spec.kind == "list":
            if not isinstance(value, list):
                issues.append(error("META_BAD_KIND", f"{spec.name} must be a list", file=source_name, column=spec.name))
                continue
            for item in value:
                issues.extend(_check_scalar(spec.name, spec.item_kind or "text", item, spec, reg, source_name))
        else:
            issues.extend(_check_scalar(spec.name, spec.kind, value, spec, reg, source_name))
    return sort_issues(issues)


def serialize_metadata(instance: dict, tpl: Template | None = None) -> bytes:
    """Stable-ordered JSON rendering with a fixed @context block."""
    doc = dict(instance)
    context: dict[str, str] = {}
    if tpl is not None:
        for f in tpl.fields:
            if f.name in doc:
                context[f.name] = f.field_iri()
    doc["@context"] = context
    return (json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def serialize_metadata_yaml(instance: dict, tpl: Template | None = None) -> bytes:
    doc = json.loads(serialize_metadata(instance, tpl).decode("utf-8"))
    return yaml.safe_dump(doc, sort_keys=True, allow_unicode=True).encode("utf-8")


def parse_metadata(raw: bytes) -> dict:
    doc = json.loads(raw.decode("utf-8"))
    doc.pop("@context", None)
    return doc


@dataclass(frozen=True)
class StudyMetadata:
    accession: str
    title: str
    principal_investigator: str
    program: str
    nih_institute: str
    study_design: str
    estimated_cohort_size: int
    multi_center: bool = False
    doi: str | None = None
    release_date: str | None = None
    study_domains: tuple[str, ...] = ()
    population_focus: tuple[str, ...] = ()
    data_collection_methods: tuple[str, ...] = ()
    keywords: tuple[str, ...] = ()
    sites: tuple[str, ...] = ()
    data_types: tuple[str, ...] = ()
    access_tier: str = "public"

    def to_instance(self) -> dict:
        inst: dict = {
            "accession": self.accession,
            "title": self.title,
            "principal_investigator": self.principal_investigator,
            "program": self.program,
            "nih_institute": self.nih_institute,
            "study_design": self.study_design,
            "estimated_cohort_size": self.estimated_cohort_size,
            "multi_center": self.multi_center,
            "study_domains": list(self.study_domains),
            "population_focus": list(self.population_focus),
            "data_collection_methods": list(self.data_collection_methods),
            "keywords": list(self.keywords),
            "sites": list(self.sites),
            "data_types": list(self.data_types),
            "access_tier": self.access_tier,
        }
        if self.doi is not None:
            inst["doi"] = self.doi
        if self.release_date is not None:
            inst["release_date"] = self.release_date
        return inst

    @classmethod
    def from_instance(cls, inst: dict) -> "StudyMetadata":
        return cls(
            accession=inst["accession"],
            title=inst.get("title", ""),
            principal_investigator=inst.get("principal_investigator", ""),
            program=inst.get("program", ""),
            nih_institute=inst.get("nih_institute", ""),
            study_design=inst.get("study_design", ""),
            estimated_cohort_size=int(inst.get("estimated_cohort_size", 0)),
            multi_center=bool(inst.get("multi_center", False)),
            doi=inst.get("doi"),
            release_date=inst.get("release_date"),
            study_domains=tuple(inst.get("study_domains", [])),
            population_focus=tuple(inst.get("population_focus", [])),
            data_collection_methods=tuple(inst.get("data_collection_methods", [])),
            keywords=tuple(inst.get("keywords", [])),
            sites=tuple(inst.get("sites", [])),
            data_types=tuple(inst.get("data_types", [])),
            access_tier=inst.get("access_tier", "public"),
        )


@dataclass(frozen=True)
class Creator:
    type: str  # "person" | "organization"
    name: str

    def to_dict(self) -> dict:
        return {"type": self.type, "name": self.name}


@dataclass(frozen=True)
class FileMetadata:
    file_name: str
    version: int = 1
    creators: tuple[Creator, ...] = ()
    subjects: tuple[str, ...] = ()  # term IRIs
    summary: SummaryStats | None = None
    deid_applied: bool = False
    harmonized: bool = False

    def to_dict(self) -> dict:
        return {
            "file_name": self.file_name,
            "version": self.version,
            "creators": [c.to_dict() for c in self.creators],
            "subjects": list(self.subjects),
            "summary": self.summary.to_dict() if self.summary else None,
            "deid_applied": self.deid_applied,
            "harmonized": self.harmonized,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FileMetadata":
        return cls(
            file_name=d["file_name"],
            version=int(d.get("version", 1)),
            creators=tuple(Creator(c["type"], c["name"]) for c in d.get("creators", [])),
            subjects=tuple(d.get("subjects", [])),
            summary=SummaryStats.from_dict(d["summary"]) if d.get("summary") else None,
            deid_applied=bool(d.get("deid_applied", False)),
            harmonized=bool(d.get("harmonized", False)),
        )
