"""Deterministic synthetic corpora with ground-truth defect ledgers.

Identical specs produce byte-identical directory trees: every value comes
from one seeded RNG walked in a fixed order, configs reference resources by
relative path, and nothing timestamps. The generator records the exact
coordinates and expected issue code (or detector id) of every defect it
injects, which is what the validator- and scanner-recall suites replay.

Corpus layout:

    <out>/resources/{codebook,synth_mapping,study_template,file_template}.json, terms.jsonl
    <out>/deid_config.json
    <out>/pipeline_config.json
    <out>/ground_truth.json
    <out>/studies/<accession>/{study.json, docs/, bundles/...}
    <out>/store/                      (created by pipeline runs)
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path


def _csv_writer(f):
    return csv.writer(f, lineterminator="\n")

from .. import read_data
from ..catalog import StudyRecord
from ..deid import DEFAULT_RESTRICTED_ZIP3
from ..dictionary import DataDictionary, EnumerationEntry, VariableSpec, serialize_dictionary
from ..metadata import (
    DATA_COLLECTION_METHODS,
    DATA_TYPES,
    NIH_INSTITUTES,
    POPULATION_FOCUS,
    PROGRAMS,
    STUDY_DESIGNS,
    STUDY_DOMAINS,
    Creator,
    FileMetadata,
    StudyMetadata,
    parse_template,
    serialize_metadata,
)

COVID_SUBJECT_IRI = "http://purl.bioontology.org/ontology/MESH/D000086382"

PII_CLASSES = ("ssn", "email", "phone", "zip_plus4", "street_address")
VALIDATOR_CLASSES = ("type_error", "enum_violation", "bounds_violation", "required_missing", "pattern_violation")
METADATA_CLASSES = ("metadata_violation",)
ALL_CLASSES = PII_CLASSES + VALIDATOR_CLASSES + METADATA_CLASSES

VALIDATOR_CODES = {
    "type_error": "DATA_TYPE_MISMATCH",
    "enum_violation": "DATA_ENUM_VIOLATION",
    "bounds_violation": "DATA_OUT_OF_BOUNDS",
    "required_missing": "DATA_REQUIRED_MISSING",
    "pattern_violation": "DATA_PATTERN_MISMATCH",
}

_FIRST_NAMES = (
    "dana", "jordan", "casey", "riley", "alex", "morgan", "quinn", "avery",
    "rowan", "sage", "harper", "emerson", "finley", "reese", "tatum", "ellis",
)
_LAST_NAMES = (
    "Rivera", "Chen", "Okafor", "Schmidt", "Haddad", "Novak", "Ibarra", "Fontaine",
    "Kowalski", "Mbeki", "Larsen", "Moreau", "Tanaka", "Osei", "Varga", "Lindqvist",
)
_TITLE_LEAD = (
    "Community", "Mobile", "Rapid", "Longitudinal", "Household", "School-Based",
    "Workplace", "Regional", "Statewide", "Neighborhood",
)
_TITLE_TOPIC = (
    "COVID-19 Testing Uptake", "Antigen Test Validation", "Vaccination Attitudes",
    "Wastewater Surveillance", "Symptom Tracking", "Diagnostic Access",
    "Exposure Notification", "Serology Screening",
)
_TITLE_TAIL = (
    "Among Rural Families", "in Urban Clinics", "for Essential Workers",
    "Across Tribal Communities", "in Older Adults", "for School Children",
    "in Shelter Populations", "Across County Networks",
)
_SITES = (
    "Clinic A", "Clinic B", "Northside Center", "Harbor Lab", "Valley Campus",
    "Eastend Unit", "Mobile Van 1", "Riverside Annex",
)
_NOTE_WORDS = (
    "follow", "visit", "sample", "review", "pending", "complete", "repeat",
    "routine", "callback", "schedule", "normal", "stable", "returned", "queued",
)
_KEYWORDS = (
    "testing", "disparities", "surveillance", "outreach", "vaccination",
    "diagnostics", "community", "equity", "wearables", "screening",
)
_STREET_SUFFIX = ("St", "Ave", "Road", "Blvd", "Drive", "Lane")
_STREET_NAMES = ("Evergreen", "Maple", "Cedar", "Juniper", "Willow", "Alder")

_EDU_ENUM = (
    EnumerationEntry("1", "Never attended school"),
    EnumerationEntry("2", "8th grade or less"),
    EnumerationEntry("3", "9th to 12th grade, no diploma"),
    EnumerationEntry("4", "High school graduate or GED completed"),
    EnumerationEntry("5", "Some college, no degree"),
    EnumerationEntry("6", "Associate degree"),
    EnumerationEntry("7", "Bachelor's degree"),
    EnumerationEntry("8", "Graduate or professional degree"),
)
_SEX_ENUM = (
    EnumerationEntry("1", "Male"),
    EnumerationEntry("2", "Female"),
    EnumerationEntry("99", "Prefer not to answer"),
)
_YESNO_ENUM = (EnumerationEntry("0", "No"), EnumerationEntry("1", "Yes"))
_HEALTH_ENUM = tuple(
    EnumerationEntry(str(i), label)
    for i, label in enumerate(("Excellent", "Very good", "Good", "Fair", "Poor"), start=1)
)


@dataclass(frozen=True)
class SynthSpec:
    seed: int
    n_studies: int = 3
    rows_per_bundle: int = 40
    bundles_per_study: int = 1
    n_extra_variables: int = 2
    missing_rate: float = 0.05
    controlled_fraction: float = 0.2
    inject: dict = field(default_factory=dict)

    def __post_init__(self):
        for cls in self.inject:
            if cls not in ALL_CLASSES:
                raise ValueError(f"unknown injection class {cls!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        return cls(
            seed=int(d["seed"]),
            n_studies=int(d.get("n_studies", 3)),
            rows_per_bundle=int(d.get("rows_per_bundle", 40)),
            bundles_per_study=int(d.get("bundles_per_study", 1)),
            n_extra_variables=int(d.get("n_extra_variables", 2)),
            missing_rate=float(d.get("missing_rate", 0.05)),
            controlled_fraction=float(d.get("controlled_fraction", 0.2)),
            inject=dict(d.get("inject", {})),
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "n_studies": self.n_studies,
            "rows_per_bundle": self.rows_per_bundle,
            "bundles_per_study": self.bundles_per_study,
            "n_extra_variables": self.n_extra_variables,
            "missing_rate": self.missing_rate,
            "controlled_fraction": self.controlled_fraction,
            "inject": dict(sorted(self.inject.items())),
        }


def synth_dictionary(n_extra_variables: int) -> DataDictionary:
    """The fixed bundle shape every synthetic study shares."""
    variables = [
        VariableSpec("participant_id", "Participant identifier", "string", required=True, pattern=r"P\d{5}"),
        VariableSpec("visit_date", "Visit date", "date"),
        VariableSpec("zip_code", "Residential ZIP code", "string", pattern=r"\d{5}"),
        VariableSpec("age_years", "Age at enrollment", "integer", units="years", min=0, max=105),
        VariableSpec("site", "Collection site", "string"),
        VariableSpec("emergency_contact", "Emergency contact person", "string"),
        VariableSpec("edu_years_of_school", "Years of school completed", "enum", enumeration=_EDU_ENUM),
        VariableSpec("sex_at_birth", "Sex assigned at birth", "enum", enumeration=_SEX_ENUM),
        VariableSpec("symptom_fever", "Fever in the past 14 days", "enum", enumeration=_YESNO_ENUM),
        VariableSpec("health_rating", "Self-reported general health", "enum", enumeration=_HEALTH_ENUM),
        VariableSpec("custom_score", "Study-specific composite score", "decimal", units="points", min=0, max=100),
        VariableSpec("internal_notes", "Coordinator notes", "string"),
    ]
    for k in range(n_extra_variables):
        name = f"var_extra_{k + 1:02d}"
        kind = k % 3
        if kind == 0:
            variables.append(VariableSpec(name, f"Extra integer measure {k + 1}", "integer", min=0, max=1000))
        elif kind == 1:
            variables.append(VariableSpec(name, f"Extra decimal measure {k + 1}", "decimal", min=0, max=1))
        else:
            variables.append(VariableSpec(name, f"Extra free-text field {k + 1}", "string"))
    return DataDictionary(variables=tuple(variables), source_name="dict.csv")


def _pool_with_missing(rng: random.Random, pool: list[str], missing_rate: float) -> list[str]:
    if missing_rate <= 0:
        return pool
    n_missing = max(1, int(len(pool) * missing_rate / max(1e-9, 1 - missing_rate)))
    return pool + [""] * n_missing


def _generate_columns(rng: random.Random, d: DataDictionary, rows: int, missing_rate: float, study_sites: list[str]) -> dict[str, list[str]]:
    cols: dict[str, list[str]] = {}
    base_date = date(2020, 3, 1) + timedelta(days=rng.randint(0, 700))
    for v in d.variables:
        if v.id == "participant_id":
            cols[v.id] = [f"P{ri:05d}" for ri in range(rows)]
            continue
        if v.id == "visit_date":
            pool = [(base_date + timedelta(days=rng.randint(0, 180))).isoformat() for _ in range(40)]
        elif v.id == "zip_code":
            pool = [f"{rng.randint(10000, 99999):05d}" for _ in range(25)]
            pool += [p + f"{rng.randint(1, 99):02d}" for p in sorted(DEFAULT_RESTRICTED_ZIP3)[:5]]
        elif v.id == "age_years":
            pool = [str(rng.randint(0, 105)) for _ in range(60)]
        elif v.id == "site":
            pool = list(study_sites)
        elif v.id == "emergency_contact":
            pool = [f"{rng.choice(_FIRST_NAMES).title()} {rng.choice(_LAST_NAMES)}" for _ in range(30)]
        elif v.id == "internal_notes":
            pool = [f"{rng.choice(_NOTE_WORDS)} {rng.choice(_NOTE_WORDS)}" for _ in range(30)]
        elif v.datatype == "enum":
            pool = [e.code for e in v.enumeration]
        elif v.datatype == "integer":
            lo, hi = int(v.min or 0), int(v.max or 1000)
            pool = [str(rng.randint(lo, hi)) for _ in range(50)]
        elif v.datatype == "decimal":
            lo, hi = float(v.min or 0), float(v.max or 1)
            pool = [f"{rng.uniform(lo, hi):.3f}" for _ in range(50)]
        else:
            pool = [f"{rng.choice(_NOTE_WORDS)} {rng.choice(_NOTE_WORDS)}" for _ in range(30)]
        if not v.required:
            pool = _pool_with_missing(rng, pool, missing_rate)
        cols[v.id] = rng.choices(pool, k=rows)
    return cols


def _study_metadata(rng: random.Random, i: int, spec: SynthSpec) -> StudyMetadata:
    pi = f"{rng.choice(_LAST_NAMES)}, {rng.choice(_FIRST_NAMES).title()} {rng.choice('ABCDEFGHJKLMNPQR')}"
    sites = sorted(rng.sample(_SITES, k=rng.randint(1, 3)))
    release = date(2022, 6, 1) + timedelta(days=rng.randint(0, 600))
    return StudyMetadata(
        accession=f"phs9{i:05d}",
        title=f"{rng.choice(_TITLE_LEAD)} {rng.choice(_TITLE_TOPIC)} {rng.choice(_TITLE_TAIL)}",
        principal_investigator=pi,
        program=rng.choice(PROGRAMS),
        nih_institute=rng.choice(NIH_INSTITUTES),
        study_design=rng.choice(STUDY_DESIGNS),
        estimated_cohort_size=rng.randint(30, 50000),
        multi_center=len(sites) > 1,
        doi=f"10.60773/synth-{i:05d}",
        release_date=release.isoformat(),
        study_domains=tuple(sorted(rng.sample(STUDY_DOMAINS, k=rng.randint(1, 3)))),
        population_focus=tuple(sorted(rng.sample(POPULATION_FOCUS, k=rng.randint(1, 2)))),
        data_collection_methods=tuple(sorted(rng.sample(DATA_COLLECTION_METHODS, k=rng.randint(1, 2)))),
        keywords=tuple(sorted(rng.sample(_KEYWORDS, k=rng.randint(1, 3)))),
        sites=tuple(sites),
        data_types=tuple(sorted(rng.sample(DATA_TYPES, k=rng.randint(1, 3)))),
        access_tier="controlled" if rng.random() < spec.controlled_fraction else "public",
    )


def _pii_value(rng: random.Random, cls: str) -> str:
    if cls == "ssn":
        return f"{rng.randint(100, 899):03d}-{rng.randint(10, 99):02d}-{rng.randint(1000, 9999):04d}"
    if cls == "email":
        return f"{rng.choice(_FIRST_NAMES)}.{rng.choice(_LAST_NAMES).lower()}@example.org"
    if cls == "phone":
        return f"{rng.randint(200, 989):03d}-555-{rng.randint(1000, 9999):04d}"
    if cls == "zip_plus4":
        return f"{rng.randint(10000, 99999):05d}-{rng.randint(1000, 9999):04d}"
    if cls == "street_address":
        return f"{rng.randint(10, 9999)} {rng.choice(_STREET_NAMES)} {rng.choice(_STREET_SUFFIX)}"
    raise ValueError(cls)


_VALIDATOR_TARGETS = {
    "type_error": ("age_years", "abc"),
    "enum_violation": ("edu_years_of_school", "77"),
    "bounds_violation": ("custom_score", "250.5"),
    "required_missing": ("participant_id", ""),
    "pattern_violation": ("participant_id", "XQ9"),
}

_METADATA_ROTATION = (
    ("program", "RADx-XYZ", "META_BAD_VALUE"),
    ("estimated_cohort_size", -5, "META_BAD_VALUE"),
    ("title", "", "META_MISSING_REQUIRED"),
    ("release_date", "03/10/2021", "META_BAD_KIND"),
)


def generate_corpus(spec: SynthSpec, out: str | Path) -> dict:
    """Write a corpus and return the ground-truth ledger (also saved)."""
    out = Path(out)
    rng = random.Random(spec.seed)
    dictionary = synth_dictionary(spec.n_extra_variables)
    dict_bytes = serialize_dictionary(dictionary)

    study_template, tpl_issues = parse_template(read_data("study_template.json"))
    assert study_template is not None, tpl_issues

    # generate clean studies first
    studies: list[StudyMetadata] = []
    study_columns: list[list[dict[str, list[str]]]] = []  # [study][bundle] -> column map
    for i in range(spec.n_studies):
        meta = _study_metadata(rng, i, spec)
        studies.append(meta)
        bundles = []
        for _b in range(spec.bundles_per_study):
            bundles.append(_generate_columns(rng, dictionary, spec.rows_per_bundle, spec.missing_rate, list(meta.sites)))
        study_columns.append(bundles)
    instances = [m.to_instance() for m in studies]

    # inject defects at distinct cells, recording ground truth
    defects: list[dict] = []
    used_cells: set[tuple[int, int, int, str]] = set()
    meta_rotation = 0
    for cls in ALL_CLASSES:
        count = int(spec.inject.get(cls, 0))
        for _k in range(count):
            si = rng.randrange(spec.n_studies)
            if cls == "metadata_violation":
                fieldname, value, code = _METADATA_ROTATION[meta_rotation % len(_METADATA_ROTATION)]
                meta_rotation += 1
                if value == "" or value is None:
                    instances[si].pop(fieldname, None)
                else:
                    instances[si][fieldname] = value
                defects.append(
                    {
                        "class": cls,
                        "study": studies[si].accession,
                        "field": fieldname,
                        "code": code,
                    }
                )
                continue
            bi = rng.randrange(spec.bundles_per_study)
            if cls in PII_CLASSES:
                column, value = "internal_notes", _pii_value(rng, cls)
                code = cls  # detector id
            else:
                column, value = _VALIDATOR_TARGETS[cls]
                code = VALIDATOR_CODES[cls]
            for _attempt in range(10000):
                ri = rng.randrange(spec.rows_per_bundle)
                key = (si, bi, ri, column)
                if key not in used_cells:
                    used_cells.add(key)
                    break
            else:
                raise ValueError(f"cannot place injection {cls}: bundle too small")
            study_columns[si][bi][column][ri] = value
            defects.append(
                {
                    "class": cls,
                    "study": studies[si].accession,
                    "file": f"{studies[si].accession}_data{bi + 1}.csv",
                    "row": ri + 2,
                    "column": column,
                    "code": code,
                }
            )

    # write everything
    resources = out / "resources"
    resources.mkdir(parents=True, exist_ok=True)
    for name in ("codebook.json", "synth_mapping.json", "study_template.json", "file_template.json", "terms.jsonl"):
        (resources / name).write_bytes(read_data(name))

    deid_config = {
        "study_key": "synth",
        "date_shift_scope": "per-study",
        "id_column": "participant_id",
        "restricted_zip3": sorted(DEFAULT_RESTRICTED_ZIP3),
        "direct_identifier_columns": ["emergency_contact"],
        "zip_columns": ["zip_code"],
        "date_columns": ["visit_date"],
        "age_columns": ["age_years"],
        "site_columns": ["site"],
    }
    (out / "deid_config.json").write_text(json.dumps(deid_config, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    pipeline_config = {
        "stages": {s: True for s in ("scan", "deid", "validate", "metadata", "harmonize", "store", "index")},
        "strict_harmonization": True,
        "deid_mode": "transform",
        "deid_config": "deid_config.json",
        "codebook": "resources/codebook.json",
        "mapping": "resources/synth_mapping.json",
        "study_template": "resources/study_template.json",
        "file_template": "resources/file_template.json",
        "terms": "resources/terms.jsonl",
        "store_root": "store",
        "missing_values": [""],
    }
    (out / "pipeline_config.json").write_text(json.dumps(pipeline_config, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    header = [v.id for v in dictionary.variables]
    for si, meta in enumerate(studies):
        sdir = out / "studies" / meta.accession
        (sdir / "docs").mkdir(parents=True, exist_ok=True)
        (sdir / "study.json").write_bytes(serialize_metadata(instances[si], study_template))
        (sdir / "docs" / "README.txt").write_text(
            f"Synthetic study {meta.accession}.\nGenerated corpus for curation testing; contains no real data.\n",
            encoding="utf-8",
        )
        for bi in range(spec.bundles_per_study):
            file_name = f"{meta.accession}_data{bi + 1}.csv"
            bdir = sdir / "bundles" / f"{meta.accession}_data{bi + 1}"
            bdir.mkdir(parents=True, exist_ok=True)
            cols = study_columns[si][bi]
            col_lists = [cols[h] for h in header]
            with (bdir / "data.csv").open("w", encoding="utf-8", newline="") as f:
                w = _csv_writer(f)
                w.writerow(header)
                w.writerows(zip(*col_lists))
            (bdir / "dict.csv").write_bytes(dict_bytes)
            fmeta = FileMetadata(
                file_name=file_name,
                version=1,
                creators=(Creator("person", meta.principal_investigator),),
                subjects=(COVID_SUBJECT_IRI,),
                summary=None,
                deid_applied=False,
                harmonized=False,
            )
            (bdir / "meta.json").write_text(
                json.dumps(fmeta.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
            )

    ledger = {"spec": spec.to_dict(), "defects": sorted(defects, key=lambda d: (d["study"], d.get("file", ""), d.get("row", 0), d.get("column", d.get("field", "")), d["class"]))}
    (out / "ground_truth.json").write_text(json.dumps(ledger, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return ledger


def generate_study_records(seed: int, n: int) -> list[StudyRecord]:
    """In-memory study records for catalog testing (no files involved)."""
    rng = random.Random(seed)
    spec = SynthSpec(seed=seed, n_studies=n)
    records = []
    variable_pool = [v.id for v in synth_dictionary(6).variables]
    for i in range(n):
        meta = _study_metadata(rng, i, spec)
        n_files = rng.choice((0, 1, 1, 2, 3))
        variables = frozenset(rng.sample(variable_pool, k=rng.randint(0, len(variable_pool)))) if n_files else frozenset()
        records.append(StudyRecord(study=meta, variable_names=variables, n_data_files=n_files))
    return records
