import json
import random

import yaml

from fairhub.issues import WARNING
from fairhub.metadata import (
    Creator,
    FieldSpec,
    FileMetadata,
    StudyMetadata,
    Template,
    load_term_registry,
    parse_metadata,
    parse_template,
    serialize_metadata,
    serialize_metadata_yaml,
    serialize_template,
    validate_metadata,
)
from fairhub.tabledata import SummaryStats, VariableStats

COVID_IRI = "http://purl.bioontology.org/ontology/MESH/D000086382"


def codes(issues):
    return [i.code for i in issues]


# --- term registry ----------------------------------------------------------


def test_load_three_terms():
    raw = b"\n".join(
        json.dumps({"iri": f"https://x.org/t{i}", "label": f"T{i}", "source": "X"}).encode() for i in range(3)
    )
    reg, issues = load_term_registry(raw)
    assert issues == [] and len(reg) == 3
    assert reg.resolve("https://x.org/t1").label == "T1"
    assert reg.resolve("https://x.org/none") is None


def test_duplicate_iri():
    rec = json.dumps({"iri": "https://x.org/t", "label": "T", "source": "X"}).encode()
    reg, issues = load_term_registry(rec + b"\n" + rec)
    assert reg is None and codes(issues) == ["TERM_DUP_IRI"]


def test_relative_iri_rejected():
    raw = json.dumps({"iri": "MESH/D000086382", "label": "COVID-19", "source": "MESH"}).encode()
    reg, issues = load_term_registry(raw)
    assert reg is None and codes(issues) == ["TERM_BAD_IRI"]


def test_bad_json_line_and_bad_record():
    raw = b'{"iri": "https://x.org/a", "label": "A", "source": "X"}\nnot json\n{"iri": "https://x.org/b"}\n'
    reg, issues = load_term_registry(raw)
    assert reg is None
    assert codes(issues) == ["TERM_BAD_JSON", "TERM_BAD_RECORD"]


def test_shipped_registry_resolves_covid(term_registry):
    term = term_registry.resolve(COVID_IRI)
    assert term is not None and term.label == "COVID-19" and term.source == "MESH"


# --- template validation ------------------------------------------------------


def test_fig_study_validates_cleanly(fig_study, study_template, term_registry):
    issues = validate_metadata(fig_study.to_instance(), study_template, term_registry)
    assert issues == []


def test_unknown_program_rejected(fig_study, study_template, term_registry):
    instance = fig_study.to_instance()
    instance["program"] = "RADx-XYZ"
    issues = validate_metadata(instance, study_template, term_registry)
    assert codes(issues) == ["META_BAD_VALUE"]
    assert issues[0].column == "program"


def test_missing_required(fig_study, study_template):
    instance = fig_study.to_instance()
    del instance["title"]
    issues = validate_metadata(instance, study_template)
    assert codes(issues) == ["META_MISSING_REQUIRED"]


def test_kind_checks(study_template, fig_study):
    instance = fig_study.to_instance()
    instance["estimated_cohort_size"] = "many"
    instance["multi_center"] = "yes"
    instance["release_date"] = "08/29/2023"
    issues = validate_metadata(instance, study_template)
    assert codes(issues) == ["META_BAD_KIND"] * 3
    assert [i.column for i in issues] == ["estimated_cohort_size", "multi_center", "release_date"]


def test_accession_and_doi_patterns(study_template, fig_study):
    instance = fig_study.to_instance()
    instance["accession"] = "phs29"
    instance["doi"] = "doi:whatever"
    issues = validate_metadata(instance, study_template)
    assert codes(issues) == ["META_BAD_VALUE"] * 2


def test_negative_cohort_rejected(study_template, fig_study):
    instance = fig_study.to_instance()
    instance["estimated_cohort_size"] = -1
    assert codes(validate_metadata(instance, study_template)) == ["META_BAD_VALUE"]


def test_unknown_field_warns(study_template, fig_study):
    instance = fig_study.to_instance()
    instance["zzz_custom"] = 1
    issues = validate_metadata(instance, study_template)
    assert codes(issues) == ["META_UNKNOWN_FIELD"]
    assert issues[0].severity == WARNING


def test_term_field_resolution(term_registry):
    tpl = Template(
        name="t",
        version="1",
        sections=("s",),
        fields=(FieldSpec("subject", "term", "s", required=True, sources=("MESH",)),),
    )
    assert validate_metadata({"subject": COVID_IRI}, tpl, term_registry) == []
    issues = validate_metadata({"subject": "https://x.org/unknown"}, tpl, term_registry)
    assert codes(issues) == ["META_UNRESOLVED_TERM"]


def test_list_field_items_checked(study_template, fig_study):
    instance = fig_study.to_instance()
    instance["study_domains"] = ["Virological Testing", "Time Travel"]
    issues = validate_metadata(instance, study_template)
    assert codes(issues) == ["META_BAD_VALUE"]


def test_issues_sorted_by_field(study_template, fig_study):
    instance = fig_study.to_instance()
    instance["program"] = "nope"
    instance["access_tier"] = "secret"
    del instance["title"]
    issues = validate_metadata(instance, study_template)
    assert [i.column for i in issues] == sorted(i.column for i in issues)


def test_injected_violation_completeness(study_template, term_registry, fig_study):
    """k injected template violations produce exactly k issues, right codes."""
    rng = random.Random(77)
    injections = [
        ("program", "RADx-XYZ", "META_BAD_VALUE"),
        ("estimated_cohort_size", -3, "META_BAD_VALUE"),
        ("title", None, "META_MISSING_REQUIRED"),
        ("release_date", "bad-date", "META_BAD_KIND"),
        ("multi_center", "TRUE", "META_BAD_KIND"),
        ("accession", "phsXYZ", "META_BAD_VALUE"),
    ]
    for trial in range(30):
        k = rng.randint(0, len(injections))
        chosen = rng.sample(injections, k)
        instance = fig_study.to_instance()
        expected = []
        for field, value, code in chosen:
            if value is None:
                instance.pop(field, None)
            else:
                instance[field] = value
            expected.append((field, code))
        issues = validate_metadata(instance, study_template, term_registry)
        assert sorted((i.column, i.code) for i in issues) == sorted(expected)


# --- serialization ------------------------------------------------------------


def test_serialize_round_trip(fig_study, study_template):
    raw = serialize_metadata(fig_study.to_instance(), study_template)
    assert parse_metadata(raw) == fig_study.to_instance()
    assert StudyMetadata.from_instance(parse_metadata(raw)) == fig_study


def test_serialize_stable_bytes(fig_study, study_template):
    a = serialize_metadata(fig_study.to_instance(), study_template)
    b = serialize_metadata(dict(reversed(list(fig_study.to_instance().items()))), study_template)
    assert a == b


def test_context_block_names_field_iris(fig_study, study_template):
    doc = json.loads(serialize_metadata(fig_study.to_instance(), study_template))
    assert doc["@context"]["accession"] == "https://fairhub.local/vocab/accession"
    assert "title" in doc["@context"]


def test_yaml_mirror(fig_study, study_template):
    data = yaml.safe_load(serialize_metadata_yaml(fig_study.to_instance(), study_template))
    assert data["accession"] == "phs002920"
    assert data["program"] == "RADx-UP"


def test_template_round_trip(study_template):
    again, issues = parse_template(serialize_template(study_template))
    assert issues == [] and again == study_template


def test_parse_template_rejects_bad_fields():
    doc = {
        "name": "t",
        "version": "1",
        "sections": [
            {"name": "s", "fields": [
                {"name": "a", "kind": "controlled"},
                {"name": "a", "kind": "text"},
                {"name": "b", "kind": "wibble"},
            ]}
        ],
    }
    tpl, issues = parse_template(json.dumps(doc).encode())
    assert tpl is None
    assert sorted(codes(issues)) == ["TPL_BAD_FIELD", "TPL_BAD_KIND", "TPL_DUP_FIELD"]


# --- file metadata -------------------------------------------------------------


def test_file_metadata_round_trip():
    meta = FileMetadata(
        file_name="data.csv",
        version=2,
        creators=(Creator("person", "Ogunyemi, Omolola I"),),
        subjects=(COVID_IRI,),
        summary=SummaryStats(n_records=187, n_variables=169, per_variable={"age": VariableStats(3, 0.0, 90.0, 41.2)}),
        deid_applied=True,
        harmonized=False,
    )
    again = FileMetadata.from_dict(json.loads(json.dumps(meta.to_dict())))
    assert again == meta


def test_file_template_checks_subjects(file_template, term_registry):
    instance = {"file_name": "x.csv", "version": 1, "subjects": ["https://nope.example/t"]}
    issues = validate_metadata(instance, file_template, term_registry)
    assert codes(issues) == ["META_UNRESOLVED_TERM"]
    instance["subjects"] = [COVID_IRI]
    assert validate_metadata(instance, file_template, term_registry) == []
