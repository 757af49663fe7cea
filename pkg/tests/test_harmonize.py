import hashlib
import json

import pytest

from fairhub.bundle import FileBundle
from fairhub.dictionary import (
    DataDictionary,
    EnumerationEntry,
    VariableSpec,
    validate_dictionary,
)
from fairhub.harmonize import (
    HarmonizeError,
    apply_mappings,
    both_versions,
    harmonized_dictionary,
    harmonized_file_name,
    mapping_set_from_csv,
    parse_codebook,
    parse_mapping_set,
    serialize_codebook,
    serialize_mapping_set,
    validate_mappings,
)
from fairhub.issues import ERROR, WARNING, has_errors
from fairhub.metadata import FileMetadata
from fairhub.pipeline.synth import synth_dictionary
from fairhub.tabledata import Table, serialize_table, validate_against_dictionary

PAPER_CATEGORIES = {
    "Race", "Ethnicity", "Age", "Sex", "Education", "Domicile", "Employment",
    "Insurance Status", "Disability Status", "Medical History", "Symptoms", "Health Status",
}


def codes(issues):
    return [i.code for i in issues]


def edu_dictionary():
    return DataDictionary(
        variables=(
            VariableSpec(
                "edu_years_of_school",
                "Years of school completed",
                "enum",
                enumeration=(
                    EnumerationEntry("1", "Never attended school"),
                    EnumerationEntry("2", "8th grade or less"),
                    EnumerationEntry("3", "9th to 12th grade, no diploma"),
                    EnumerationEntry("4", "High school graduate or GED completed"),
                    EnumerationEntry("5", "Some college, no degree"),
                    EnumerationEntry("6", "Associate degree"),
                    EnumerationEntry("7", "Bachelor's degree"),
                    EnumerationEntry("8", "Graduate or professional degree"),
                ),
            ),
            VariableSpec("custom_score", "Custom score", "decimal", min=0, max=100),
        )
    )


# --- codebook ---------------------------------------------------------------


def test_shipped_codebook_has_the_twelve_categories(codebook):
    assert set(codebook.categories) == PAPER_CATEGORIES
    assert len(codebook.categories) == 12


def test_shipped_codebook_education_codes(codebook):
    edu = codebook.get("nih_education")
    assert edu is not None and edu.category == "Education"
    labels = {e.code: e.label for e in edu.enumeration}
    assert labels["2"] == "High school graduate or GED completed"


def test_codebook_unknown_category():
    doc = {"categories": ["Age"], "cdes": [{"name": "x", "label": "X", "category": "Sex", "datatype": "integer"}]}
    cb, issues = parse_codebook(json.dumps(doc).encode())
    assert cb is None and codes(issues) == ["CB_BAD_CATEGORY"]


def test_codebook_duplicate_name():
    doc = {
        "categories": ["Age"],
        "cdes": [
            {"name": "x", "label": "X", "category": "Age", "datatype": "integer"},
            {"name": "x", "label": "X2", "category": "Age", "datatype": "integer"},
        ],
    }
    cb, issues = parse_codebook(json.dumps(doc).encode())
    assert cb is None and codes(issues) == ["CB_DUP_NAME"]


def test_codebook_round_trip(codebook):
    again, issues = parse_codebook(serialize_codebook(codebook))
    assert issues == [] and again == codebook


# --- mapping validation -----------------------------------------------------


def test_complete_mapping_is_clean(codebook, sample_mapping):
    issues = validate_mappings(edu_dictionary(), codebook, sample_mapping)
    errors = [i for i in issues if i.severity == ERROR]
    assert errors == []
    # custom_score has no mapping entry: coverage warning only
    assert codes([i for i in issues if i.severity == WARNING]) == ["MAP_UNMAPPED_VARIABLE"]


def test_bad_target_code(codebook):
    m, _ = parse_mapping_set(
        json.dumps(
            {
                "study": "t",
                "mappings": [
                    {"source": "edu_years_of_school", "action": "map", "target": "nih_education", "value_map": {"4": "9"}}
                ],
            }
        ).encode()
    )
    issues = validate_mappings(edu_dictionary(), codebook, m)
    assert "MAP_BAD_TARGET_CODE" in codes(issues)
    # the other seven declared codes are uncovered
    assert codes(issues).count("MAP_UNCOVERED_VALUE") == 7


def test_uncovered_declared_code_is_warning(codebook):
    m, _ = parse_mapping_set(
        json.dumps(
            {
                "study": "t",
                "mappings": [
                    {
                        "source": "edu_years_of_school",
                        "action": "map",
                        "target": "nih_education",
                        "value_map": {"1": "1", "2": "1", "3": "1", "4": "2", "5": "3", "6": "4", "7": "5"},
                    }
                ],
            }
        ).encode()
    )
    issues = validate_mappings(edu_dictionary(), codebook, m)
    uncovered = [i for i in issues if i.code == "MAP_UNCOVERED_VALUE"]
    assert len(uncovered) == 1 and uncovered[0].severity == WARNING
    assert "'8'" in uncovered[0].message


@pytest.mark.parametrize(
    "mapping,expected",
    [
        ({"source": "ghost", "action": "map", "target": "nih_education", "value_map": {"1": "1"}}, "MAP_UNKNOWN_SOURCE"),
        ({"source": "edu_years_of_school", "action": "map", "target": "nih_ghost"}, "MAP_UNKNOWN_CDE"),
        ({"source": "edu_years_of_school", "action": "map", "target": "nih_education", "value_map": {"77": "1"}}, "MAP_BAD_SOURCE_CODE"),
        ({"source": "edu_years_of_school", "action": "map", "target": "nih_age"}, "MAP_INCOMPATIBLE_TYPES"),
        ({"source": "custom_score", "action": "map", "target": "nih_education"}, "MAP_INCOMPATIBLE_TYPES"),
        ({"source": "custom_score", "action": "passthrough", "value_map": {"1": "1"}}, "MAP_VALUE_MAP_NOT_ALLOWED"),
        ({"source": "edu_years_of_school", "action": "map", "target": "nih_education"}, "MAP_VALUE_MAP_REQUIRED"),
    ],
)
def test_mapping_validation_codes(codebook, mapping, expected):
    m, parse_issues = parse_mapping_set(json.dumps({"study": "t", "mappings": [mapping]}).encode())
    assert m is not None, parse_issues
    assert expected in codes(validate_mappings(edu_dictionary(), codebook, m))


def test_parse_mapping_rejects_dup_source_and_missing_target():
    doc = {"study": "t", "mappings": [{"source": "a", "action": "map"}]}
    m, issues = parse_mapping_set(json.dumps(doc).encode())
    assert m is None and "MAP_MISSING_TARGET" in codes(issues)

    doc = {"study": "t", "mappings": [{"source": "a", "action": "drop"}, {"source": "a", "action": "drop"}]}
    m, issues = parse_mapping_set(json.dumps(doc).encode())
    assert m is None and "MAP_DUP_SOURCE" in codes(issues)


def test_duplicate_target_cde_rejected():
    doc = {
        "study": "t",
        "mappings": [
            {"source": "a", "action": "map", "target": "nih_education", "value_map": {"1": "1"}},
            {"source": "b", "action": "map", "target": "nih_education", "value_map": {"1": "1"}},
        ],
    }
    m, issues = parse_mapping_set(json.dumps(doc).encode())
    assert m is None and "MAP_DUP_TARGET" in codes(issues)


def test_mapped_name_colliding_with_passthrough(codebook):
    # a passthrough variable already named like the target CDE
    d = DataDictionary(
        variables=(
            edu_dictionary().variables[0],
            VariableSpec("nih_education", "Pre-existing column", "string"),
        )
    )
    m, _ = parse_mapping_set(
        json.dumps(
            {
                "study": "t",
                "mappings": [
                    {
                        "source": "edu_years_of_school",
                        "action": "map",
                        "target": "nih_education",
                        "value_map": {str(c): "1" for c in range(1, 9)},
                    }
                ],
            }
        ).encode()
    )
    issues = validate_mappings(d, codebook, m)
    assert "MAP_NAME_COLLISION" in codes(issues)


def test_mapping_round_trip(sample_mapping):
    again, issues = parse_mapping_set(serialize_mapping_set(sample_mapping))
    assert issues == [] and again.mappings == sample_mapping.mappings


def test_mapping_csv_import():
    csv_text = (
        "Source,Action,Target,SourceCode,TargetCode\n"
        "edu_years_of_school,map,nih_education,4,2\n"
        "edu_years_of_school,map,nih_education,3,1\n"
        "notes,drop,,,\n"
    )
    m, issues = mapping_set_from_csv(csv_text.encode(), study="t")
    assert issues == []
    edu = m.get("edu_years_of_school")
    assert edu.value_map == {"4": "2", "3": "1"}
    assert m.get("notes").action == "drop"


# --- application ------------------------------------------------------------


def test_fig_education_example(codebook, sample_mapping):
    """Original value 4 becomes nih_education code 2, whose codebook label is
    the high-school-graduate entry."""
    d = edu_dictionary()
    t = Table(header=("edu_years_of_school", "custom_score"), rows=(("4", "12.5"), ("3", "77.0")))
    out, out_dict, report = apply_mappings(t, d, codebook, sample_mapping)
    assert out.header == ("nih_education", "custom_score")
    assert out.rows[0][0] == "2"
    assert out.rows[1][0] == "1"
    label = {e.code: e.label for e in out_dict.get("nih_education").enumeration}[out.rows[0][0]]
    assert label == "High school graduate or GED completed"
    assert report.variables_mapped == 1 and report.variables_passthrough == 1
    assert report.values_remapped == 2


def test_passthrough_column_verbatim(codebook, sample_mapping):
    t = Table(header=("edu_years_of_school", "custom_score"), rows=(("4", "12.5"),))
    out, _, _ = apply_mappings(t, edu_dictionary(), codebook, sample_mapping)
    assert [r[1] for r in out.rows] == ["12.5"]


def test_missing_stays_missing(codebook, sample_mapping):
    t = Table(header=("edu_years_of_school", "custom_score"), rows=(("", ""),))
    out, _, report = apply_mappings(t, edu_dictionary(), codebook, sample_mapping)
    assert out.rows[0] == ("", "")
    assert report.values_remapped == 0


def test_strict_mode_fails_on_uncovered_runtime_value(codebook, sample_mapping):
    t = Table(header=("edu_years_of_school",), rows=(("9",),))
    d = DataDictionary(variables=(edu_dictionary().variables[0],))
    with pytest.raises(HarmonizeError) as e:
        apply_mappings(t, d, codebook, sample_mapping, strict=True)
    assert e.value.code == "MAP_RUNTIME_UNCOVERED"


def test_lenient_mode_blanks_and_records(codebook, sample_mapping):
    t = Table(header=("edu_years_of_school",), rows=(("9",), ("4",)))
    d = DataDictionary(variables=(edu_dictionary().variables[0],))
    out, _, report = apply_mappings(t, d, codebook, sample_mapping, strict=False)
    assert out.rows[0][0] == "" and out.rows[1][0] == "2"
    assert len(report.unmapped_value_incidents) == 1
    assert report.unmapped_value_incidents[0].row == 2


def test_dropped_column_removed(codebook):
    m, _ = parse_mapping_set(json.dumps({"study": "t", "mappings": [{"source": "custom_score", "action": "drop"}]}).encode())
    t = Table(header=("edu_years_of_school", "custom_score"), rows=(("4", "1.0"),))
    out, out_dict, report = apply_mappings(t, edu_dictionary(), codebook, m)
    assert out.header == ("edu_years_of_school",)
    assert out_dict.ids() == ["edu_years_of_school"]
    assert report.variables_dropped == 1


def test_harmonized_dictionary_validates(codebook, sample_mapping):
    out = harmonized_dictionary(edu_dictionary(), codebook, sample_mapping)
    assert validate_dictionary(out) == []
    assert out.ids() == ["nih_education", "custom_score"]
    assert out.get("nih_education").label == "Highest level of education completed"


def test_row_count_and_order_preserved(codebook, synth_mapping):
    d = synth_dictionary(2)
    rows = tuple(
        (f"P{i:05d}", "2021-01-0%d" % (i % 9 + 1), "90210", "30", "Clinic A", "Kim Chen",
         str(i % 8 + 1), "1", "0", "3", "55.5", "note", str(i), f"{i / 10:.3f}")
        for i in range(10)
    )
    t = Table(header=tuple(v.id for v in d.variables), rows=rows)
    out, out_dict, report = apply_mappings(t, d, codebook, synth_mapping)
    assert out.n_rows == 10
    assert [r[0] for r in out.rows] == [r[0] for r in rows]
    # composition: harmonized output validates against harmonized dictionary
    assert not has_errors(validate_against_dictionary(out, out_dict))
    # value-domain closure for a mapped categorical column
    edu_codes = {e.code for e in codebook.get("nih_education").enumeration}
    ci = out.header.index("nih_education")
    assert all(r[ci] in edu_codes or r[ci] == "" for r in out.rows)


def test_both_versions_immutable_original(codebook, sample_mapping, tmp_path):
    d = edu_dictionary()
    t = Table(header=("edu_years_of_school", "custom_score"), rows=(("4", "1.0"),), source_name="edu.csv")
    meta = FileMetadata(file_name="edu.csv")
    b = FileBundle(table=t, dictionary=d, file_metadata=meta)
    before = hashlib.sha256(serialize_table(t)).hexdigest()
    original, harmonized, report = both_versions(b, codebook, sample_mapping)
    assert original is b
    assert hashlib.sha256(serialize_table(b.table)).hexdigest() == before
    assert harmonized.file_metadata.file_name == "edu_harmonized.csv"
    assert harmonized.file_metadata.harmonized
    assert harmonized.file_metadata.summary is not None
    assert harmonized.table.n_rows == 1


def test_harmonized_file_name():
    assert harmonized_file_name("project60_DATA.csv") == "project60_DATA_harmonized.csv"
    assert harmonized_file_name("x.csv") == "x_harmonized.csv"
