import re

import pytest

from fairhub.piiscan import (
    CELL_PATTERN,
    COLUMN_NAME,
    Detector,
    builtin_detectors,
    has_high_confidence,
    mask_excerpt,
    scan_table,
)
from fairhub.tabledata import Table


def make_table(header, rows):
    return Table(header=tuple(header), rows=tuple(tuple(r) for r in rows))


def test_builtin_set_shape():
    dets = builtin_detectors()
    ids = [d.id for d in dets]
    assert "ssn" in ids
    assert len(set(ids)) == len(ids)
    for d in dets:
        re.compile(d.pattern)  # must not raise
    kinds = {d.kind for d in dets}
    assert kinds == {CELL_PATTERN, COLUMN_NAME}


def test_ssn_cell():
    t = make_table(["v"], [["123-45-6789"]])
    findings = scan_table(t)
    assert [(f.detector_id, f.row, f.column, f.confidence) for f in findings] == [("ssn", 2, "v", "high")]
    assert "123-45-6789" not in findings[0].excerpt


def test_email_cell():
    t = make_table(["v"], [["jane.doe@example.org"]])
    findings = scan_table(t)
    assert [f.detector_id for f in findings] == ["email"]


def test_clean_table_no_findings():
    t = make_table(["score", "visit"], [["12", "2021-03-10"], ["7", "2020-02-29"]])
    assert scan_table(t) == []


@pytest.mark.parametrize(
    "value,detector",
    [
        ("415-555-0182", "phone"),
        ("(415) 555-0182", "phone"),
        ("90210-1234", "zip_plus4"),
        ("742 Evergreen St", "street_address"),
        ("1600 Pennsylvania Ave", "street_address"),
    ],
)
def test_detector_hits(value, detector):
    findings = scan_table(make_table(["v"], [[value]]))
    assert detector in {f.detector_id for f in findings}


@pytest.mark.parametrize(
    "value",
    ["2021-03-10", "2021-03-10T14:30:00", "90210", "52.3", "12345.6789", "0.5", "-17", "P00042"],
)
def test_clean_values_do_not_trigger_cell_detectors(value):
    assert scan_table(make_table(["v"], [[value]])) == []


def test_column_name_heuristics():
    t = make_table(["patient_name", "ssn_last4", "score"], [["x", "y", "1"]])
    findings = scan_table(t)
    got = {(f.detector_id, f.column) for f in findings}
    assert ("column_name", "patient_name") in got
    assert ("column_ssn", "ssn_last4") in got
    assert all(f.row == 1 and f.confidence == "medium" for f in findings)


def test_masking_never_reproduces_token():
    for token in ("123-45-6789", "a@b.co", "ab", "x"):
        masked = mask_excerpt(token)
        assert token not in masked


def test_ordering_and_determinism():
    t = make_table(
        ["a", "b"],
        [["123-45-6789", "jane@example.org"], ["", "987-65-4321"]],
    )
    f1 = scan_table(t)
    f2 = scan_table(t)
    assert f1 == f2
    assert [(f.row, f.column, f.detector_id) for f in f1] == [
        (2, "a", "ssn"),
        (2, "b", "email"),
        (3, "b", "ssn"),
    ]


def test_custom_detector_and_high_confidence_helper():
    det = Detector("badge", CELL_PATTERN, r"BADGE-\d{4}", "high")
    findings = scan_table(make_table(["v"], [["BADGE-0042"]]), [det])
    assert [f.detector_id for f in findings] == ["badge"]
    assert has_high_confidence(findings)
    assert not has_high_confidence([])


def test_recall_on_synthetic_ground_truth(tmp_path):
    import csv

    from fairhub.pipeline.synth import SynthSpec, generate_corpus

    spec = SynthSpec(
        seed=2024,
        n_studies=4,
        rows_per_bundle=40,
        inject={"ssn": 5, "email": 4, "phone": 4, "zip_plus4": 3, "street_address": 3},
    )
    ledger = generate_corpus(spec, tmp_path)
    expected: dict[str, set] = {}
    for d in ledger["defects"]:
        expected.setdefault(d["study"], set()).add((d["row"], d["column"], d["code"]))
    for study_dir in sorted((tmp_path / "studies").iterdir()):
        got = set()
        for bdir in sorted((study_dir / "bundles").iterdir()):
            rows = list(csv.reader(open(bdir / "data.csv", encoding="utf-8")))
            t = Table(header=tuple(rows[0]), rows=tuple(tuple(r) for r in rows[1:]))
            for f in scan_table(t):
                if f.confidence == "high" or f.detector_id == "street_address":
                    got.add((f.row, f.column, f.detector_id))
        assert got == expected.get(study_dir.name, set())
