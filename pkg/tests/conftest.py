from pathlib import Path

import pytest

from fairhub import read_data
from fairhub.dictionary import parse_dictionary
from fairhub.harmonize import parse_codebook, parse_mapping_set
from fairhub.metadata import StudyMetadata, load_term_registry, parse_template

TEST_KEY_HEX = "00112233445566778899aabbccddeeff00112233445566778899aabbccddeeff"
TEST_KEY = bytes.fromhex(TEST_KEY_HEX)


@pytest.fixture(autouse=True)
def _deid_key_env(monkeypatch):
    monkeypatch.setenv("FAIRHUB_DEID_KEY", TEST_KEY_HEX)


@pytest.fixture(scope="session")
def codebook():
    cb, issues = parse_codebook(read_data("codebook.json"))
    assert cb is not None, issues
    return cb


@pytest.fixture(scope="session")
def sample_mapping():
    m, issues = parse_mapping_set(read_data("sample_mapping.json"))
    assert m is not None, issues
    return m


@pytest.fixture(scope="session")
def synth_mapping():
    m, issues = parse_mapping_set(read_data("synth_mapping.json"))
    assert m is not None, issues
    return m


@pytest.fixture(scope="session")
def sample_dictionary():
    d, issues = parse_dictionary(read_data("sample_dictionary.csv"))
    assert d is not None, issues
    return d


@pytest.fixture(scope="session")
def study_template():
    tpl, issues = parse_template(read_data("study_template.json"))
    assert tpl is not None, issues
    return tpl


@pytest.fixture(scope="session")
def file_template():
    tpl, issues = parse_template(read_data("file_template.json"))
    assert tpl is not None, issues
    return tpl


@pytest.fixture(scope="session")
def term_registry():
    reg, issues = load_term_registry(read_data("terms.jsonl"))
    assert reg is not None, issues
    return reg


def fig_study_metadata() -> StudyMetadata:
    """Reference demo study shared across tests."""
    return StudyMetadata(
        accession="phs002920",
        title=(
            "A Community Health Worker Intervention to Identify and Decrease Barriers "
            "to Pre-Procedural COVID-19 Testing Among Los Angeles County Department of "
            "Health Safety-Net Patients"
        ),
        principal_investigator="Ogunyemi, Omolola I",
        program="RADx-UP",
        nih_institute="NLM",
        study_design="Longitudinal Cohort",
        estimated_cohort_size=128,
        multi_center=True,
        doi="10.60773/ksgc-r355",
        release_date="2023-08-29",
        study_domains=(
            "Pandemic Perceptions and Decision-Making",
            "Testing Rate/Uptake",
            "Vaccination Rate/Uptake",
            "Virological Testing",
        ),
        population_focus=("Underserved/Vulnerable Populations",),
        data_collection_methods=("Interview or Focus Group", "Survey"),
        keywords=("Building Trust Amongst Marginalized Communities",),
        sites=(
            "Charles R. Drew University of Medicine and Science",
            "Los Angeles County Department of Health Services",
        ),
        data_types=("Behavioral", "Electronic Medical Records", "Other"),
        access_tier="controlled",
    )


@pytest.fixture
def fig_study():
    return fig_study_metadata()


def write_fig_submission(root) -> str:
    """Write the reference study as a pipeline-ready submission directory."""
    import json

    from fairhub.dictionary import serialize_dictionary
    from fairhub.metadata import Creator, FileMetadata, serialize_metadata
    from fairhub.pipeline.synth import synth_dictionary

    tpl, issues = parse_template(read_data("study_template.json"))
    assert tpl is not None, issues
    meta = fig_study_metadata()
    sdir = Path(root) / meta.accession
    (sdir / "docs").mkdir(parents=True, exist_ok=True)
    (sdir / "study.json").write_bytes(serialize_metadata(meta.to_instance(), tpl))
    (sdir / "docs" / "README.txt").write_text("Reference fixture study.\n")
    d = synth_dictionary(0)
    rows = [
        ["P00001", "2021-03-10", "90210", "44", "Clinic A", "Kim Chen", "4", "1", "0", "2", "51.0", "routine visit"],
        ["P00002", "2021-03-17", "90502", "67", "Clinic B", "Dana Rivera", "3", "2", "1", "3", "62.5", "callback pending"],
    ]
    bdir = sdir / "bundles" / "project60_DATA"
    bdir.mkdir(parents=True, exist_ok=True)
    header = ",".join(v.id for v in d.variables)
    (bdir / "data.csv").write_text(header + "\n" + "\n".join(",".join(r) for r in rows) + "\n")
    (bdir / "dict.csv").write_bytes(serialize_dictionary(d))
    fmeta = FileMetadata(
        file_name="project60_DATA.csv",
        version=1,
        creators=(Creator("person", meta.principal_investigator),),
        subjects=("http://purl.bioontology.org/ontology/MESH/D000086382",),
    )
    (bdir / "meta.json").write_text(json.dumps(fmeta.to_dict(), sort_keys=True, indent=2) + "\n")
    return str(sdir)
