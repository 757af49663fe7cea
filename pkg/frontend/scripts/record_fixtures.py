#!/usr/bin/env python3
"""Record API fixtures for the frontend contract tests.

Builds a deterministic corpus (synthetic studies plus the reference fixture
study phs002920), runs the curation pipeline into a store, and records the
exact JSON payloads the API returns for every URL the UI will issue for the
scripted states in tests/fixtures/states.json. Responses are keyed by a
canonical form of the URL (path plus sorted decoded query pairs) so the
TypeScript mock fetch can look them up regardless of encoding details.

Usage: python scripts/record_fixtures.py   (from frontend/, package installed)
"""

import json
import os
import sys
import tempfile
from pathlib import Path
from urllib.parse import parse_qsl, urlsplit

from fastapi.testclient import TestClient

from fairhub.dictionary import serialize_dictionary
from fairhub.metadata import Creator, FileMetadata, parse_template, serialize_metadata
from fairhub.pipeline.config import PipelineConfig
from fairhub.pipeline.run import ACCEPTED, run_pipeline_from_path
from fairhub.pipeline.server import create_app
from fairhub.pipeline.store import StudyStore
from fairhub.pipeline.synth import SynthSpec, generate_corpus, synth_dictionary
from fairhub import read_data

HERE = Path(__file__).resolve().parent
FIXTURES = HERE.parent / "tests" / "fixtures"

SEED = 2026
N_SYNTH = 12

FIG_STUDY = {
    "accession": "phs002920",
    "title": (
        "A Community Health Worker Intervention to Identify and Decrease Barriers "
        "to Pre-Procedural COVID-19 Testing Among Los Angeles County Department of "
        "Health Safety-Net Patients"
    ),
    "principal_investigator": "Ogunyemi, Omolola I",
    "program": "RADx-UP",
    "nih_institute": "NLM",
    "study_design": "Longitudinal Cohort",
    "estimated_cohort_size": 128,
    "multi_center": True,
    "doi": "10.60773/ksgc-r355",
    "release_date": "2023-08-29",
    "study_domains": [
        "Pandemic Perceptions and Decision-Making",
        "Testing Rate/Uptake",
        "Vaccination Rate/Uptake",
        "Virological Testing",
    ],
    "population_focus": ["Underserved/Vulnerable Populations"],
    "data_collection_methods": ["Interview or Focus Group", "Survey"],
    "keywords": ["Building Trust Amongst Marginalized Communities"],
    "sites": [
        "Charles R. Drew University of Medicine and Science",
        "Los Angeles County Department of Health Services",
    ],
    "data_types": ["Behavioral", "Electronic Medical Records", "Other"],
    "access_tier": "controlled",
}


def canonical_key(url: str) -> str:
    parts = urlsplit(url)
    pairs = sorted(parse_qsl(parts.query, keep_blank_values=True))
    query = "&".join(f"{k}={v}" for k, v in pairs)
    return f"{parts.path}?{query}" if query else parts.path


def studies_query_pairs(state: dict) -> list[tuple[str, str]]:
    """Mirror of ApiClient.studiesQuery in src/api.ts."""
    pairs: list[tuple[str, str]] = []
    if state.get("text"):
        pairs.append(("text", state["text"]))
    for field in sorted(state.get("filters", {})):
        for value in sorted(set(state["filters"][field])):
            pairs.append(("filter", f"{field}={value}"))
    pairs.append(("sort", state.get("sort", "title")))
    pairs.append(("order", state.get("order", "asc")))
    pairs.append(("offset", str(state.get("offset", 0))))
    pairs.append(("limit", str(state.get("limit", 50))))
    return pairs


FACET_FIELDS = [
    "program",
    "nih_institute",
    "study_domains",
    "population_focus",
    "data_collection_methods",
    "study_design",
    "cohort_size",
    "has_data_files",
]


def write_fig_study(corpus: Path) -> None:
    """The reference fixture study, as a submission directory."""
    template, issues = parse_template(read_data("study_template.json"))
    assert template is not None, issues
    sdir = corpus / "studies" / FIG_STUDY["accession"]
    (sdir / "docs").mkdir(parents=True, exist_ok=True)
    (sdir / "study.json").write_bytes(serialize_metadata(FIG_STUDY, template))
    (sdir / "docs" / "README.txt").write_text("Fixture study for UI contract tests.\n")
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
    meta = FileMetadata(
        file_name="project60_DATA.csv",
        version=1,
        creators=(Creator("person", FIG_STUDY["principal_investigator"]),),
        subjects=("http://purl.bioontology.org/ontology/MESH/D000086382",),
    )
    (bdir / "meta.json").write_text(json.dumps(meta.to_dict(), sort_keys=True, indent=2) + "\n")


def record(client: TestClient, fixtures: dict, path: str, pairs: list[tuple[str, str]] | None = None) -> dict:
    query = "&".join(f"{k}={v}" for k, v in pairs) if pairs else ""
    url = f"{path}?{query}" if query else path
    response = client.get(path, params=pairs)
    assert response.status_code == 200, f"{url} -> {response.status_code}: {response.text[:200]}"
    payload = response.json()
    fixtures[canonical_key(url)] = payload
    return payload


def main() -> None:
    os.environ.setdefault("FAIRHUB_DEID_KEY", "00112233445566778899aabbccddeeff")
    states = json.loads((FIXTURES / "states.json").read_text())

    with tempfile.TemporaryDirectory() as tmp:
        corpus = Path(tmp) / "corpus"
        generate_corpus(
            SynthSpec(seed=SEED, n_studies=N_SYNTH, rows_per_bundle=12, controlled_fraction=0.35),
            corpus,
        )
        write_fig_study(corpus)
        cfg = PipelineConfig.load(corpus / "pipeline_config.json")
        for sdir in sorted((corpus / "studies").iterdir()):
            report = run_pipeline_from_path(sdir, cfg)
            assert report.verdict == ACCEPTED, report.render_human()

        app = create_app(cfg.store_root, corpus / "resources" / "study_template.json")
        client = TestClient(app)

        api: dict = {}
        for state in states:
            record(client, api, "/studies", studies_query_pairs(state))
        for field in FACET_FIELDS:
            record(client, api, "/facets", [("field", field)])
        record(client, api, "/facets", [("field", "population_focus"), ("stack_by", "program")])
        for prefix in ("te", "cov", "zzz"):
            record(client, api, "/autocomplete", [("prefix", prefix), ("k", "8")])

        store = StudyStore(cfg.store_root)
        accessions = store.list_accessions()
        tiers: dict[str, str] = {}
        for acc in accessions:
            overview = record(client, api, f"/studies/{acc}")
            record(client, api, f"/studies/{acc}/metadata")
            tiers[acc] = overview["study"]["access_tier"]

        # a second, empty store for the empty-corpus behavior
        empty_root = Path(tmp) / "empty-store"
        (empty_root / "studies").mkdir(parents=True)
        empty_client = TestClient(create_app(empty_root))
        empty: dict = {}
        record(empty_client, empty, "/studies", studies_query_pairs({"filters": {}}))
        for field in FACET_FIELDS:
            record(empty_client, empty, "/facets", [("field", field)])

        out = {
            "seed": SEED,
            "accessions": accessions,
            "tiers": tiers,
            "api": api,
            "empty_api": empty,
        }
        target = FIXTURES / "api_fixtures.json"
        target.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
        print(f"recorded {len(api)} corpus responses, {len(empty)} empty-store responses -> {target}")


if __name__ == "__main__":
    sys.exit(main())
