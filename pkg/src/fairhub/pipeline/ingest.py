"""Staging of submitted studies.

A submission directory looks like the store layout it will become:

    <dir>/study.json
    <dir>/docs/<documentation files>        (optional)
    <dir>/bundles/<name>/data.csv
    <dir>/bundles/<name>/dict.csv
    <dir>/bundles/<name>/meta.json

Ingest parses every component; structural problems (missing triple members,
unparseable CSV/JSON) come back as issues so the caller can return them to
the contributor. Unrecognized extra files only warn.

Codes: ING_BAD_LAYOUT, ING_MISSING_COMPONENT, ING_BAD_META,
ING_EXTRA_FILE (warning), plus whatever the component parsers report.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..bundle import FileBundle
from ..dictionary import parse_dictionary
from ..issues import Issue, error, has_errors, sort_issues, warning
from ..metadata import FileMetadata, parse_metadata
from ..tabledata import parse_table

BUNDLE_COMPONENTS = ("data.csv", "dict.csv", "meta.json")


@dataclass
class StagedStudy:
    accession: str
    study_instance: dict
    bundles: list[FileBundle] = field(default_factory=list)
    docs: list[tuple[str, bytes]] = field(default_factory=list)
    raw_bundle_bytes: dict[str, bytes] = field(default_factory=dict)


def ingest(path: str | Path) -> tuple[StagedStudy | None, list[Issue]]:
    """Stage a submission directory. Study present iff no error issues."""
    root = Path(path)
    issues: list[Issue] = []
    if not root.is_dir():
        return None, [error("ING_BAD_LAYOUT", f"{root} is not a directory", file=str(root))]

    study_file = root / "study.json"
    if not study_file.is_file():
        return None, [error("ING_BAD_LAYOUT", "study.json is missing", file="study.json")]
    try:
        instance = parse_metadata(study_file.read_bytes())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return None, [error("ING_BAD_LAYOUT", f"study.json is not valid JSON: {exc}", file="study.json")]
    accession = instance.get("accession")
    if not isinstance(accession, str) or not accession:
        return None, [error("ING_BAD_LAYOUT", "study.json has no accession", file="study.json")]

    bundles_dir = root / "bundles"
    if not bundles_dir.is_dir():
        return None, [error("ING_BAD_LAYOUT", "bundles/ directory is missing", file="bundles")]

    staged = StagedStudy(accession=accession, study_instance=instance)

    docs_dir = root / "docs"
    if docs_dir.is_dir():
        for doc in sorted(docs_dir.iterdir()):
            if doc.is_file():
                staged.docs.append((doc.name, doc.read_bytes()))

    expected_top = {"study.json", "bundles", "docs"}
    for entry in sorted(root.iterdir()):
        if entry.name not in expected_top:
            issues.append(warning("ING_EXTRA_FILE", f"unrecognized entry {entry.name!r} ignored", file=entry.name))

    bundle_dirs = sorted(p for p in bundles_dir.iterdir() if p.is_dir())
    if not bundle_dirs:
        issues.append(error("ING_BAD_LAYOUT", "bundles/ contains no bundle directories", file="bundles"))

    for bdir in bundle_dirs:
        rel = f"bundles/{bdir.name}"
        missing = [c for c in BUNDLE_COMPONENTS if not (bdir / c).is_file()]
        if missing:
            for c in missing:
                issues.append(error("ING_MISSING_COMPONENT", f"bundle {bdir.name!r} is missing {c}", file=f"{rel}/{c}"))
            continue
        for entry in sorted(bdir.iterdir()):
            if entry.name not in BUNDLE_COMPONENTS:
                issues.append(warning("ING_EXTRA_FILE", f"unrecognized entry {entry.name!r} ignored", file=f"{rel}/{entry.name}"))

        data_bytes = (bdir / "data.csv").read_bytes()
        dict_bytes = (bdir / "dict.csv").read_bytes()
        meta_bytes = (bdir / "meta.json").read_bytes()

        table, t_issues = parse_table(data_bytes, source_name=f"{rel}/data.csv")
        issues.extend(t_issues)
        dictionary, d_issues = parse_dictionary(dict_bytes, source_name=f"{rel}/dict.csv")
        issues.extend(d_issues)
        meta = None
        try:
            meta = FileMetadata.from_dict(json.loads(meta_bytes.decode("utf-8")))
        except (json.JSONDecodeError, UnicodeDecodeError, KeyError, TypeError, ValueError) as exc:
            issues.append(error("ING_BAD_META", f"meta.json unreadable: {exc}", file=f"{rel}/meta.json"))

        if table is not None and dictionary is not None and meta is not None:
            staged.bundles.append(FileBundle(table=table, dictionary=dictionary, file_metadata=meta))
            staged.raw_bundle_bytes[meta.file_name] = data_bytes

    issues = sort_issues(issues)
    if has_errors(issues):
        return None, issues
    return staged, issues
