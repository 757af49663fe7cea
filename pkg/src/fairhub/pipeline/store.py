"""Content-addressed local study store.

Layout under the store root:

    studies/<accession>/study.json
    studies/<accession>/docs/<name>
    studies/<accession>/bundles/<file-stem>/{data.csv, dict.csv, meta.json}
    studies/<accession>/harmonized/<file-stem>/{data.csv, dict.csv, meta.json}
    studies/<accession>/manifest.json
    index.json                      (catalog snapshot over all studies)

The manifest maps every stored file to its sha256; the study's local
persistent id is "local:" plus the first 12 hex chars of the hash of that
map, so identical content always re-derives the same id and any byte flip
is detectable. Writes go through a per-accession lock file.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path, PurePosixPath

from ..bundle import FileBundle
from ..catalog import StudyRecord
from ..dictionary import parse_dictionary, serialize_dictionary
from ..issues import Issue, error
from ..metadata import FileMetadata, StudyMetadata, Template, parse_metadata, serialize_metadata
from ..tabledata import serialize_table


class StoreError(Exception):
    pass


class StoreBusyError(StoreError):
    pass


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def local_id_for(files: dict[str, str]) -> str:
    canonical = json.dumps(files, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return "local:" + _sha256(canonical)[:12]


def _stem(file_name: str) -> str:
    return PurePosixPath(file_name).stem


def _meta_bytes(meta: FileMetadata) -> bytes:
    return (json.dumps(meta.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


@dataclass
class StoredFile:
    file_name: str
    harmonized: bool
    version: int
    deid_applied: bool
    n_records: int | None
    n_variables: int | None
    data_path: Path

    def to_dict(self) -> dict:
        return {
            "file_name": self.file_name,
            "harmonized": self.harmonized,
            "version": self.version,
            "deid_applied": self.deid_applied,
            "n_records": self.n_records,
            "n_variables": self.n_variables,
        }


@dataclass
class StoredStudy:
    accession: str
    instance: dict
    local_id: str
    documents: list[tuple[str, Path]]
    files: list[StoredFile]

    def overview(self) -> dict:
        return {
            "accession": self.accession,
            "local_id": self.local_id,
            "study": self.instance,
            "documents": [{"name": n, "size": p.stat().st_size} for n, p in self.documents],
            "files": [f.to_dict() for f in self.files],
        }


class StudyStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def studies_dir(self) -> Path:
        return self.root / "studies"

    def study_dir(self, accession: str) -> Path:
        return self.studies_dir / accession

    @contextmanager
    def lock(self, accession: str):
        """One pipeline run per study at a time."""
        self.studies_dir.mkdir(parents=True, exist_ok=True)
        lock_path = self.studies_dir / f"{accession}.lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise StoreBusyError(f"study {accession} is locked by another run") from None
        try:
            os.close(fd)
            yield
        finally:
            try:
                os.unlink(lock_path)
            except OSError:
                pass

    def write_study(
        self,
        accession: str,
        instance: dict,
        template: Template | None,
        docs: list[tuple[str, bytes]],
        bundles: list[FileBundle],
        harmonized: list[FileBundle],
    ) -> str:
        """Write one study, replacing any previous version. Returns local id."""
        sdir = self.study_dir(accession)
        if sdir.exists():
            shutil.rmtree(sdir)
        sdir.mkdir(parents=True)

        payload: dict[str, bytes] = {"study.json": serialize_metadata(instance, template)}
        for name, data in docs:
            payload[f"docs/{name}"] = data
        for group, group_bundles in (("bundles", bundles), ("harmonized", harmonized)):
            for b in group_bundles:
                stem = _stem(b.file_metadata.file_name)
                payload[f"{group}/{stem}/data.csv"] = serialize_table(b.table)
                payload[f"{group}/{stem}/dict.csv"] = serialize_dictionary(b.dictionary)
                payload[f"{group}/{stem}/meta.json"] = _meta_bytes(b.file_metadata)

        files = {rel: _sha256(data) for rel, data in payload.items()}
        local_id = local_id_for(files)
        manifest = {"accession": accession, "local_id": local_id, "files": files}
        payload["manifest.json"] = (json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode("utf-8")

        for rel, data in sorted(payload.items()):
            target = sdir / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)
        return local_id

    def list_accessions(self) -> list[str]:
        if not self.studies_dir.is_dir():
            return []
        return sorted(p.name for p in self.studies_dir.iterdir() if p.is_dir())

    def read_manifest(self, accession: str) -> dict:
        path = self.study_dir(accession) / "manifest.json"
        if not path.is_file():
            raise StoreError(f"no manifest for {accession}")
        return json.loads(path.read_text(encoding="utf-8"))

    def verify_study(self, accession: str) -> list[Issue]:
        """Tamper check: every manifest hash must match the stored bytes."""
        issues: list[Issue] = []
        sdir = self.study_dir(accession)
        try:
            manifest = self.read_manifest(accession)
        except (StoreError, json.JSONDecodeError) as exc:
            return [error("STORE_BAD_MANIFEST", str(exc), file=accession)]
        files = manifest.get("files", {})
        for rel, digest in sorted(files.items()):
            path = sdir / rel
            if not path.is_file():
                issues.append(error("STORE_MISSING_FILE", f"{rel} listed in manifest but absent", file=f"{accession}/{rel}"))
                continue
            if _sha256(path.read_bytes()) != digest:
                issues.append(error("STORE_HASH_MISMATCH", f"{rel} does not match its manifest hash", file=f"{accession}/{rel}"))
        if manifest.get("local_id") != local_id_for(files):
            issues.append(error("STORE_BAD_MANIFEST", "local_id does not match the files map", file=accession))
        return issues

    def load_study(self, accession: str) -> StoredStudy:
        sdir = self.study_dir(accession)
        study_file = sdir / "study.json"
        if not study_file.is_file():
            raise StoreError(f"study {accession} is not in the store")
        instance = parse_metadata(study_file.read_bytes())
        manifest = self.read_manifest(accession)

        documents: list[tuple[str, Path]] = []
        docs_dir = sdir / "docs"
        if docs_dir.is_dir():
            documents = [(p.name, p) for p in sorted(docs_dir.iterdir()) if p.is_file()]

        files: list[StoredFile] = []
        for group, harmonized in (("bundles", False), ("harmonized", True)):
            gdir = sdir / group
            if not gdir.is_dir():
                continue
            for bdir in sorted(gdir.iterdir()):
                meta_path = bdir / "meta.json"
                if not meta_path.is_file():
                    continue
                meta = FileMetadata.from_dict(json.loads(meta_path.read_text(encoding="utf-8")))
                summary = meta.summary
                files.append(
                    StoredFile(
                        file_name=meta.file_name,
                        harmonized=harmonized,
                        version=meta.version,
                        deid_applied=meta.deid_applied,
                        n_records=summary.n_records if summary else None,
                        n_variables=summary.n_variables if summary else None,
                        data_path=bdir / "data.csv",
                    )
                )
        return StoredStudy(
            accession=accession,
            instance=instance,
            local_id=manifest.get("local_id", ""),
            documents=documents,
            files=files,
        )

    def build_records(self) -> list[StudyRecord]:
        """Derive catalog records (with variable-name sets) from the store."""
        records: list[StudyRecord] = []
        for accession in self.list_accessions():
            sdir = self.study_dir(accession)
            instance = parse_metadata((sdir / "study.json").read_bytes())
            variables: set[str] = set()
            n_data_files = 0
            for group in ("bundles", "harmonized"):
                gdir = sdir / group
                if not gdir.is_dir():
                    continue
                for bdir in sorted(gdir.iterdir()):
                    dict_path = bdir / "dict.csv"
                    if not dict_path.is_file():
                        continue
                    if group == "bundles":
                        n_data_files += 1
                    d, issues = parse_dictionary(dict_path.read_bytes())
                    if d is not None:
                        variables.update(d.ids())
            records.append(
                StudyRecord(
                    study=StudyMetadata.from_instance(instance),
                    variable_names=frozenset(variables),
                    n_data_files=n_data_files,
                )
            )
        return records

    def save_index(self, records: list[StudyRecord]) -> Path:
        """Persist the catalog snapshot; the swap is atomic."""
        path = self.root / "index.json"
        doc = {"records": [r.to_dict() for r in sorted(records, key=lambda r: r.accession)]}
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        os.replace(tmp, path)
        return path

    def load_index(self) -> list[StudyRecord] | None:
        path = self.root / "index.json"
        if not path.is_file():
            return None
        doc = json.loads(path.read_text(encoding="utf-8"))
        return [StudyRecord.from_dict(r) for r in doc.get("records", [])]

    def records(self) -> list[StudyRecord]:
        cached = self.load_index()
        if cached is not None:
            return cached
        return self.build_records()
