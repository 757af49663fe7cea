"""File bundles: the unit of curation (data table + dictionary + metadata)."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .deid import DeidConfig, DeidError, DeidReport, deidentify_table
from .dictionary import DataDictionary
from .metadata import FileMetadata
from .tabledata import DEFAULT_MISSING, Table, summarize


@dataclass(frozen=True)
class FileBundle:
    table: Table
    dictionary: DataDictionary
    file_metadata: FileMetadata


def deidentify_bundle(
    b: FileBundle,
    cfg: DeidConfig,
    missing_values: frozenset[str] = DEFAULT_MISSING,
) -> tuple[FileBundle, DeidReport]:
    """De-identify a bundle, refusing double application.

    The returned bundle carries a refreshed summary and the deid_applied
    provenance flag; the input bundle is never mutated.
    """
    if b.file_metadata.deid_applied:
        raise DeidError("DEID_ALREADY_APPLIED", f"bundle {b.file_metadata.file_name!r} is already de-identified")
    table, dictionary, report = deidentify_table(b.table, b.dictionary, cfg, missing_values)
    meta = replace(
        b.file_metadata,
        deid_applied=True,
        summary=summarize(table, dictionary, missing_values),
    )
    return FileBundle(table=table, dictionary=dictionary, file_metadata=meta), report
