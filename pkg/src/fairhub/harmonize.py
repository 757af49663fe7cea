"""Codebook-driven harmonization of variables and values.

A codebook declares common data elements (CDEs) grouped into categories; a
mapping set says, per source variable, whether to map it onto a CDE (with a
value translation for categorical pairs), pass it through, or drop it.
Variables without a mapping entry pass through unchanged; dropping is always
explicit. Applying mappings renames mapped columns to their CDE names and
rewrites cell values, preserving row count and order.

Issue codes published by this module:

  CB_BAD_JSON, CB_DUP_CATEGORY, CB_BAD_CATEGORY, CB_DUP_NAME,
  CB_BAD_DATATYPE, CB_BAD_ENUM
  MAP_BAD_JSON, MAP_BAD_ACTION, MAP_MISSING_TARGET, MAP_DUP_SOURCE,
  MAP_DUP_TARGET, MAP_UNKNOWN_SOURCE, MAP_UNKNOWN_CDE, MAP_BAD_SOURCE_CODE,
  MAP_BAD_TARGET_CODE, MAP_VALUE_MAP_NOT_ALLOWED, MAP_VALUE_MAP_REQUIRED,
  MAP_INCOMPATIBLE_TYPES, MAP_NAME_COLLISION,
  MAP_UNCOVERED_VALUE (warning), MAP_UNMAPPED_VARIABLE (warning)

Strict application raises HarmonizeError(MAP_RUNTIME_UNCOVERED) on a cell
value with no translation; lenient application blanks the cell and records
the incident.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import PurePosixPath

from .bundle import FileBundle
from .dictionary import DATATYPES, DataDictionary, EnumerationEntry, VariableSpec
from .issues import Issue, error, sort_issues, warning
from .metadata import FileMetadata
from .tabledata import DEFAULT_MISSING, Table, summarize

MAP = "map"
PASSTHROUGH = "passthrough"
DROP = "drop"
ACTIONS = (MAP, PASSTHROUGH, DROP)


class HarmonizeError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class CDE:
    name: str
    label: str
    category: str
    datatype: str
    enumeration: tuple[EnumerationEntry, ...] = ()

    def enum_codes(self) -> set[str]:
        return {e.code for e in self.enumeration}

    def is_categorical(self) -> bool:
        return self.datatype == "enum"


@dataclass(frozen=True)
class Codebook:
    categories: tuple[str, ...]
    cdes: tuple[CDE, ...]
    version: str = "1"

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {c.name: c for c in self.cdes})

    def get(self, name: str) -> CDE | None:
        return self._by_name.get(name)


@dataclass(frozen=True)
class VariableMapping:
    source_variable: str
    action: str
    target_cde: str | None = None
    value_map: dict[str, str] | None = None


@dataclass(frozen=True)
class MappingSet:
    study: str
    mappings: tuple[VariableMapping, ...]

    def get(self, source: str) -> VariableMapping | None:
        for m in self.mappings:
            if m.source_variable == source:
                return m
        return None


@dataclass
class HarmonizationReport:
    variables_mapped: int = 0
    variables_passthrough: int = 0
    variables_dropped: int = 0
    values_remapped: int = 0
    unmapped_value_incidents: list[Issue] = field(default_factory=list)
    output_variables: int = 0

    def to_dict(self) -> dict:
        return {
            "variables_mapped": self.variables_mapped,
            "variables_passthrough": self.variables_passthrough,
            "variables_dropped": self.variables_dropped,
            "values_remapped": self.values_remapped,
            "unmapped_value_incidents": [i.to_dict() for i in self.unmapped_value_incidents],
            "output_variables": self.output_variables,
        }


def parse_codebook(raw: bytes, source_name: str = "codebook.json") -> tuple[Codebook | None, list[Issue]]:
    issues: list[Issue] = []
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return None, [error("CB_BAD_JSON", f"not valid JSON: {exc}", file=source_name)]
    if not isinstance(doc, dict) or not isinstance(doc.get("categories"), list) or not isinstance(doc.get("cdes"), list):
        return None, [error("CB_BAD_JSON", "codebook needs categories and cdes lists", file=source_name)]

    categories = [str(c) for c in doc["categories"]]
    if len(set(categories)) != len(categories):
        dupes = sorted({c for c in categories if categories.count(c) > 1})
        issues.append(error("CB_DUP_CATEGORY", f"duplicate categories {dupes}", file=source_name))
    cat_set = set(categories)

    cdes: list[CDE] = []
    seen: set[str] = set()
    for i, rec in enumerate(doc["cdes"]):
        name = str(rec.get("name", ""))
        loc = name or f"cdes[{i}]"
        if not name:
            issues.append(error("CB_BAD_JSON", "CDE needs a name", file=source_name, column=loc))
            continue
        if name in seen:
            issues.append(error("CB_DUP_NAME", f"CDE {name!r} already declared", file=source_name, column=name))
            continue
        seen.add(name)
        category = str(rec.get("category", ""))
        if category not in cat_set:
            issues.append(error("CB_BAD_CATEGORY", f"CDE {name!r} category {category!r} not declared", file=source_name, column=name))
            continue
        datatype = str(rec.get("datatype", ""))
        if datatype not in DATATYPES:
            issues.append(error("CB_BAD_DATATYPE", f"CDE {name!r} datatype {datatype!r} unknown", file=source_name, column=name))
            continue
        entries: list[EnumerationEntry] = []
        bad_enum = False
        for e in rec.get("enumeration", []):
            code, label = str(e.get("code", "")), str(e.get("label", ""))
            if not code or not label:
                issues.append(error("CB_BAD_ENUM", f"CDE {name!r} enumeration entry needs code and label", file=source_name, column=name))
                bad_enum = True
                break
            entries.append(EnumerationEntry(code=code, label=label))
        if bad_enum:
            continue
        codes = [e.code for e in entries]
        if len(set(codes)) != len(codes):
            issues.append(error("CB_BAD_ENUM", f"CDE {name!r} has duplicate enumeration codes", file=source_name, column=name))
            continue
        if datatype == "enum" and not entries:
            issues.append(error("CB_BAD_ENUM", f"categorical CDE {name!r} needs an enumeration", file=source_name, column=name))
            continue
        cdes.append(CDE(name=name, label=str(rec.get("label", name)), category=category, datatype=datatype, enumeration=tuple(entries)))

    if issues:
        return None, sort_issues(issues)
    return Codebook(categories=tuple(categories), cdes=tuple(cdes), version=str(doc.get("version", "1"))), []


def serialize_codebook(cb: Codebook) -> bytes:
    doc = {
        "version": cb.version,
        "categories": list(cb.categories),
        "cdes": [
            {
                "name": c.name,
                "label": c.label,
                "category": c.category,
                "datatype": c.datatype,
                **({"enumeration": [{"code": e.code, "label": e.label} for e in c.enumeration]} if c.enumeration else {}),
            }
            for c in cb.cdes
        ],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def parse_mapping_set(raw: bytes, source_name: str = "mapping.json") -> tuple[MappingSet | None, list[Issue]]:
    issues: list[Issue] = []
    try:
        doc = json.loads(raw.decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return None, [error("MAP_BAD_JSON", f"not valid JSON: {exc}", file=source_name)]
    if not isinstance(doc, dict) or not isinstance(doc.get("mappings"), list):
        return None, [error("MAP_BAD_JSON", "mapping set needs a mappings list", file=source_name)]

    mappings: list[VariableMapping] = []
    sources: set[str] = set()
    targets: set[str] = set()
    for i, rec in enumerate(doc["mappings"]):
        source = str(rec.get("source", ""))
        loc = source or f"mappings[{i}]"
        if not source:
            issues.append(error("MAP_BAD_JSON", "mapping needs a source variable", file=source_name, column=loc))
            continue
        if source in sources:
            issues.append(error("MAP_DUP_SOURCE", f"source {source!r} mapped twice", file=source_name, column=source))
            continue
        sources.add(source)
        action = str(rec.get("action", MAP))
        if action not in ACTIONS:
            issues.append(error("MAP_BAD_ACTION", f"action {action!r} not one of {ACTIONS}", file=source_name, column=source))
            continue
        target = rec.get("target")
        value_map = rec.get("value_map")
        if action == MAP:
            if not target:
                issues.append(error("MAP_MISSING_TARGET", f"mapping for {source!r} needs a target CDE", file=source_name, column=source))
                continue
            if target in targets:
                issues.append(error("MAP_DUP_TARGET", f"target CDE {target!r} mapped twice", file=source_name, column=source))
                continue
            targets.add(target)
        mappings.append(
            VariableMapping(
                source_variable=source,
                action=action,
                target_cde=str(target) if target else None,
                value_map={str(k): str(v) for k, v in value_map.items()} if isinstance(value_map, dict) else None,
            )
        )
    if issues:
        return None, sort_issues(issues)
    return MappingSet(study=str(doc.get("study", "")), mappings=tuple(mappings)), []


def serialize_mapping_set(m: MappingSet) -> bytes:
    doc = {
        "study": m.study,
        "mappings": [
            {
                "source": v.source_variable,
                "action": v.action,
                **({"target": v.target_cde} if v.target_cde else {}),
                **({"value_map": dict(sorted(v.value_map.items()))} if v.value_map else {}),
            }
            for v in m.mappings
        ],
    }
    return (json.dumps(doc, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def mapping_set_from_csv(raw: bytes, study: str = "", source_name: str = "mapping.csv") -> tuple[MappingSet | None, list[Issue]]:
    """Import mappings from a spreadsheet-style CSV with the header
    Source,Action,Target,SourceCode,TargetCode (one row per value pair)."""
    import csv as _csv
    import io as _io

    issues: list[Issue] = []
    rows = list(_csv.reader(_io.StringIO(raw.decode("utf-8"))))
    if not rows or rows[0] != ["Source", "Action", "Target", "SourceCode", "TargetCode"]:
        return None, [error("MAP_BAD_JSON", "CSV header must be Source,Action,Target,SourceCode,TargetCode", file=source_name, row=1)]
    order: list[str] = []
    actions: dict[str, str] = {}
    targets: dict[str, str | None] = {}
    value_maps: dict[str, dict[str, str]] = {}
    for idx, cells in enumerate(rows[1:], start=2):
        if len(cells) != 5:
            issues.append(error("MAP_BAD_JSON", f"expected 5 cells, got {len(cells)}", file=source_name, row=idx))
            continue
        source, action, target, s_code, t_code = (c.strip() for c in cells)
        if source not in actions:
            order.append(source)
            actions[source] = action
            targets[source] = target or None
        if s_code:
            value_maps.setdefault(source, {})[s_code] = t_code
    if issues:
        return None, sort_issues(issues)
    doc = {
        "study": study,
        "mappings": [
            {
                "source": s,
                "action": actions[s] or MAP,
                **({"target": targets[s]} if targets[s] else {}),
                **({"value_map": value_maps[s]} if s in value_maps else {}),
            }
            for s in order
        ],
    }
    return parse_mapping_set(json.dumps(doc).encode("utf-8"), source_name)


def _effective_actions(d: DataDictionary, m: MappingSet) -> dict[str, VariableMapping]:
    """Per dictionary variable: its mapping, defaulting to passthrough."""
    out: dict[str, VariableMapping] = {}
    for v in d.variables:
        mapping = m.get(v.id)
        if mapping is None:
            mapping = VariableMapping(source_variable=v.id, action=PASSTHROUGH)
        out[v.id] = mapping
    return out


def validate_mappings(d: DataDictionary, cb: Codebook, m: MappingSet, source_name: str = "mapping.json") -> list[Issue]:
    """Cross-check a mapping set against a dictionary and codebook."""
    issues: list[Issue] = []
    declared = {v.id for v in d.variables}

    for mapping in m.mappings:
        src = mapping.source_variable
        if src not in declared:
            issues.append(error("MAP_UNKNOWN_SOURCE", f"source variable {src!r} not in dictionary", file=source_name, column=src))
            continue
        if mapping.action != MAP:
            if mapping.value_map:
                issues.append(error("MAP_VALUE_MAP_NOT_ALLOWED", f"{src!r}: value_map only allowed on action=map", file=source_name, column=src))
            continue
        var = d.get(src)
        cde = cb.get(mapping.target_cde or "")
        if cde is None:
            issues.append(error("MAP_UNKNOWN_CDE", f"{src!r} targets unknown CDE {mapping.target_cde!r}", file=source_name, column=src))
            continue
        source_categorical = var.datatype == "enum"
        if source_categorical and cde.is_categorical():
            if not mapping.value_map:
                issues.append(error("MAP_VALUE_MAP_REQUIRED", f"{src!r} -> {cde.name!r} needs a value_map", file=source_name, column=src))
            else:
                source_codes = var.enum_codes()
                target_codes = cde.enum_codes()
                for s_code, t_code in sorted(mapping.value_map.items()):
                    if s_code not in source_codes:
                        issues.append(error("MAP_BAD_SOURCE_CODE", f"{src!r}: code {s_code!r} not in source enumeration", file=source_name, column=src))
                    if t_code not in target_codes:
                        issues.append(error("MAP_BAD_TARGET_CODE", f"{src!r}: code {t_code!r} not in {cde.name!r} enumeration", file=source_name, column=src))
                for s_code in sorted(var.enum_codes() - set(mapping.value_map)):
                    issues.append(warning("MAP_UNCOVERED_VALUE", f"{src!r}: declared code {s_code!r} has no target", file=source_name, column=src))
        elif source_categorical != cde.is_categorical():
            issues.append(
                error("MAP_INCOMPATIBLE_TYPES", f"{src!r} ({var.datatype}) and {cde.name!r} ({cde.datatype}) are not both categorical", file=source_name, column=src)
            )
        else:
            if mapping.value_map:
                issues.append(error("MAP_VALUE_MAP_NOT_ALLOWED", f"{src!r}: value_map needs categorical source and target", file=source_name, column=src))
            compatible = var.datatype == cde.datatype or (var.datatype == "integer" and cde.datatype == "decimal")
            if not compatible:
                issues.append(error("MAP_INCOMPATIBLE_TYPES", f"{src!r} ({var.datatype}) incompatible with {cde.name!r} ({cde.datatype})", file=source_name, column=src))

    # coverage report + output name collisions
    actions = _effective_actions(d, m)
    mapped_names = {am.target_cde for am in actions.values() if am.action == MAP and am.target_cde and cb.get(am.target_cde)}
    for v in d.variables:
        am = actions[v.id]
        if am.action == PASSTHROUGH:
            if m.get(v.id) is None:
                issues.append(warning("MAP_UNMAPPED_VARIABLE", f"variable {v.id!r} has no mapping; passing through", file=source_name, column=v.id))
            if v.id in mapped_names:
                issues.append(error("MAP_NAME_COLLISION", f"passthrough variable {v.id!r} collides with a mapped CDE name", file=source_name, column=v.id))
    return sort_issues(issues)


def harmonized_dictionary(d: DataDictionary, cb: Codebook, m: MappingSet) -> DataDictionary:
    """Project a source dictionary through a mapping set.

    Mapped variables adopt the CDE's name, label, datatype, and enumeration
    (keeping the source's required flag); passthrough specs are copied;
    dropped variables disappear.
    """
    actions = _effective_actions(d, m)
    out: list[VariableSpec] = []
    for v in d.variables:
        am = actions[v.id]
        if am.action == DROP:
            continue
        if am.action == MAP:
            cde = cb.get(am.target_cde or "")
            if cde is None:
                raise HarmonizeError("MAP_UNKNOWN_CDE", f"unknown CDE {am.target_cde!r}")
            out.append(
                VariableSpec(
                    id=cde.name,
                    label=cde.label,
                    datatype=cde.datatype,
                    units=None,
                    enumeration=cde.enumeration,
                    required=v.required,
                )
            )
        else:
            out.append(v)
    return DataDictionary(variables=tuple(out), source_name=d.source_name)


def apply_mappings(
    t: Table,
    d: DataDictionary,
    cb: Codebook,
    m: MappingSet,
    strict: bool = True,
    missing_values: frozenset[str] = DEFAULT_MISSING,
) -> tuple[Table, DataDictionary, HarmonizationReport]:
    """Transform a table through a validated mapping set.

    Row count and order never change. In strict mode a cell value without a
    translation raises HarmonizeError; in lenient mode it becomes missing
    and is recorded in the report.
    """
    actions = _effective_actions(d, m)
    report = HarmonizationReport()
    for am in actions.values():
        if am.action == MAP:
            report.variables_mapped += 1
        elif am.action == DROP:
            report.variables_dropped += 1
        else:
            report.variables_passthrough += 1

    keep_indices: list[int] = []
    new_header: list[str] = []
    translations: dict[int, dict[str, str]] = {}
    for ci, col in enumerate(t.header):
        am = actions.get(col)
        if am is None:  # undeclared columns pass through untouched
            keep_indices.append(ci)
            new_header.append(col)
            continue
        if am.action == DROP:
            continue
        keep_indices.append(ci)
        if am.action == MAP:
            new_header.append(am.target_cde or col)
            if am.value_map is not None:
                translations[ci] = am.value_map
        else:
            new_header.append(col)

    src = t.source_name
    columns = t.columns()
    known = t.known_distinct()
    distinct_seed: dict[int, frozenset] = {}
    out_columns = []
    for out_i, ci in enumerate(keep_indices):
        if ci not in translations and ci in known:
            distinct_seed[out_i] = known[ci]
        col = columns[ci]
        vmap = translations.get(ci)
        if vmap is None:
            out_columns.append(col)
            continue
        distinct = t.distinct(ci)
        uncovered = {v for v in distinct if v not in missing_values and v not in vmap}
        if uncovered and strict:
            for ri, v in enumerate(col):
                if v in uncovered:
                    raise HarmonizeError(
                        "MAP_RUNTIME_UNCOVERED",
                        f"value {v!r} in column {t.header[ci]!r} row {ri + 2} has no translation",
                    )
        full = {v: vmap[v] for v in distinct if v in vmap}
        full.update({v: v for v in distinct if v in missing_values})
        if uncovered:
            for ri, v in enumerate(col):
                if v in uncovered:
                    report.unmapped_value_incidents.append(
                        warning("MAP_RUNTIME_UNCOVERED", "untranslatable value blanked", file=src, row=ri + 2, column=t.header[ci])
                    )
            full.update({v: "" for v in uncovered})
        report.values_remapped += sum(col.count(v) for v in distinct if v in vmap and v not in missing_values)
        out_columns.append([full[v] for v in col])

    new_table = Table.from_columns(new_header, out_columns, source_name=src, distinct_seed=distinct_seed)
    new_dict = harmonized_dictionary(d, cb, m)
    report.output_variables = len(new_header)
    return new_table, new_dict, report


def harmonized_file_name(file_name: str) -> str:
    p = PurePosixPath(file_name)
    return f"{p.stem}_harmonized{p.suffix}"


def both_versions(
    b: FileBundle,
    cb: Codebook,
    m: MappingSet,
    strict: bool = True,
    missing_values: frozenset[str] = DEFAULT_MISSING,
) -> tuple[FileBundle, FileBundle, HarmonizationReport]:
    """Return (original, harmonized) bundles; the original is untouched."""
    table, dictionary, report = apply_mappings(b.table, b.dictionary, cb, m, strict, missing_values)
    name = harmonized_file_name(b.file_metadata.file_name)
    reuse = None
    if b.file_metadata.summary is not None:
        reuse = (b.table, b.dictionary, b.file_metadata.summary)
    meta = FileMetadata(
        file_name=name,
        version=b.file_metadata.version,
        creators=b.file_metadata.creators,
        subjects=b.file_metadata.subjects,
        summary=summarize(table, dictionary, missing_values, reuse=reuse),
        deid_applied=b.file_metadata.deid_applied,
        harmonized=True,
    )
    table = table.renamed(name)
    harmonized = FileBundle(table=table, dictionary=replace(dictionary, source_name=harmonized_file_name(b.dictionary.source_name)), file_metadata=meta)
    return b, harmonized, report
