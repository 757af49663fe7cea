"""fairhub command-line interface.

Exit codes: validation commands exit 0 when no error-severity issues were
found and 1 otherwise; `scan` exits 1 on any high-confidence finding;
`pipeline run` exits 0 accepted, 1 returned-to-contributor, 2 usage/config
error, 3 I/O failure. Secrets only enter through FAIRHUB_DEID_KEY.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import __version__, data_path
from .deid import DeidConfig, DeidError, deidentify_table, load_key_hex
from .dictionary import parse_dictionary, serialize_dictionary
from .harmonize import (
    HarmonizeError,
    apply_mappings,
    parse_codebook,
    parse_mapping_set,
    validate_mappings,
)
from .issues import Issue, has_errors
from .metadata import load_term_registry, parse_metadata, parse_template, validate_metadata
from .piiscan import builtin_detectors, has_high_confidence, scan_table
from .pipeline.config import KEY_ENV_VAR, ConfigError, PipelineConfig
from .pipeline.run import ACCEPTED, run_pipeline_from_path
from .pipeline.server import serve as serve_api
from .pipeline.store import StoreError, StudyStore
from .pipeline.synth import SynthSpec, generate_corpus
from .tabledata import parse_table, serialize_table, summarize, validate_against_dictionary
from .catalog import CatalogError, Query, build_index, facet_histogram_csv, facet_histogram, search as catalog_search


def _print_issues(issues: list[Issue], as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps([i.to_dict() for i in issues], indent=2))
    else:
        for i in issues:
            click.echo(i.render(), err=True)


def _missing_set(missing: tuple[str, ...]) -> frozenset[str]:
    return frozenset({"", *missing})


@click.group()
@click.version_option(__version__)
def main():
    """Desk-scale study curation: validate, scan, de-identify, harmonize,
    store, and search study file bundles."""


# --- dict ---------------------------------------------------------------


@main.group("dict")
def dict_group():
    """Data dictionary commands."""


@dict_group.command("validate")
@click.argument("path", type=click.Path(exists=True, path_type=Path))
@click.option("--json", "as_json", is_flag=True, help="Emit issues as JSON.")
def dict_validate(path: Path, as_json: bool):
    """Validate a data dictionary CSV."""
    d, issues = parse_dictionary(path.read_bytes(), source_name=path.name)
    _print_issues(issues, as_json)
    if d is not None and not as_json:
        click.echo(f"{path.name}: {len(d.variables)} variable(s), OK", err=True)
    sys.exit(1 if has_errors(issues) else 0)


# --- bundle -------------------------------------------------------------


@main.group("bundle")
def bundle_group():
    """File bundle commands."""


@bundle_group.command("validate")
@click.option("--data", "data_path_", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--missing", multiple=True, help="Extra missing-value sentinel (repeatable).")
@click.option("--json", "as_json", is_flag=True)
def bundle_validate(data_path_: Path, dict_path: Path, missing: tuple[str, ...], as_json: bool):
    """Check a data file against its dictionary."""
    table, t_issues = parse_table(data_path_.read_bytes(), source_name=data_path_.name)
    d, d_issues = parse_dictionary(dict_path.read_bytes(), source_name=dict_path.name)
    issues = t_issues + d_issues
    if table is not None and d is not None:
        issues = issues + validate_against_dictionary(table, d, _missing_set(missing))
    _print_issues(issues, as_json)
    if not as_json and table is not None and d is not None:
        stats = summarize(table, d, _missing_set(missing))
        click.echo(f"{data_path_.name}: {stats.n_records} record(s) x {stats.n_variables} variable(s)", err=True)
    sys.exit(1 if has_errors(issues) else 0)


# --- scan ---------------------------------------------------------------


@main.command("scan")
@click.option("--data", "data_path_", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--json", "as_json", is_flag=True)
def scan_command(data_path_: Path, as_json: bool):
    """Scan a data file for PII/PHI patterns. Exits 1 on high confidence."""
    table, issues = parse_table(data_path_.read_bytes(), source_name=data_path_.name)
    if table is None:
        _print_issues(issues, as_json)
        sys.exit(2)
    findings = scan_table(table, builtin_detectors())
    if as_json:
        click.echo(json.dumps([f.to_dict() for f in findings], indent=2))
    else:
        for f in findings:
            click.echo(f"{f.confidence.upper()} {f.detector_id} row {f.row} column {f.column}: {f.excerpt}", err=True)
        click.echo(f"{data_path_.name}: {len(findings)} finding(s)", err=True)
    sys.exit(1 if has_high_confidence(findings) else 0)


# --- deid ---------------------------------------------------------------


@main.command("deid")
@click.option("--data", "data_path_", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=Path("deid_out"))
def deid_command(data_path_: Path, dict_path: Path, config_path: Path, out_dir: Path):
    """De-identify a bundle; writes data.csv, dict.csv, report.json."""
    hex_key = os.environ.get(KEY_ENV_VAR, "")
    if not hex_key:
        click.echo(f"error: {KEY_ENV_VAR} must be set (hex key, >= 16 bytes)", err=True)
        sys.exit(2)
    try:
        key = load_key_hex(hex_key)
        cfg = DeidConfig.from_dict(json.loads(config_path.read_text(encoding="utf-8")), key)
    except (DeidError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    table, t_issues = parse_table(data_path_.read_bytes(), source_name=data_path_.name)
    d, d_issues = parse_dictionary(dict_path.read_bytes(), source_name=dict_path.name)
    if table is None or d is None:
        _print_issues(t_issues + d_issues, False)
        sys.exit(1)
    try:
        new_table, new_dict, report = deidentify_table(table, d, cfg)
    except DeidError as exc:
        click.echo(f"error: {exc.code}: {exc}", err=True)
        sys.exit(1)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "data.csv").write_bytes(serialize_table(new_table))
    (out_dir / "dict.csv").write_bytes(serialize_dictionary(new_dict))
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"wrote de-identified bundle to {out_dir}", err=True)


# --- harmonize ----------------------------------------------------------


@main.command("harmonize")
@click.option("--data", "data_path_", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--codebook", "codebook_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--map", "map_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
@click.option("--lenient", is_flag=True, help="Blank untranslatable values instead of failing.")
def harmonize_command(data_path_: Path, dict_path: Path, codebook_path: Path, map_path: Path, out_dir: Path, lenient: bool):
    """Apply codebook mappings; writes harmonized data.csv, dict.csv, report.json."""
    table, t_issues = parse_table(data_path_.read_bytes(), source_name=data_path_.name)
    d, d_issues = parse_dictionary(dict_path.read_bytes(), source_name=dict_path.name)
    cb, cb_issues = parse_codebook(codebook_path.read_bytes(), source_name=codebook_path.name)
    m, m_issues = parse_mapping_set(map_path.read_bytes(), source_name=map_path.name)
    issues = t_issues + d_issues + cb_issues + m_issues
    if table is None or d is None or cb is None or m is None:
        _print_issues(issues, False)
        sys.exit(1)
    issues = validate_mappings(d, cb, m, source_name=map_path.name)
    _print_issues(issues, False)
    if has_errors(issues):
        sys.exit(1)
    try:
        new_table, new_dict, report = apply_mappings(table, d, cb, m, strict=not lenient)
    except HarmonizeError as exc:
        click.echo(f"error: {exc.code}: {exc}", err=True)
        sys.exit(1)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "data.csv").write_bytes(serialize_table(new_table))
    (out_dir / "dict.csv").write_bytes(serialize_dictionary(new_dict))
    (out_dir / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    click.echo(f"wrote harmonized bundle to {out_dir}", err=True)


# --- metadata -----------------------------------------------------------


@main.group("metadata")
def metadata_group():
    """Metadata commands."""


@metadata_group.command("validate")
@click.option("--instance", "instance_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--template", "template_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--terms", "terms_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--json", "as_json", is_flag=True)
def metadata_validate(instance_path: Path, template_path: Path | None, terms_path: Path | None, as_json: bool):
    """Validate a metadata instance against a template and term registry.

    Defaults to the shipped study template and term registry."""
    tpl_bytes = template_path.read_bytes() if template_path else data_path("study_template.json").read_bytes()
    terms_bytes = terms_path.read_bytes() if terms_path else data_path("terms.jsonl").read_bytes()
    tpl, tpl_issues = parse_template(tpl_bytes)
    reg, reg_issues = load_term_registry(terms_bytes)
    if tpl is None or reg is None:
        _print_issues(tpl_issues + reg_issues, as_json)
        sys.exit(2)
    instance = parse_metadata(instance_path.read_bytes())
    issues = validate_metadata(instance, tpl, reg, source_name=instance_path.name)
    _print_issues(issues, as_json)
    sys.exit(1 if has_errors(issues) else 0)


# --- catalog ------------------------------------------------------------


@main.group("catalog")
def catalog_group():
    """Catalog commands over a study store."""


@catalog_group.command("index")
@click.argument("store_root", type=click.Path(exists=True, path_type=Path))
def catalog_index(store_root: Path):
    """Rebuild the catalog snapshot (index.json) from the store."""
    store = StudyStore(store_root)
    records = store.build_records()
    path = store.save_index(records)
    click.echo(f"indexed {len(records)} study(ies) -> {path}", err=True)


@catalog_group.command("search")
@click.option("--store", "store_root", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--text", default=None)
@click.option("--filter", "filters", multiple=True, help="field=value (repeatable)")
@click.option("--sort", default="title")
@click.option("--order", default="asc", type=click.Choice(["asc", "desc"]))
@click.option("--offset", default=0)
@click.option("--limit", default=50)
@click.option("--json", "as_json", is_flag=True)
def catalog_search_cmd(store_root: Path, text, filters, sort, order, offset, limit, as_json):
    """Search the catalog."""
    idx = build_index(StudyStore(store_root).records())
    parsed = []
    for f in filters:
        fieldname, _, value = f.partition("=")
        parsed.append((fieldname, value))
    try:
        total, page = catalog_search(idx, Query(text=text, filters=tuple(parsed), sort_field=sort, sort_dir=order, offset=offset, limit=limit))
    except (CatalogError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if as_json:
        click.echo(json.dumps({"total": total, "studies": [r.to_dict() for r in page]}, indent=2))
    else:
        click.echo(f"{total} match(es)", err=True)
        for r in page:
            s = r.study
            click.echo(f"{s.accession}  {s.program:10s} {s.nih_institute:6s} {s.estimated_cohort_size:>8d}  {s.title}")
    sys.exit(0)


@catalog_group.command("facets")
@click.option("--store", "store_root", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--field", "fieldname", required=True)
@click.option("--stack-by", "stack_by", default=None)
@click.option("--csv", "as_csv", is_flag=True)
def catalog_facets(store_root: Path, fieldname: str, stack_by: str | None, as_csv: bool):
    """Facet value counts, optionally stacked (e.g. --stack-by program)."""
    idx = build_index(StudyStore(store_root).records())
    try:
        if as_csv:
            click.echo(facet_histogram_csv(idx, fieldname, stack_by), nl=False)
        else:
            for value, counts in facet_histogram(idx, fieldname, stack_by):
                click.echo(f"{value}: {counts}")
    except CatalogError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


# --- pipeline -----------------------------------------------------------


@main.group("pipeline")
def pipeline_group():
    """End-to-end pipeline commands."""


@pipeline_group.command("run")
@click.argument("study_dir", type=click.Path(exists=True, path_type=Path))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--report-out", type=click.Path(path_type=Path), default=None, help="Write the JSON feedback report here.")
def pipeline_run(study_dir: Path, config_path: Path, report_out: Path | None):
    """Run scan, deid, validate, metadata, harmonize, store, and index."""
    try:
        cfg = PipelineConfig.load(config_path)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    try:
        report = run_pipeline_from_path(study_dir, cfg)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)
    except (StoreError, OSError) as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(3)
    click.echo(report.render_human(), err=True, nl=False)
    payload = report.to_json_bytes()
    if report_out is not None:
        report_out.write_bytes(payload)
    else:
        click.echo(payload.decode("utf-8"), nl=False)
    sys.exit(0 if report.verdict == ACCEPTED else 1)


# --- synth --------------------------------------------------------------


@main.command("synth")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--out", "out_dir", required=True, type=click.Path(path_type=Path))
def synth_command(spec_path: Path, out_dir: Path):
    """Generate a deterministic synthetic corpus with a defect ledger."""
    try:
        spec = SynthSpec.from_dict(json.loads(spec_path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValueError, KeyError) as exc:
        click.echo(f"bad spec: {exc}", err=True)
        sys.exit(2)
    ledger = generate_corpus(spec, out_dir)
    click.echo(f"generated {spec.n_studies} study(ies), {len(ledger['defects'])} injected defect(s) -> {out_dir}", err=True)


# --- serve --------------------------------------------------------------


@main.command("serve")
@click.option("--store", "store_root", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--bind", default="127.0.0.1:8000", help="host:port")
@click.option("--study-template", type=click.Path(exists=True, path_type=Path), default=None)
def serve_command(store_root: Path, bind: str, study_template: Path | None):
    """Serve the read-only HTTP API over a store."""
    host, _, port = bind.partition(":")
    serve_api(store_root, host=host or "127.0.0.1", port=int(port or 8000), study_template_path=study_template)


if __name__ == "__main__":
    main()
