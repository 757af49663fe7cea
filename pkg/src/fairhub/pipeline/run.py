"""Pipeline orchestration and the feedback report.

Stage order: scan -> deid -> validate -> metadata -> harmonize -> store ->
index. A stage with error-severity issues stops everything after it and the
verdict becomes returned-to-contributor; warnings never gate. Reports render
to stable JSON (no timestamps), so identical inputs, config, and key yield
byte-identical reports.

PII findings surface as issues coded PII_<DETECTOR>: error severity for
high-confidence detectors, warning for the rest. After a transform-mode
de-identification the bundles are re-scanned and any high-confidence finding
that persists gates the run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..bundle import FileBundle, deidentify_bundle
from ..deid import DeidError
from ..harmonize import HarmonizeError, both_versions, parse_codebook, parse_mapping_set, validate_mappings
from ..issues import ERROR, WARNING, Issue, error, has_errors, sort_issues, warning
from ..metadata import parse_template, load_term_registry, validate_metadata
from ..piiscan import Finding, builtin_detectors, scan_table
from ..tabledata import validate_against_dictionary
from .config import DEID_VERIFY, ConfigError, PipelineConfig
from .ingest import StagedStudy, ingest
from .store import StudyStore

ACCEPTED = "accepted"
RETURNED = "returned-to-contributor"

GATING_STAGES = ("ingest", "scan", "deid", "validate", "metadata", "harmonize")


@dataclass
class StageResult:
    stage: str
    ran: bool = False
    issues: list[Issue] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def error_count(self) -> int:
        return sum(1 for i in self.issues if i.severity == ERROR)

    @property
    def warning_count(self) -> int:
        return sum(1 for i in self.issues if i.severity == WARNING)

    def to_dict(self) -> dict:
        return {
            "stage": self.stage,
            "ran": self.ran,
            "errors": self.error_count,
            "warnings": self.warning_count,
            "issues": [i.to_dict() for i in self.issues],
            **({"details": self.details} if self.details else {}),
        }


@dataclass
class FeedbackReport:
    accession: str
    verdict: str
    stages: list[StageResult]
    local_id: str | None = None

    def stage(self, name: str) -> StageResult | None:
        for s in self.stages:
            if s.stage == name:
                return s
        return None

    def all_issues(self) -> list[Issue]:
        out: list[Issue] = []
        for s in self.stages:
            out.extend(s.issues)
        return out

    def to_dict(self) -> dict:
        return {
            "accession": self.accession,
            "verdict": self.verdict,
            "local_id": self.local_id,
            "totals": {
                "errors": sum(s.error_count for s in self.stages),
                "warnings": sum(s.warning_count for s in self.stages),
            },
            "stages": [s.to_dict() for s in self.stages],
        }

    def to_json_bytes(self) -> bytes:
        return (json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode("utf-8")

    def render_human(self) -> str:
        lines = [f"study {self.accession}: {self.verdict}"]
        if self.local_id:
            lines.append(f"  stored as {self.local_id}")
        for s in self.stages:
            status = "ran" if s.ran else "skipped"
            lines.append(f"  [{s.stage}] {status}: {s.error_count} error(s), {s.warning_count} warning(s)")
            for i in s.issues:
                lines.append(f"    {i.render()}")
        return "\n".join(lines) + "\n"


def _findings_to_issues(findings: list[Finding], file: str) -> list[Issue]:
    out = []
    for f in findings:
        code = f"PII_{f.detector_id.upper()}"
        msg = f"{f.detector_id} detector matched {f.excerpt!r} ({f.confidence} confidence)"
        if f.confidence == "high":
            out.append(error(code, msg, file=file, row=f.row, column=f.column))
        else:
            out.append(warning(code, msg, file=file, row=f.row, column=f.column))
    return out


class _Resources:
    def __init__(self, cfg: PipelineConfig):
        codebook, cb_issues = parse_codebook(cfg.codebook_path.read_bytes(), source_name=cfg.codebook_path.name)
        if codebook is None:
            raise ConfigError(f"codebook invalid: {[i.render() for i in cb_issues]}")
        mapping, m_issues = parse_mapping_set(cfg.mapping_path.read_bytes(), source_name=cfg.mapping_path.name)
        if mapping is None:
            raise ConfigError(f"mapping set invalid: {[i.render() for i in m_issues]}")
        study_template, t_issues = parse_template(cfg.study_template_path.read_bytes(), source_name=cfg.study_template_path.name)
        if study_template is None:
            raise ConfigError(f"study template invalid: {[i.render() for i in t_issues]}")
        file_template, f_issues = parse_template(cfg.file_template_path.read_bytes(), source_name=cfg.file_template_path.name)
        if file_template is None:
            raise ConfigError(f"file template invalid: {[i.render() for i in f_issues]}")
        registry, r_issues = load_term_registry(cfg.terms_path.read_bytes(), source_name=cfg.terms_path.name)
        if registry is None:
            raise ConfigError(f"term registry invalid: {[i.render() for i in r_issues]}")
        self.codebook = codebook
        self.mapping = mapping
        self.study_template = study_template
        self.file_template = file_template
        self.registry = registry


def run_pipeline(staged: StagedStudy, cfg: PipelineConfig, ingest_issues: list[Issue] | None = None) -> FeedbackReport:
    """Run all enabled stages over a staged study.

    Raises ConfigError for unusable resources and lets store I/O errors
    propagate; everything data-related lands in the report instead.
    """
    res = _Resources(cfg)
    detectors = builtin_detectors()
    stages: list[StageResult] = []
    report = FeedbackReport(accession=staged.accession, verdict=ACCEPTED, stages=stages)

    ingest_stage = StageResult("ingest", ran=True, issues=sort_issues(list(ingest_issues or [])))
    stages.append(ingest_stage)
    gated = has_errors(ingest_stage.issues)

    bundles = list(staged.bundles)

    # scan
    scan_stage = StageResult("scan")
    stages.append(scan_stage)
    if not gated and cfg.stage_enabled("scan"):
        scan_stage.ran = True
        all_findings = {}
        issues: list[Issue] = []
        for b in bundles:
            findings = scan_table(b.table, detectors)
            if findings:
                all_findings[b.file_metadata.file_name] = [f.to_dict() for f in findings]
            issues.extend(_findings_to_issues(findings, b.file_metadata.file_name))
        scan_stage.issues = sort_issues(issues)
        if all_findings:
            scan_stage.details["findings"] = all_findings
        gated = gated or has_errors(scan_stage.issues)

    # deid
    deid_stage = StageResult("deid")
    stages.append(deid_stage)
    if not gated and cfg.stage_enabled("deid"):
        deid_stage.ran = True
        issues = []
        deid_reports = {}
        if cfg.deid_mode == DEID_VERIFY:
            for b in bundles:
                if not b.file_metadata.deid_applied:
                    issues.append(
                        error("DEID_NOT_APPLIED", "bundle arrived without the deid_applied flag in verify mode", file=b.file_metadata.file_name)
                    )
        else:
            assert cfg.deid_config is not None
            out_bundles = []
            for b in bundles:
                name = b.file_metadata.file_name
                if b.file_metadata.deid_applied:
                    issues.append(warning("DEID_ALREADY_APPLIED", "bundle already de-identified; transform skipped", file=name))
                    out_bundles.append(b)
                    continue
                bundle_cfg = replace(cfg.deid_config, study_key=staged.accession).restrict_to(set(b.table.header))
                try:
                    new_bundle, deid_report = deidentify_bundle(b, bundle_cfg, cfg.missing_values)
                except DeidError as exc:
                    issues.append(error(exc.code, str(exc), file=name))
                    out_bundles.append(b)
                    continue
                for w in deid_report.warnings:
                    issues.append(replace(w, file=name))
                deid_reports[name] = deid_report.to_dict()
                out_bundles.append(new_bundle)
            bundles = out_bundles
            staged.bundles = out_bundles  # drop pre-deid tables; the staged study is consumed by the run
            # high-confidence findings must not survive the transform
            for b in bundles:
                persisting = [f for f in scan_table(b.table, detectors) if f.confidence == "high"]
                issues.extend(_findings_to_issues(persisting, b.file_metadata.file_name))
        deid_stage.issues = sort_issues(issues)
        if deid_reports:
            deid_stage.details["reports"] = deid_reports
        gated = gated or has_errors(deid_stage.issues)

    # validate (bundle conformance)
    validate_stage = StageResult("validate")
    stages.append(validate_stage)
    if not gated and cfg.stage_enabled("validate"):
        validate_stage.ran = True
        issues = []
        for b in bundles:
            for i in validate_against_dictionary(b.table, b.dictionary, cfg.missing_values):
                issues.append(replace(i, file=b.file_metadata.file_name))
        validate_stage.issues = sort_issues(issues)
        gated = gated or has_errors(validate_stage.issues)

    # metadata
    metadata_stage = StageResult("metadata")
    stages.append(metadata_stage)
    if not gated and cfg.stage_enabled("metadata"):
        metadata_stage.ran = True
        issues = list(validate_metadata(staged.study_instance, res.study_template, res.registry, source_name="study.json"))
        last_version: dict[str, int] = {}
        for b in bundles:
            meta = b.file_metadata
            instance = {
                "file_name": meta.file_name,
                "version": meta.version,
                "subjects": list(meta.subjects),
                "deid_applied": meta.deid_applied,
                "harmonized": meta.harmonized,
            }
            issues.extend(validate_metadata(instance, res.file_template, res.registry, source_name=meta.file_name))
            for c in meta.creators:
                if c.type not in ("person", "organization") or not c.name:
                    issues.append(error("META_BAD_KIND", "creator must be a named person or organization", file=meta.file_name, column="creators"))
            prev = last_version.get(meta.file_name)
            if prev is not None and meta.version <= prev:
                issues.append(
                    error("META_VERSION_ORDER", f"version {meta.version} does not increase over {prev}", file=meta.file_name, column="version")
                )
            last_version[meta.file_name] = meta.version
        metadata_stage.issues = sort_issues(issues)
        gated = gated or has_errors(metadata_stage.issues)

    # harmonize
    harmonized: list[FileBundle] = []
    harmonize_stage = StageResult("harmonize")
    stages.append(harmonize_stage)
    if not gated and cfg.stage_enabled("harmonize"):
        harmonize_stage.ran = True
        issues = []
        h_reports = {}
        for b in bundles:
            name = b.file_metadata.file_name
            mapping_issues = validate_mappings(b.dictionary, res.codebook, res.mapping, source_name=name)
            issues.extend(replace(i, file=name) for i in mapping_issues)
            if has_errors(mapping_issues):
                continue
            try:
                _, h_bundle, h_report = both_versions(b, res.codebook, res.mapping, cfg.strict_harmonization, cfg.missing_values)
            except HarmonizeError as exc:
                issues.append(error(exc.code, str(exc), file=name))
                continue
            issues.extend(h_report.unmapped_value_incidents)
            harmonized.append(h_bundle)
            h_reports[name] = h_report.to_dict()
        harmonize_stage.issues = sort_issues(issues)
        if h_reports:
            harmonize_stage.details["reports"] = h_reports
        gated = gated or has_errors(harmonize_stage.issues)

    # store
    store_stage = StageResult("store")
    stages.append(store_stage)
    local_id: str | None = None
    if not gated and cfg.stage_enabled("store"):
        store_stage.ran = True
        store = StudyStore(cfg.store_root)
        with store.lock(staged.accession):
            local_id = store.write_study(
                staged.accession,
                staged.study_instance,
                res.study_template,
                staged.docs,
                bundles,
                harmonized,
            )
        store_stage.details["local_id"] = local_id
        report.local_id = local_id

    # index
    index_stage = StageResult("index")
    stages.append(index_stage)
    if not gated and cfg.stage_enabled("index") and cfg.stage_enabled("store"):
        index_stage.ran = True
        store = StudyStore(cfg.store_root)
        store.save_index(store.build_records())

    report.verdict = RETURNED if gated else ACCEPTED
    return report


def run_pipeline_from_path(study_dir: str | Path, cfg: PipelineConfig) -> FeedbackReport:
    """Ingest a submission directory and run the pipeline over it."""
    staged, issues = ingest(study_dir)
    if staged is None:
        stage = StageResult("ingest", ran=True, issues=issues)
        accession = Path(study_dir).name
        return FeedbackReport(accession=accession, verdict=RETURNED, stages=[stage])
    return run_pipeline(staged, cfg, ingest_issues=issues)
