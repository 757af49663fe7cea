"""End-to-end curation pipeline: ingest, scan, de-identify, validate,
harmonize, store, index, plus the synthetic-corpus generator and the
read-only HTTP API over a store."""

from .config import PipelineConfig
from .ingest import StagedStudy, ingest
from .run import FeedbackReport, run_pipeline
from .store import StudyStore
from .synth import SynthSpec, generate_corpus

__all__ = [
    "PipelineConfig",
    "StagedStudy",
    "ingest",
    "FeedbackReport",
    "run_pipeline",
    "StudyStore",
    "SynthSpec",
    "generate_corpus",
]
