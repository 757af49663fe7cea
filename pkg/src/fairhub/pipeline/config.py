"""Pipeline run configuration.

Loaded from JSON; relative paths resolve against the config file's own
directory so corpora stay relocatable. The de-identification key is never
part of the file: it comes from the FAIRHUB_DEID_KEY environment variable
(hex) or is passed explicitly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..deid import DeidConfig, DeidError, load_key_hex

KEY_ENV_VAR = "FAIRHUB_DEID_KEY"

STAGES = ("scan", "deid", "validate", "metadata", "harmonize", "store", "index")

DEID_TRANSFORM = "transform"
DEID_VERIFY = "verify"


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    codebook_path: Path
    mapping_path: Path
    study_template_path: Path
    file_template_path: Path
    terms_path: Path
    store_root: Path
    deid_config: DeidConfig | None = None
    deid_mode: str = DEID_TRANSFORM
    strict_harmonization: bool = True
    stages: dict[str, bool] = field(default_factory=lambda: {s: True for s in STAGES})
    missing_values: frozenset[str] = frozenset({""})

    def stage_enabled(self, name: str) -> bool:
        return self.stages.get(name, True)

    @classmethod
    def load(cls, path: str | Path, key: bytes | None = None) -> "PipelineConfig":
        """Read a config file, resolve paths, and check they exist."""
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read pipeline config {path}: {exc}") from None
        base = path.parent

        def resolve(name: str, must_exist: bool = True) -> Path:
            raw = doc.get(name)
            if not raw:
                raise ConfigError(f"pipeline config is missing {name!r}")
            p = Path(raw)
            if not p.is_absolute():
                p = base / p
            if must_exist and not p.exists():
                raise ConfigError(f"{name} path does not exist: {p}")
            return p

        stages = {s: True for s in STAGES}
        for s, enabled in doc.get("stages", {}).items():
            if s not in STAGES:
                raise ConfigError(f"unknown stage {s!r}")
            stages[s] = bool(enabled)

        deid_mode = doc.get("deid_mode", DEID_TRANSFORM)
        if deid_mode not in (DEID_TRANSFORM, DEID_VERIFY):
            raise ConfigError(f"deid_mode must be transform or verify, got {deid_mode!r}")

        deid_config = None
        if stages.get("deid", True) and deid_mode == DEID_TRANSFORM:
            deid_path = resolve("deid_config")
            if key is None:
                hex_key = os.environ.get(KEY_ENV_VAR, "")
                if not hex_key:
                    raise ConfigError(f"{KEY_ENV_VAR} must be set (hex) when the deid stage transforms data")
                try:
                    key = load_key_hex(hex_key)
                except DeidError as exc:
                    raise ConfigError(str(exc)) from None
            try:
                deid_doc = json.loads(deid_path.read_text(encoding="utf-8"))
                deid_config = DeidConfig.from_dict(deid_doc, key)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read deid config {deid_path}: {exc}") from None
            except DeidError as exc:
                raise ConfigError(f"bad deid config: {exc}") from None

        store_root = doc.get("store_root")
        if not store_root:
            raise ConfigError("pipeline config is missing 'store_root'")
        store_path = Path(store_root)
        if not store_path.is_absolute():
            store_path = base / store_path

        return cls(
            codebook_path=resolve("codebook"),
            mapping_path=resolve("mapping"),
            study_template_path=resolve("study_template"),
            file_template_path=resolve("file_template"),
            terms_path=resolve("terms"),
            store_root=store_path,
            deid_config=deid_config,
            deid_mode=deid_mode,
            strict_harmonization=bool(doc.get("strict_harmonization", True)),
            stages=stages,
            missing_values=frozenset(doc.get("missing_values", [""])),
        )
