"""Single-file JSON model bundle: schema, fitted pipeline and model."""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .dataset import ColumnSchema, validate_schema
from .ensemble import model_from_dict
from .errors import ConfigError, IoError
from .preprocess import PreprocessPipeline

FORMAT_VERSION = 1
MODEL_TYPES = ("random_forest", "gbt", "mlp", "voting")


@dataclass
class ModelBundle:
    schema: list[ColumnSchema]
    pipeline: PreprocessPipeline
    model: object
    seed: int
    created_at: str = ""
    format_version: int = FORMAT_VERSION

    def predict_table(self, table):
        X, _ = self.pipeline.transform(table)
        return self.model.predict(X)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "created_at": self.created_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "seed": self.seed,
            "schema": [c.to_dict() for c in self.schema],
            "pipeline": self.pipeline.to_dict(),
            "model": self.model.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelBundle":
        if d.get("format_version") != FORMAT_VERSION:
            raise ConfigError(f"unsupported bundle format_version {d.get('format_version')!r}")
        model_type = d["model"].get("model_type")
        if model_type not in MODEL_TYPES:
            raise ConfigError(f"unknown model_type {model_type!r}")
        return cls(
            schema=validate_schema(ColumnSchema.from_dict(c) for c in d["schema"]),
            pipeline=PreprocessPipeline.from_dict(d["pipeline"]),
            model=model_from_dict(d["model"]),
            seed=int(d["seed"]),
            created_at=d.get("created_at", ""),
        )


def save_bundle(bundle: ModelBundle, path) -> Path:
    path = Path(path)
    doc = bundle.to_dict()
    bundle.created_at = doc["created_at"]
    # json writes floats with repr(), which round-trips float64 exactly
    path.write_text(json.dumps(doc, allow_nan=False), encoding="utf-8")
    return path


def load_bundle(path) -> ModelBundle:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"bundle not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise IoError(f"cannot read bundle {path}: {exc}") from exc
    try:
        return ModelBundle.from_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed bundle {path}: {exc}") from exc
