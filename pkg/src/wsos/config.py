"""Run configuration: JSON documents validated against ``run_config.schema.json``."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict
from importlib import resources
from pathlib import Path

import jsonschema

from .pipeline import METHODS, PipelineConfig


class ConfigError(ValueError):
    pass


def schema() -> dict:
    return json.loads(resources.files("wsos").joinpath("run_config.schema.json").read_text(encoding="utf-8"))


DEFAULT_RUN = {
    "datasets": [],
    "methods": [METHODS[0], "smote_nn"],
    "output_dir": "results",
    "n_jobs": 1,
    "plots": True,
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def validate(doc: dict) -> None:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {e.message}")


def resolve(doc: dict | None = None) -> dict:
    """Validate ``doc`` and return it with every default filled in explicitly."""
    doc = doc or {}
    validate(doc)
    full = _merge({**DEFAULT_RUN, "pipeline": asdict(PipelineConfig())}, doc)
    validate(full)
    try:
        pipeline_config(full).validate()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config at pipeline: {exc}") from exc
    return full


def pipeline_config(doc: dict) -> PipelineConfig:
    return PipelineConfig.from_dict(doc["pipeline"])


def load(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def set_path(doc: dict, dotted: str, value) -> None:
    """Override ``doc`` at a dotted key such as ``pipeline.bef.K``."""
    keys = dotted.split(".")
    cur = doc
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = value


def dump(doc: dict, path: Path) -> None:
    from .report import atomic_write_text

    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
