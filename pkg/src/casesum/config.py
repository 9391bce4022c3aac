"""Declarative pipeline configuration.

One JSON file drives every CLI command.  Keys are flat except for the
nested ``scorer`` block (the phrase-scorer hyperparameters); command
line overrides use dotted paths, e.g. ``--set scorer.epochs=5`` or
``--set top_k=3``.  Values are coerced to the declared field types, so
``parse(serialize(config)) == config``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .lexmatch import DEFAULT_WLCS_EXPONENT, parse_feature_code
from .phrase_scorer import Hyperparams


class BadConfig(ValueError):
    """Configuration file or override cannot be parsed."""


@dataclass(frozen=True)
class PipelineConfig:
    corpus_dir: str = "corpus"
    # summarized corpus for phrase-scorer training; corpus_dir when None
    train_corpus_dir: Optional[str] = None
    # text-format embedding file; None derives seeded random embeddings
    # from the corpus vocabulary
    embeddings_path: Optional[str] = None
    out_dir: str = "out"
    seed: int = 13
    feature_code: str = "ES+sp-ple"
    summary_threshold: float = 0.2
    top_k: int = 5
    wlcs_exponent: float = DEFAULT_WLCS_EXPONENT
    ranker_regularization: float = 1.0
    ranker_epochs: int = 100
    pair_cap: Optional[int] = None
    standardize_features: bool = True
    scorer: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        parse_feature_code(self.feature_code)  # validates the grammar
        if not 0.0 < self.summary_threshold <= 1.0:
            raise BadConfig("summary_threshold must be in (0, 1]")
        if self.top_k < 1:
            raise BadConfig("top_k must be >= 1")

    def resolved_train_corpus_dir(self) -> str:
        return self.train_corpus_dir or self.corpus_dir


def to_dict(config: PipelineConfig) -> dict:
    return dataclasses.asdict(config)


def _coerce(value: Any, target_type: Any, key: str) -> Any:
    origin = getattr(target_type, "__origin__", None)
    if origin is not None:  # Optional[T]
        args = [a for a in target_type.__args__ if a is not type(None)]
        if value is None or value == "":
            return None
        return _coerce(value, args[0], key)
    if target_type is bool:
        if isinstance(value, bool):
            return value
        if str(value).lower() in ("true", "1", "yes"):
            return True
        if str(value).lower() in ("false", "0", "no"):
            return False
        raise BadConfig(f"{key}: cannot read {value!r} as a boolean")
    try:
        return target_type(value)
    except (TypeError, ValueError) as exc:
        raise BadConfig(f"{key}: {exc}") from exc


def _build(cls, data: dict, prefix: str = "") -> Any:
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise BadConfig(f"unknown config keys: {sorted(prefix + k for k in unknown)}")
    kwargs = {}
    for name, value in data.items():
        if name == "scorer":
            kwargs[name] = _build(Hyperparams, value or {}, "scorer.")
        else:
            kwargs[name] = _coerce(value, _FIELD_TYPES[cls].get(name, str),
                                   prefix + name)
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise BadConfig(str(exc)) from exc


# dataclass field annotations are strings under `from __future__ import
# annotations`; concrete types are listed here for coercion
_FIELD_TYPES: dict[type, dict[str, Any]] = {
    PipelineConfig: {
        "corpus_dir": str, "train_corpus_dir": Optional[str],
        "embeddings_path": Optional[str], "out_dir": str, "seed": int,
        "feature_code": str, "summary_threshold": float, "top_k": int,
        "wlcs_exponent": float, "ranker_regularization": float,
        "ranker_epochs": int, "pair_cap": Optional[int],
        "standardize_features": bool,
    },
    Hyperparams: {
        "embedding_dim": int, "conv_filters": int, "window_size": int,
        "hidden_size": int, "learning_rate": float, "grad_clip_norm": float,
        "coef_mean": float, "coef_negative": float, "coef_upper": float,
        "coef_lower": float, "margin": float, "negatives_per_doc": int,
        "epochs": int, "batch_docs": int, "seed": int,
    },
}


def from_dict(data: dict) -> PipelineConfig:
    return _build(PipelineConfig, data)


def load_config(path: Path | str) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise BadConfig(f"cannot read config {path}: {exc}") from exc
    return from_dict(data)


def save_config(config: PipelineConfig, path: Path | str) -> None:
    Path(path).write_text(
        json.dumps(to_dict(config), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")


def apply_overrides(config: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply ``key=value`` strings with dotted paths to a config."""
    data = to_dict(config)
    for item in overrides:
        if "=" not in item:
            raise BadConfig(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        target = data
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in target or not isinstance(target[part], dict):
                raise BadConfig(f"unknown override path {key!r}")
            target = target[part]
        if parts[-1] not in target:
            raise BadConfig(f"unknown override key {key!r}")
        target[parts[-1]] = value
    return from_dict(data)
