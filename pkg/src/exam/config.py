"""Run configuration: profiles, JSON loading, validation."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from typing import Optional

from .errors import ConfigError

TASK_MULTICLASS = "multiclass"
TASK_MULTILABEL = "multilabel"

MODEL_EXAM = "exam"
MODEL_FASTTEXT = "fasttext"
MODEL_ENCODER_ONLY = "encoder_only"

ENCODER_REGION = "region"
ENCODER_GRU = "gru"
ENCODER_EMBED = "embed_only"

_VALID_ENCODERS = {
    MODEL_EXAM: {ENCODER_REGION, ENCODER_GRU, ENCODER_EMBED},
    MODEL_FASTTEXT: {ENCODER_EMBED},
    MODEL_ENCODER_ONLY: {ENCODER_REGION, ENCODER_GRU, ENCODER_EMBED},
}

GRU_GRAD_CLIP = 5.0  # global-norm clip, recurrent path only


@dataclass
class RunConfig:
    task: str = TASK_MULTICLASS
    model: str = MODEL_EXAM
    encoder: str = ENCODER_REGION

    classes: int = 4
    embed_dim: int = 128           # k
    text_len: int = 64             # n
    region_radius: int = 3         # s; region size is 2s+1
    agg_hidden: Optional[int] = None  # h; defaults to 2n (multiclass) / 60 (multilabel)
    gru_hidden: int = 1024

    lr: float = 1e-4
    batch_size: int = 16
    max_epochs: int = 20
    patience: int = 3
    seed: int = 0
    min_count: int = 1
    val_fraction: float = 0.10
    gru_variant: str = "standard"
    mask_padding_interactions: bool = False
    precision_log_base: str = "e"

    train_data: Optional[str] = None
    test_data: Optional[str] = None
    checkpoint_dir: Optional[str] = None
    class_names: Optional[list[str]] = None

    @property
    def pad_side(self) -> str:
        # Multi-label pads on the prefix so the final recurrent states
        # cover real tokens; multi-class pads on the suffix.
        return "prefix" if self.task == TASK_MULTILABEL else "suffix"

    @property
    def hidden(self) -> int:
        if self.agg_hidden is not None:
            return self.agg_hidden
        return 60 if self.task == TASK_MULTILABEL else 2 * self.text_len

    @property
    def encoder_width(self) -> int:
        return self.gru_hidden if self.encoder == ENCODER_GRU else self.embed_dim

    @property
    def grad_clip(self) -> Optional[float]:
        return GRU_GRAD_CLIP if self.encoder == ENCODER_GRU else None

    def effective_class_names(self) -> list[str]:
        if self.class_names is not None:
            return list(self.class_names)
        return [f"class_{i}" for i in range(self.classes)]

    def validate(self) -> "RunConfig":
        if self.task not in (TASK_MULTICLASS, TASK_MULTILABEL):
            raise ConfigError(f"task: unknown value {self.task!r}")
        if self.model not in _VALID_ENCODERS:
            raise ConfigError(f"model: unknown value {self.model!r}")
        if self.encoder not in (ENCODER_REGION, ENCODER_GRU, ENCODER_EMBED):
            raise ConfigError(f"encoder: unknown value {self.encoder!r}")
        if self.encoder not in _VALID_ENCODERS[self.model]:
            raise ConfigError(
                f"encoder: {self.encoder!r} is not valid for model {self.model!r}"
            )
        for name in ("classes", "embed_dim", "text_len", "gru_hidden",
                     "batch_size", "max_epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be positive")
        if self.agg_hidden is not None and self.agg_hidden < 1:
            raise ConfigError("agg_hidden: must be positive")
        if self.region_radius < 0:
            raise ConfigError("region_radius: must be >= 0")
        if self.patience < 0:
            raise ConfigError("patience: must be >= 0")
        if self.lr <= 0:
            raise ConfigError("lr: must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction: must be in (0, 1)")
        if self.min_count < 1:
            raise ConfigError("min_count: must be >= 1")
        if self.gru_variant not in ("standard", "as_printed"):
            raise ConfigError(f"gru_variant: unknown value {self.gru_variant!r}")
        if self.precision_log_base not in ("e", "2"):
            raise ConfigError("precision_log_base: must be 'e' or '2'")
        if self.class_names is not None and len(self.class_names) != self.classes:
            raise ConfigError("class_names: length must equal classes")
        return self


PROFILES: dict[str, dict] = {
    # Published multi-class setup: region encoder of size 7, k=128,
    # adam at 1e-4, batch 16, aggregation hidden = 2n.
    "multiclass-paper": dict(
        task=TASK_MULTICLASS, model=MODEL_EXAM, encoder=ENCODER_REGION,
        embed_dim=128, text_len=64, region_radius=3,
        lr=1e-4, batch_size=16, min_count=5,
    ),
    # Published multi-label setup: GRU encoder with 1024 hidden units,
    # k=256, aggregation hidden 60, batch 1000, adam at 1e-3, last 30 words.
    "multilabel-paper": dict(
        task=TASK_MULTILABEL, model=MODEL_EXAM, encoder=ENCODER_GRU,
        embed_dim=256, gru_hidden=1024, agg_hidden=60, text_len=30,
        lr=1e-3, batch_size=1000, min_count=5,
    ),
    # Desk-scale profile used by the test suite.
    "toy": dict(
        task=TASK_MULTICLASS, model=MODEL_EXAM, encoder=ENCODER_REGION,
        embed_dim=16, text_len=32, region_radius=1,
        lr=1e-3, batch_size=8, min_count=1,
    ),
}

_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def config_from_dict(raw: dict) -> RunConfig:
    """Build and validate a RunConfig from a parsed JSON object.

    A 'profile' key seeds defaults; every other key must be a known field
    (typos fail fast). EXAM_SEED in the environment overrides the seed.
    """
    raw = dict(raw)
    values: dict = {}
    profile = raw.pop("profile", None)
    if profile is not None:
        if profile not in PROFILES:
            raise ConfigError(
                f"profile: unknown profile {profile!r}; "
                f"choose from {sorted(PROFILES)}"
            )
        values.update(PROFILES[profile])
    unknown = set(raw) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    values.update(raw)
    env_seed = os.environ.get("EXAM_SEED")
    if env_seed:
        try:
            values["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"EXAM_SEED: not an integer: {env_seed!r}") from None
    return RunConfig(**values).validate()


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top-level JSON value must be an object")
    return config_from_dict(raw)


def config_to_dict(config: RunConfig) -> dict:
    out = {}
    for f in fields(RunConfig):
        out[f.name] = getattr(config, f.name)
    return out
