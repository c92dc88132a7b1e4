"""Configuration helpers for experiments.

Values are resolved in this order: model defaults, the YAML file, environment
variables, ``--set section.key=value`` overrides, then explicit CLI flags.
"""

import os
from pathlib import Path
from typing import Any, Literal, Optional, Sequence

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import ValidationError
from .validation import SYSTEMS, ConvSpec, LdaConfig, TrainConfig, normalize_system


def _bool_from_env(value: str | None, *, default: bool = False) -> bool:
    comparison = (value or ("true" if default else "false")).strip().lower()
    return comparison in {"1", "true", "yes"}


class DataSection(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: Optional[Path] = None
    format: Literal["auto", "imdb", "delimited"] = "auto"
    max_length: int = Field(default=200, ge=1)
    min_count: int = Field(default=2, ge=1)
    max_size: int = Field(default=30000, ge=2)
    train_size: Optional[int] = Field(default=None, ge=1)
    test_size: Optional[int] = Field(default=None, ge=1)


class LdaSection(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: Optional[int] = Field(default=None, ge=1, description="Unset means sweep")
    k_values: tuple[int, ...] = Field(default=tuple(range(10, 20)), min_length=1)
    alpha: Optional[float] = Field(default=None, gt=0)
    beta: float = Field(default=0.01, gt=0)
    iterations: int = Field(default=1000, ge=1)
    burn_in: int = Field(default=200, ge=0)
    eval_every: int = Field(default=50, ge=1)
    fold_in_sweeps: int = Field(default=50, ge=1)
    max_workers: int = Field(default=1, ge=1)
    model_path: Optional[Path] = None
    check_counts: bool = False

    def lda_config(self, k: int, seed: int) -> LdaConfig:
        return LdaConfig(
            k=k,
            alpha=self.alpha,
            beta=self.beta,
            iterations=self.iterations,
            burn_in=self.burn_in,
            seed=seed,
            eval_every=self.eval_every,
            check_counts=self.check_counts,
        )


class EmbeddingSection(BaseModel):
    model_config = ConfigDict(frozen=True)

    path: Optional[Path] = None
    binary: Optional[bool] = None
    dimension: int = Field(default=300, ge=1, description="Used when no file is given")
    keywords: int = Field(default=20, ge=1, description="Keywords averaged per topic")


class CnnSection(BaseModel):
    model_config = ConfigDict(frozen=True)

    conv: ConvSpec = Field(default_factory=ConvSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    region_sweep: tuple[tuple[int, ...], ...] = Field(
        default=((2, 3, 4), (3, 4, 5), (4, 5, 6), (5, 6, 7), (4, 4, 4), (5, 5, 5), (6, 6, 6)),
        min_length=1,
        description="Region-size sets tried by the region-sweep command",
    )

    @field_validator("region_sweep", mode="before")
    @classmethod
    def validate_region_sweep(cls, value):
        if any(not isinstance(sizes, (list, tuple)) for sizes in value):
            raise ValueError("region_sweep must be a list of region-size lists")
        sets = tuple(ConvSpec(region_sizes=sizes).region_sizes for sizes in value)
        if len(set(sets)) != len(sets):
            raise ValueError("region_sweep sets must be distinct")
        return sets

    @property
    def max_region(self) -> int:
        return max([self.conv.max_region] + [max(sizes) for sizes in self.region_sweep])


class BaselineSection(BaseModel):
    model_config = ConfigDict(frozen=True)

    mnb_smoothing: float = Field(default=1.0, gt=0)
    nbsvm_smoothing: float = Field(default=1.0, gt=0)
    nbsvm_interpolation: float = Field(default=0.25, ge=0, le=1)
    nbsvm_reg: float = Field(default=1e-4, gt=0)
    nbsvm_loss: Literal["hinge", "logistic"] = "hinge"
    svm_regs: tuple[float, ...] = Field(default=(1e-4, 1e-3, 1e-2), min_length=1)
    holdout_fraction: float = Field(default=0.1, gt=0, lt=1)
    epochs: int = Field(default=15, ge=1)
    bigrams: bool = False
    bigram_min_count: int = Field(default=2, ge=1)


class ExperimentConfig(BaseModel):
    """Everything one experiment needs, validated."""

    model_config = ConfigDict(frozen=True)

    data: DataSection = Field(default_factory=DataSection)
    lda: LdaSection = Field(default_factory=LdaSection)
    embedding: EmbeddingSection = Field(default_factory=EmbeddingSection)
    cnn: CnnSection = Field(default_factory=CnnSection)
    baselines: BaselineSection = Field(default_factory=BaselineSection)
    systems: tuple[str, ...] = Field(default=SYSTEMS, min_length=1)
    output_dir: Path = Path("runs/default")
    seed: int = Field(default=0, ge=0)

    @field_validator("systems", mode="before")
    @classmethod
    def validate_systems(cls, value) -> tuple[str, ...]:
        if isinstance(value, str):
            value = [value]
        ordered: list[str] = []
        for item in value:
            system = normalize_system(item)
            if system not in ordered:
                ordered.append(system)
        return tuple(ordered)

    @model_validator(mode="after")
    def validate_length(self):
        if self.data.max_length < self.cnn.max_region:
            raise ValueError(
                f"data.max_length ({self.data.max_length}) must be at least the largest "
                f"region size ({self.cnn.max_region})"
            )
        return self

    @property
    def uses_cnn(self) -> bool:
        return any(system in {"textcnn", "tbcnn"} for system in self.systems)

    def validate_paths(self) -> None:
        if self.data.path is None:
            raise ValidationError(
                "data.path is required", field="data.path", constraint="must be set"
            )
        if not self.data.path.exists():
            raise ValidationError(
                f"Dataset path does not exist: {self.data.path}",
                field="data.path",
                value=str(self.data.path),
                constraint="must exist",
            )
        if self.uses_cnn and self.embedding.path is not None and not self.embedding.path.exists():
            raise ValidationError(
                f"Embedding file does not exist: {self.embedding.path}",
                field="embedding.path",
                value=str(self.embedding.path),
                constraint="must exist",
            )
        if self.lda.model_path is not None and not self.lda.model_path.exists():
            raise ValidationError(
                f"LDA model file does not exist: {self.lda.model_path}",
                field="lda.model_path",
                value=str(self.lda.model_path),
                constraint="must exist",
            )


def _set_nested(target: dict[str, Any], dotted_key: str, value: Any) -> None:
    keys = dotted_key.split(".")
    node = target
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            child = {}
            node[key] = child
        node = child
    node[keys[-1]] = value


def parse_override(text: str) -> tuple[str, Any]:
    """Split ``section.key=value``; the value is parsed as YAML."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ValueError(f"Override must look like section.key=value, got '{text}'")
    return key, yaml.safe_load(raw) if raw.strip() else None


def read_config_file(path: Path) -> dict[str, Any]:
    try:
        with open(path, encoding="utf-8") as handle:
            raw = yaml.safe_load(handle) or {}
    except OSError as exc:
        raise ValueError(f"Cannot read config file {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ValueError(f"Config file {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"Config file {path} must contain a mapping at the top level")
    return raw


def load_config(
    path: Optional[Path] = None,
    overrides: Sequence[str] = (),
    *,
    seed: Optional[int] = None,
    output_dir: Optional[Path] = None,
) -> ExperimentConfig:
    raw: dict[str, Any] = read_config_file(path) if path is not None else {}

    env_seed = os.getenv("TBCNN_SEED")
    if env_seed:
        raw["seed"] = int(env_seed)
    env_out = os.getenv("TBCNN_OUTPUT_DIR")
    if env_out:
        raw["output_dir"] = env_out
    if _bool_from_env(os.getenv("TBCNN_DEBUG")):
        _set_nested(raw, "lda.check_counts", True)

    for text in overrides:
        key, value = parse_override(text)
        _set_nested(raw, key, value)

    if seed is not None:
        raw["seed"] = seed
    if output_dir is not None:
        raw["output_dir"] = str(output_dir)

    return ExperimentConfig.model_validate(raw)
