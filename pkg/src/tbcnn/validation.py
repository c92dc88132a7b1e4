"""Validated parameter models for topic modelling and network training."""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SYSTEMS = ("mnb", "bow_svm", "nbsvm", "textcnn", "tbcnn")


def _normalize_choice(value: str, choices: set[str], name: str) -> str:
    normalized = value.lower().strip().replace("-", "_")
    if normalized not in choices:
        raise ValueError(f"{name} must be one of {sorted(choices)}")
    return normalized


def normalize_system(value: str) -> str:
    return _normalize_choice(value, set(SYSTEMS), "system")


class LdaConfig(BaseModel):
    """Collapsed Gibbs sampling settings for one LDA chain."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(default=16, ge=1, description="Number of topics")
    alpha: Optional[float] = Field(
        default=None, gt=0, description="Doc-topic Dirichlet prior; unset means 50/k"
    )
    beta: float = Field(default=0.01, gt=0, description="Topic-word Dirichlet prior")
    iterations: int = Field(default=1000, ge=1, description="Full Gibbs sweeps")
    burn_in: int = Field(default=200, ge=0)
    seed: int = Field(default=0, ge=0)
    eval_every: int = Field(default=50, ge=1)
    check_counts: bool = Field(
        default=False, description="Assert count conservation after every sweep"
    )

    @model_validator(mode="after")
    def validate_burn_in(self):
        if self.burn_in >= self.iterations:
            raise ValueError(
                f"burn_in ({self.burn_in}) must be smaller than iterations ({self.iterations})"
            )
        return self

    @property
    def resolved_alpha(self) -> float:
        return self.alpha if self.alpha is not None else 50.0 / self.k


class ConvSpec(BaseModel):
    """Convolution layout: one filter bank per region size."""

    model_config = ConfigDict(frozen=True)

    region_sizes: tuple[int, ...] = Field(default=(4, 5, 6), min_length=1)
    filters_per_size: int = Field(default=100, ge=1)
    input_width: Optional[int] = Field(default=None, gt=0)

    @field_validator("region_sizes", mode="before")
    @classmethod
    def validate_region_sizes(cls, value):
        sizes = tuple(int(h) for h in value)
        if any(h < 1 for h in sizes):
            raise ValueError("every region size must be at least 1")
        return sizes

    @property
    def max_region(self) -> int:
        return max(self.region_sizes)


class TrainConfig(BaseModel):
    """Mini-batch optimisation settings for the convolutional classifiers."""

    model_config = ConfigDict(frozen=True)

    batch_size: int = Field(default=50, ge=1)
    epochs: int = Field(default=10, ge=0)
    learning_rate: float = Field(default=1e-3, ge=0)
    dropout_rate: float = Field(default=0.5, ge=0, lt=1)
    optimizer: Literal["adam", "sgd"] = Field(default="adam")
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)
    shuffle_seed: int = Field(default=0, ge=0)
    dropout_seed: int = Field(default=1, ge=0)
    init_seed: int = Field(default=2, ge=0)
    init_scale: float = Field(default=0.01, gt=0)
    fine_tune_embeddings: bool = Field(default=True)

    @field_validator("optimizer", mode="before")
    @classmethod
    def validate_optimizer(cls, value: str) -> str:
        return _normalize_choice(value, {"adam", "sgd"}, "optimizer")
