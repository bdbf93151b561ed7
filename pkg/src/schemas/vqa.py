from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

UNKNOWN_TOKEN = "<unk>"


class PPMConfig(BaseModel):
    """Pyramid pooling: adaptive average pools, each projected by a 1x1 conv + BN + ReLU."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = False
    pool_sizes: list[int] = Field(default_factory=lambda: [1, 4, 8])
    proj_dim: int = Field(default=512, gt=0)

    @model_validator(mode="after")
    def check_pool_sizes(self) -> "PPMConfig":
        if not self.pool_sizes or any(s < 1 for s in self.pool_sizes):
            raise ValueError("pool_sizes must be positive")
        if any(b <= a for a, b in zip(self.pool_sizes, self.pool_sizes[1:])):
            raise ValueError(f"pool_sizes must be strictly increasing, got {self.pool_sizes}")
        return self

    def output_channels(self, in_channels: int) -> int:
        return in_channels + len(self.pool_sizes) * self.proj_dim


class Schedule(BaseModel):
    """
    Optimizer and learning-rate schedule.

    SGD uses momentum 0.9 and weight decay 1e-4; Adamax uses betas (0.9, 0.999)
    and no weight decay. The learning rate is multiplied by ``lr_decay`` at each
    milestone; ``grad_clip`` bounds the global gradient norm. Parameters whose
    name starts with an entry of ``frozen`` (a stage name like ``res2``) are
    never updated.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    optimizer: Literal["sgd_momentum", "adamax"] = "adamax"
    base_lr: float = Field(default=0.01, gt=0.0)
    lr_decay: float = Field(default=0.1, gt=0.0)
    milestones: list[int] = Field(default_factory=lambda: [5000, 7000, 9000, 11000])
    grad_clip: float | None = 0.25
    frozen: list[str] = Field(default_factory=list)
    iterations: int = Field(default=12000, gt=0)
    batch_size: int = Field(default=512, gt=0)
    warmup_iterations: int = Field(default=0, ge=0)
    warmup_factor: float = Field(default=0.2, gt=0.0, le=1.0)
    momentum: float = 0.9
    weight_decay: float = 1e-4
    betas: tuple[float, float] = (0.9, 0.999)

    def lr_at(self, iteration: int) -> float:
        """Learning rate used for the update at 0-based ``iteration``."""
        lr = self.base_lr * self.lr_decay ** sum(1 for m in self.milestones if iteration >= m)
        if iteration < self.warmup_iterations:
            alpha = iteration / self.warmup_iterations
            lr *= self.warmup_factor * (1 - alpha) + alpha
        return lr

    def scaled(self, iterations: int, batch_size: int | None = None) -> "Schedule":
        """Same shape of schedule over fewer iterations (milestones rescaled proportionally)."""
        ratio = iterations / self.iterations
        return self.model_copy(update={
            "iterations": iterations,
            "milestones": [max(1, round(m * ratio)) for m in self.milestones],
            "warmup_iterations": round(self.warmup_iterations * ratio),
            "batch_size": batch_size or self.batch_size,
        })

    @classmethod
    def preset(cls, name: str) -> "Schedule":
        try:
            return SCHEDULE_PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown schedule preset {name!r}; choose from {sorted(SCHEDULE_PRESETS)}") from None


SCHEDULE_PRESETS: dict[str, Schedule] = {
    "pythia_12k": Schedule(),
    "pythia_22k": Schedule(milestones=[15000, 18000, 20000, 21000], iterations=22000),
    "e2e": Schedule(
        base_lr=0.002,
        milestones=[15000, 18000, 20000, 21000],
        iterations=22000,
        grad_clip=1.0,
        frozen=["stem", "res2"],
    ),
    "detector_1x": Schedule(
        optimizer="sgd_momentum",
        base_lr=0.02,
        milestones=[60000, 80000],
        iterations=90000,
        batch_size=16,
        grad_clip=None,
    ),
}


class VqaConfig(BaseModel):
    """Toy top-down attention VQA head."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    embed_dim: int = Field(default=64, gt=0)
    question_dim: int = Field(default=128, gt=0)
    attention_hidden: int = Field(default=128, gt=0)
    classifier_hidden: int = Field(default=256, gt=0)
    feature_norm: bool = False
    ppm: PPMConfig = Field(default_factory=PPMConfig)
    schedule: Schedule = Field(default_factory=Schedule)


class Vocabulary(BaseModel):
    """Dense token and answer ids; token id 0 is reserved for unknown words."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    tokens: dict[str, int]
    answers: dict[str, int]

    @model_validator(mode="after")
    def check_dense(self) -> "Vocabulary":
        if self.tokens.get(UNKNOWN_TOKEN) != 0:
            raise ValueError(f"token id 0 must be {UNKNOWN_TOKEN!r}")
        for name, mapping in (("tokens", self.tokens), ("answers", self.answers)):
            if sorted(mapping.values()) != list(range(len(mapping))):
                raise ValueError(f"{name} ids must be dense from 0")
        return self

    @classmethod
    def build(cls, questions: list[list[str]], answers: list[str]) -> "Vocabulary":
        words = sorted({w for q in questions for w in q} - {UNKNOWN_TOKEN})
        return cls(
            tokens={UNKNOWN_TOKEN: 0, **{w: i + 1 for i, w in enumerate(words)}},
            answers={a: i for i, a in enumerate(sorted(set(answers)))},
        )

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.tokens.get(t, 0) for t in tokens]

    @property
    def answer_list(self) -> list[str]:
        return sorted(self.answers, key=self.answers.__getitem__)
