from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field, field_validator

MAX_SEED = 2**64 - 1


class PropertyReport(BaseModel):
    """Outcome of one property check: how many instances were examined and which failed."""

    name: str
    checked: int = 0
    violations: List[str] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)

    @field_validator("checked")
    def validate_checked(cls, v):
        if v < 0:
            raise ValueError("checked must be non-negative")
        return v

    @property
    def ok(self) -> bool:
        return not self.violations

    def violation(self, message: str) -> None:
        self.violations.append(message)

    def merge(self, other: "PropertyReport") -> "PropertyReport":
        self.checked += other.checked
        self.violations.extend(other.violations)
        self.notes.extend(n for n in other.notes if n not in self.notes)
        return self

    def summary_line(self) -> str:
        return f"{self.name} checked={self.checked} violations={len(self.violations)}"


class ExperimentConfig(BaseModel):
    seed: int = Field(..., description="Root seed; every random stream is derived from it")
    corpus_size: int = Field(200, description="Number of random formulas in the corpus")
    max_points: int = Field(4, description="Largest poset searched by the countermodel oracle")
    budget: int = Field(2_000_000, description="Prover node budget per query")
    cache_cap: Optional[int] = Field(None, description="Prover cache entry cap")
    max_connectives: int = Field(2, description="Exhaustive corpus connective cap")
    random_connectives: int = Field(9, description="Connective cap for random formulas")
    model_points: int = Field(6, description="Largest random combined model")
    model_samples: int = Field(500, description="Random (formula, model) pairs per experiment")
    pair_samples: int = Field(200, description="Model pairs per formula for the b-index checks")
    index_cap: int = Field(12, description="Largest N tried by the index search")
    t_max: int = Field(256, description="Iteration limit for traces")
    max_width: int = Field(4, description="Sibling cap for representative trees")
    star_samples: int = Field(300, description="Random models for the ladder map construction")
    workers: int = Field(0, description="Worker processes; 0 or 1 runs in-process")
    out: Optional[str] = Field(None, description="Report path; stdout when empty")

    @field_validator("seed")
    def validate_seed(cls, v):
        if not 0 <= v <= MAX_SEED:
            raise ValueError(f"seed must fit in 64 bits, got {v}")
        return v

    @field_validator("max_points")
    def validate_max_points(cls, v):
        if not 1 <= v <= 8:
            raise ValueError(f"max_points must be between 1 and 8, got {v}")
        return v

    @field_validator("max_connectives")
    def validate_max_connectives(cls, v):
        if not 0 <= v <= 5:
            raise ValueError(f"max_connectives must be between 0 and 5, got {v}")
        return v

    @field_validator(
        "corpus_size", "random_connectives", "model_samples", "pair_samples", "star_samples", "workers"
    )
    def validate_non_negative(cls, v):
        if v < 0:
            raise ValueError("value must be non-negative")
        return v

    @field_validator("budget", "index_cap", "t_max", "max_width", "model_points")
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError("value must be positive")
        return v


class EndoExperimentReport(PropertyReport):
    """Property report that also carries the largest index and period met."""

    max_index: int = 0
    max_period: int = 0

    def observe(self, index: int, period: int) -> None:
        self.max_index = max(self.max_index, index)
        self.max_period = max(self.max_period, period)
