"""Training configuration for the constellation autoencoder."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..channel import RngSeed
from ..core import Scenario, validate_scenario
from ..exceptions import ValidationError


@dataclass(frozen=True)
class AdamParams:
    """Adam hyperparameters; defaults follow the common framework choice."""

    step_size: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7


@dataclass(frozen=True)
class DaeConfig:
    scenario: Scenario
    train_snr_db: float = 13.0
    num_const: int = 2048
    max_epochs: int = 32768
    patience: int = 4000
    hidden_sizes: tuple[int, ...] = (128, 64, 32)
    adam: AdamParams = field(default_factory=AdamParams)
    init_seed: RngSeed = field(default_factory=lambda: RngSeed(0, 0))
    noise_seed: RngSeed = field(default_factory=lambda: RngSeed(0, 1))
    eps_norm: float = 1e-8

    def __post_init__(self):
        validate_scenario(self.scenario)
        if self.num_const < 1:
            raise ValidationError(f"num_const must be >= 1, got {self.num_const}")
        if not (1 <= self.patience <= self.max_epochs):
            raise ValidationError(
                f"patience must lie in [1, max_epochs={self.max_epochs}], got {self.patience}"
            )
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ValidationError(f"hidden sizes must be positive, got {self.hidden_sizes}")
        if not (self.eps_norm > 0):
            raise ValidationError("eps_norm must be positive")

    @property
    def batch_rows(self) -> int:
        return self.num_const * self.scenario.M

    def layer_sizes(self) -> list[int]:
        return [2, *self.hidden_sizes, self.scenario.total_bits]
