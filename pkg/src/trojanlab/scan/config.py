"""Scan settings."""

from dataclasses import dataclass


@dataclass(frozen=True)
class ScanConfig:
    grid_size: int = 64
    max_mult: float = 3.0  # grid top = max_mult * the unit's max natural activation on seeds
    min_width: int = 4  # grid points a common-label run must span to count
    mask_steps: int = 500
    mask_lr: float = 0.1
    sparsity_weight: float = 0.01  # weight of mean(alpha) in the mask objective
    reasr_bound: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.grid_size < 2:
            raise ValueError("grid_size must be at least 2")
        if not 0 <= self.reasr_bound <= 1:
            raise ValueError(f"reasr_bound must lie in [0, 1], got {self.reasr_bound}")
        if self.min_width < 1:
            raise ValueError("min_width must be at least 1")
        if self.max_mult <= 0 or self.mask_steps < 0 or self.mask_lr <= 0:
            raise ValueError("max_mult and mask_lr must be positive, mask_steps non-negative")
        if self.sparsity_weight < 0:
            raise ValueError("sparsity_weight must be non-negative")
