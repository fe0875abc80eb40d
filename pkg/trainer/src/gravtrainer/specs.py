"""Network and training configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass


COMPOSITE_WEIGHTS = (0.7, 0.25, 0.05)  # regression, overlap, autoencoder


@dataclass
class NetSpec:
    """Shape of the volumetric inversion network.

    resize_target is both the model's map resolution and the output cube
    edge; depth counts encoder stages (depth-1 poolings), so resize_target
    must be divisible by 2**(depth-1).
    """

    resize_target: int = 32
    base_filters: int = 8
    depth: int = 4
    variant: str = "plain"  # plain | lstm | physics
    with_autoencoder: bool = True

    def __post_init__(self):
        if self.variant not in ("plain", "lstm", "physics"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.depth < 2:
            raise ValueError("depth must be >= 2")
        stride = 2 ** (self.depth - 1)
        if self.resize_target % stride != 0:
            raise ValueError(
                f"resize_target {self.resize_target} not divisible by 2^(depth-1) = {stride}"
            )
        if self.variant == "lstm":
            self.with_autoencoder = False

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 8
    epochs: int = 100
    restart_period: int = 50  # cosine schedule restart length, in epochs
    augment: bool = True
    noise_std: float = 0.05
    loss_weights: tuple[float, float, float] = COMPOSITE_WEIGHTS
    class_weights: tuple[float, float] = (1.0, 1.0)
    data_misfit_weight: float = 0.0  # physics variant kernel term
    target: str = "density"  # density | saturation
    seed: int = 0

    def __post_init__(self):
        if sum(self.loss_weights) != 1.0:
            raise ValueError("composite loss weights must sum to exactly 1.0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if self.target not in ("density", "saturation"):
            raise ValueError(f"unknown target {self.target!r}")
        if self.data_misfit_weight < 0:
            raise ValueError("data_misfit_weight must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)
