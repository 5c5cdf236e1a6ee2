"""Model and training configuration."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, replace

from ..iq import N_INPUT, N_OUTPUT

N_IN_REAL = 2 * N_INPUT
N_OUT_REAL = 2 * N_OUTPUT


class Architecture(str, enum.Enum):
    UKF3 = "ukf3"
    DNN = "dnn"
    LSTM = "lstm"
    DCNN1 = "dcnn1"
    DCNN2 = "dcnn2"


NEURAL = (Architecture.DNN, Architecture.LSTM, Architecture.DCNN1, Architecture.DCNN2)


@dataclass(frozen=True)
class ModelSpec:
    """Architecture description; fields that don't apply to ``architecture`` are ignored.

    ``hidden`` holds the dense hidden widths for dnn and the LSTM layer widths
    for lstm. ``head`` holds the dense hidden widths between the feature
    extractor and the 8-real linear output (lstm, dcnn1, dcnn2). ``dilations``
    lists one dilation per convolution layer (dcnn1) or residual block (dcnn2).
    """

    architecture: Architecture = Architecture.LSTM
    hidden: tuple[int, ...] = (64, 64)
    head: tuple[int, ...] = (64,)
    filters: int = 32
    width: int = 3
    dilations: tuple[int, ...] = (2,)
    dropout: float = 0.5
    # unscented filter settings (ukf3 only)
    process_noise: float = 1e-3
    sigma_alpha: float = 1.0
    sigma_beta: float = 2.0
    sigma_kappa: float = 0.0
    innovation_window: int = 64

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        for name in ("hidden", "head", "dilations"):
            object.__setattr__(self, name, tuple(int(v) for v in getattr(self, name)))
        if not 0 <= self.dropout < 1:
            raise ValueError("dropout must be in [0, 1)")
        if self.architecture is Architecture.LSTM and not self.hidden:
            raise ValueError("lstm needs at least one layer")
        if self.architecture in (Architecture.DCNN1, Architecture.DCNN2) and not self.dilations:
            raise ValueError("dcnn needs at least one dilation")

    @classmethod
    def default(cls, architecture: Architecture | str, **overrides) -> "ModelSpec":
        arch = Architecture(architecture)
        base = {
            Architecture.UKF3: dict(hidden=(), head=(), dilations=()),
            Architecture.DNN: dict(hidden=(512, 256), head=()),
            Architecture.LSTM: dict(hidden=(64, 64), head=(64,)),
            Architecture.DCNN1: dict(hidden=(), head=(256,), filters=32, width=3, dilations=(2,)),
            Architecture.DCNN2: dict(hidden=(), head=(), filters=32, width=2, dilations=(1, 2)),
        }[arch]
        return replace(cls(architecture=arch, **base), **overrides)

    @property
    def is_neural(self) -> bool:
        return self.architecture in NEURAL

    def to_dict(self) -> dict:
        d = asdict(self)
        d["architecture"] = self.architecture.value
        for k in ("hidden", "head", "dilations"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**d)


class Optimizer(str, enum.Enum):
    SGD = "sgd"
    ADAM = "adam"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: Optimizer = Optimizer.ADAM
    val_split: float = 0.2
    stride: int = N_OUTPUT
    seed: int = 0
    max_windows: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "optimizer", Optimizer(self.optimizer))
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0 < self.val_split < 1:
            raise ValueError("val_split must be in (0, 1)")
        if self.batch_size < 1 or self.stride < 1:
            raise ValueError("batch_size and stride must be >= 1")
