from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum, IntEnum
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

Plane = NDArray[np.float64]

VOID_LABEL = 255


class Orientation(IntEnum):
    """Subband orientation; the integer order is the canonical feature order."""

    HORIZONTAL = 0
    VERTICAL = 1
    DIAGONAL = 2
    APPROX = 3

    @property
    def code(self) -> str:
        return "HVDA"[self]


DETAIL_ORIENTATIONS = (Orientation.HORIZONTAL, Orientation.VERTICAL, Orientation.DIAGONAL)


class ScaleRule(str, Enum):
    NON_DECREASING = "non_decreasing"
    ALL = "all"


class ColorMode(str, Enum):
    GRAY = "gray"
    RGB = "rgb"
    RGBA = "rgba"
    YUV = "yuv"
    NIR_R_G_NDSM = "nir-r-g-ndsm"
    RAW = "raw"


class ColorConversion(str, Enum):
    RAW = "raw"
    YUV = "yuv"


def _is_power_of_two(value: int) -> bool:
    return value >= 1 and value & (value - 1) == 0


@dataclass(slots=True, frozen=True)
class ExtractorConfig:
    J: int = 4
    R: int = 3
    D: int = 2
    pool_factor: int = 2
    image_scales: tuple[int, ...] = (1,)
    scale_rule: ScaleRule = ScaleRule.NON_DECREASING

    def __post_init__(self) -> None:
        if self.J < 1:
            raise ValueError(f"J must be >= 1, got {self.J}")
        if self.R != len(DETAIL_ORIENTATIONS):
            raise ValueError(f"separable Haar filters give exactly 3 orientations, got R={self.R}")
        if self.D not in (1, 2):
            raise ValueError(f"tree depth D must be 1 or 2, got {self.D}")
        if self.pool_factor < 1:
            raise ValueError(f"pool_factor must be >= 1, got {self.pool_factor}")
        if not self.image_scales:
            raise ValueError("image_scales must not be empty")
        if any(not _is_power_of_two(s) for s in self.image_scales):
            raise ValueError(f"image scales must be powers of 2, got {self.image_scales}")
        if any(b <= a for a, b in zip(self.image_scales, self.image_scales[1:])):
            raise ValueError(f"image scales must be strictly increasing, got {self.image_scales}")

    @property
    def padding_multiple(self) -> int:
        return self.pool_factor * max(self.image_scales)


@dataclass(slots=True, frozen=True, order=True)
class PathId:
    """Path q_d through the feature tree: a sequence of (scale, orientation) pairs."""

    depth: int
    entries: tuple[tuple[int, Orientation], ...] = ()

    def __post_init__(self) -> None:
        if self.depth != len(self.entries):
            raise ValueError(f"path depth {self.depth} does not match {len(self.entries)} entries")

    @classmethod
    def of(cls, *entries: tuple[int, Orientation]) -> PathId:
        return cls(len(entries), tuple(entries))

    def child(self, scale: int, orientation: Orientation) -> PathId:
        return PathId.of(*self.entries, (scale, orientation))

    def __str__(self) -> str:
        if not self.entries:
            return "root"
        return ".".join(f"{j}{r.code}" for j, r in self.entries)


@dataclass(slots=True, frozen=True)
class FeatureKey:
    channel: int
    scale: int
    path: PathId

    def __str__(self) -> str:
        return f"s{self.scale}/c{self.channel}/{self.path}"


@dataclass(slots=True)
class FeatureStack:
    """Full-resolution feature planes; values[:, i, j] is the feature vector of pixel (i, j)."""

    keys: tuple[FeatureKey, ...]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        if self.values.ndim != 3 or self.values.shape[0] != len(self.keys):
            raise ValueError(
                f"feature values of shape {self.values.shape} do not match {len(self.keys)} keys"
            )

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def __len__(self) -> int:
        return len(self.keys)


@dataclass(slots=True, frozen=True)
class RffConfig:
    m_tilde: int = 5000
    gamma: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.m_tilde < 1:
            raise ValueError(f"m_tilde must be >= 1, got {self.m_tilde}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass(slots=True, frozen=True)
class RffProjection:
    G: NDArray[np.float64]
    b: NDArray[np.float64]

    @property
    def input_dim(self) -> int:
        return self.G.shape[1]

    @property
    def output_dim(self) -> int:
        return self.G.shape[0]


@dataclass(slots=True, frozen=True)
class LinearModel:
    W: NDArray[np.floating]
    v: NDArray[np.floating]

    def __post_init__(self) -> None:
        if self.W.ndim != 2 or self.v.shape != (self.W.shape[0],):
            raise ValueError(f"inconsistent model shapes W{self.W.shape}, v{self.v.shape}")

    @property
    def class_count(self) -> int:
        return self.W.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    @classmethod
    def zeros(cls, class_count: int, input_dim: int) -> LinearModel:
        return cls(np.zeros((class_count, input_dim)), np.zeros(class_count))


@dataclass(slots=True, frozen=True)
class TrainConfig:
    lam: float
    epochs: int = 5
    seed: int = 0
    t0: float | None = None

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.t0 is not None and not self.t0 > 0:
            raise ValueError(f"t0 must be positive, got {self.t0}")


@dataclass(slots=True)
class Image:
    """Multi-channel raster with values in [0, 1]; channels has shape (C, H, W)."""

    channels: NDArray[np.float64]
    mode: ColorMode = ColorMode.RAW

    def __post_init__(self) -> None:
        if self.channels.ndim != 3 or 0 in self.channels.shape:
            raise ValueError(f"image needs shape (C, H, W) with C, H, W >= 1, got {self.channels.shape}")

    @property
    def channel_count(self) -> int:
        return self.channels.shape[0]

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]


@dataclass(slots=True)
class LabelMap:
    labels: NDArray[np.uint8]

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def void_mask(self) -> NDArray[np.bool_]:
        return self.labels == VOID_LABEL


@dataclass(slots=True, frozen=True)
class ManifestRecord:
    image_path: Path
    label_path: Path
    ndsm_path: Path | None = None


@dataclass(slots=True)
class DatasetManifest:
    path: Path | None
    records: list[ManifestRecord]
    class_count: int
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.class_names:
            self.class_names = [f"class_{k}" for k in range(self.class_count)]
        if len(self.class_names) != self.class_count:
            raise ValueError(f"{len(self.class_names)} class names for {self.class_count} classes")

    def subset(self, indices: list[int]) -> DatasetManifest:
        return DatasetManifest(self.path, [self.records[i] for i in indices], self.class_count, self.class_names)

    def __len__(self) -> int:
        return len(self.records)


@dataclass(slots=True)
class ModelBundle:
    """Everything needed to segment an image: configs, class names and the trained layer."""

    extractor: ExtractorConfig
    channels: int
    color: ColorConversion
    rff: RffConfig
    feature_dim: int
    class_names: list[str]
    model: LinearModel
    projection: RffProjection | None = field(default=None, compare=False, repr=False)

    @property
    def class_count(self) -> int:
        return self.model.class_count
