"""2D stationary Haar wavelet transform (algorithme à trous) and its operation-count model.

The filters are h = (1/2, 1/2) and g = (1/2, -1/2). With this normalisation
|H|^2 + |G|^2 = 1 at every frequency, so each level of the separable filter bank
is a tight frame and the transform conserves energy exactly. All convolutions are
circular; a level-j filter reads samples at offsets {0, +2^(j-1)}.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from ..models import DETAIL_ORIENTATIONS, ExtractorConfig, Orientation, Plane, ScaleRule

logger = logging.getLogger(__name__)

LOWPASS = np.array([0.5, 0.5])
HIGHPASS = np.array([0.5, -0.5])

# (row filter, column filter) per orientation, 0 = lowpass, 1 = highpass.
# Rows (axis 1) are filtered first, then columns (axis 0).
_ORIENTATION_BRANCHES = {
    Orientation.HORIZONTAL: (0, 1),
    Orientation.VERTICAL: (1, 0),
    Orientation.DIAGONAL: (1, 1),
}


@dataclass(slots=True, frozen=True)
class Subband:
    scale: int
    orientation: Orientation
    plane: Plane


@dataclass(slots=True)
class SwtPyramid:
    J: int
    details: list[Subband]
    approx: Subband

    def detail(self, scale: int, orientation: Orientation) -> Plane:
        if not 1 <= scale <= self.J or orientation is Orientation.APPROX:
            raise ValueError(f"no detail subband at scale {scale}, orientation {orientation.name}")
        return self.details[3 * (scale - 1) + int(orientation)].plane

    @property
    def subbands(self) -> list[Subband]:
        return [*self.details, self.approx]


@dataclass(slots=True, frozen=True)
class EnergyRatio:
    ratio: float
    degenerate: bool = False

    def __float__(self) -> float:
        return self.ratio


@dataclass(slots=True)
class OpReport:
    swt_additions: float = 0.0
    chi_additions: float = 0.0
    abs_ops: float = 0.0
    interpolation_ops: float = 0.0
    total_ops: float = field(init=False, default=0.0)

    def __post_init__(self) -> None:
        self.total_ops = self.swt_additions + self.chi_additions + self.abs_ops + self.interpolation_ops

    def scaled(self, factor: float) -> OpReport:
        return OpReport(
            self.swt_additions * factor,
            self.chi_additions * factor,
            self.abs_ops * factor,
            self.interpolation_ops * factor,
        )

    def __add__(self, other: OpReport) -> OpReport:
        return OpReport(
            self.swt_additions + other.swt_additions,
            self.chi_additions + other.chi_additions,
            self.abs_ops + other.abs_ops,
            self.interpolation_ops + other.interpolation_ops,
        )


def haar_kernels() -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    return LOWPASS.copy(), HIGHPASS.copy()


def _as_plane(plane: NDArray) -> Plane:
    values = np.asarray(plane, dtype=np.float64)
    if values.ndim != 2 or 0 in values.shape:
        raise ValueError(f"expected a non-empty 2D plane, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("plane contains non-finite values")
    return values


def _check_levels(J: int) -> None:
    if J < 1:
        raise ValueError(f"scale count J must be >= 1, got {J}")


def _filter(x: Plane, taps: NDArray[np.float64], dilation: int, axis: int) -> Plane:
    # y[n] = taps[0] * x[n] + taps[1] * x[n + dilation], indices taken modulo the length
    return taps[0] * x + taps[1] * np.roll(x, -dilation, axis=axis)


def _lowpass_level(x: Plane, dilation: int) -> Plane:
    return _filter(_filter(x, LOWPASS, dilation, axis=1), LOWPASS, dilation, axis=0)


def swt2d(plane: NDArray, J: int) -> SwtPyramid:
    _check_levels(J)
    approx = _as_plane(plane)
    details: list[Subband] = []
    for level in range(1, J + 1):
        dilation = 2 ** (level - 1)
        rows_low = _filter(approx, LOWPASS, dilation, axis=1)
        rows_high = _filter(approx, HIGHPASS, dilation, axis=1)
        details.append(Subband(level, Orientation.HORIZONTAL, _filter(rows_low, HIGHPASS, dilation, axis=0)))
        details.append(Subband(level, Orientation.VERTICAL, _filter(rows_high, LOWPASS, dilation, axis=0)))
        details.append(Subband(level, Orientation.DIAGONAL, _filter(rows_high, HIGHPASS, dilation, axis=0)))
        approx = _filter(rows_low, LOWPASS, dilation, axis=0)
    return SwtPyramid(J, details, Subband(J, Orientation.APPROX, approx))


def lowpass_cascade(plane: NDArray, J: int) -> Plane:
    """Level-J approximation only; bit-identical to swt2d(plane, J).approx."""
    _check_levels(J)
    approx = _as_plane(plane)
    for level in range(1, J + 1):
        approx = _lowpass_level(approx, 2 ** (level - 1))
    return approx


def _dilated(taps: NDArray[np.float64], dilation: int) -> NDArray[np.float64]:
    out = np.zeros(dilation + 1)
    out[0], out[dilation] = taps
    return out


def equivalent_filters(level: int) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Expanded 1D lowpass/highpass taps of the cascade up to `level`, indexed by offset."""
    low = np.ones(1)
    for j in range(1, level):
        low = np.convolve(low, _dilated(LOWPASS, 2 ** (j - 1)))
    dilation = 2 ** (level - 1)
    return np.convolve(low, _dilated(LOWPASS, dilation)), np.convolve(low, _dilated(HIGHPASS, dilation))


def _circular_correlate(x: Plane, kernel: NDArray[np.float64]) -> Plane:
    out = np.zeros_like(x)
    for a, b in zip(*np.nonzero(kernel)):
        out += kernel[a, b] * np.roll(x, (-a, -b), axis=(0, 1))
    return out


def swt2d_direct(plane: NDArray, J: int) -> SwtPyramid:
    """Reference transform: one explicit circular correlation per subband, no recursion."""
    _check_levels(J)
    x = _as_plane(plane)
    details: list[Subband] = []
    for level in range(1, J + 1):
        filters = equivalent_filters(level)
        for orientation in DETAIL_ORIENTATIONS:
            row_branch, col_branch = _ORIENTATION_BRANCHES[orientation]
            kernel = np.outer(filters[col_branch], filters[row_branch])
            details.append(Subband(level, orientation, _circular_correlate(x, kernel)))
    low, _ = equivalent_filters(J)
    return SwtPyramid(J, details, Subband(J, Orientation.APPROX, _circular_correlate(x, np.outer(low, low))))


def bessel_energy_ratio(pyramid: SwtPyramid, plane: NDArray) -> EnergyRatio:
    x = _as_plane(plane)
    input_energy = float(np.sum(x * x))
    if input_energy == 0.0:
        logger.warning("energy ratio requested for a zero-energy plane; reporting 1 by convention")
        return EnergyRatio(1.0, degenerate=True)
    output_energy = sum(float(np.sum(s.plane * s.plane)) for s in pyramid.subbands)
    return EnergyRatio(output_energy / input_energy)


def paper_op_count(width: int, height: int, J: int, R: int, channels: int) -> OpReport:
    """Published per-image cost formulas for a D=2 tree with all R^2 J^2 second-layer maps."""
    if width < 1 or height < 1:
        raise ValueError(f"image size must be positive, got {width}x{height}")
    wh = width * height
    per_channel = OpReport(
        swt_additions=6 * wh * J + 1.5 * wh * R * J**2,
        chi_additions=0.5 * wh * J * R**2 * J**2,
        abs_ops=wh * R * J * (1 + R * J / 4),
        interpolation_ops=8 * wh * (R * J + 1) * R * J,
    )
    return per_channel.scaled(channels)


def second_layer_count(config: ExtractorConfig) -> int:
    if config.D < 2:
        return 0
    R, J = config.R, config.J
    if config.scale_rule is ScaleRule.ALL:
        return R * R * J * J
    return R * R * J * (J + 1) // 2


def configured_op_count(width: int, height: int, config: ExtractorConfig, channels: int) -> OpReport:
    """Cost of the extractor as configured, using the same unit costs as paper_op_count.

    An SWT level costs 6 additions per pixel, a lowpass-only level 2, every propagated
    pixel one absolute value and every interpolated output pixel 8 operations.
    """
    if width < 1 or height < 1:
        raise ValueError(f"image size must be positive, got {width}x{height}")
    R, J = config.R, config.J
    first_layer = R * J
    second_layer = second_layer_count(config)
    pool_area = config.pool_factor**2
    full = width * height
    report = OpReport()
    for scale in config.image_scales:
        pixels = full / scale**2
        pooled = pixels / pool_area
        # depth-1 nodes need a full SWT only when they have children
        node_cost = 6 * J if config.D == 2 else 2 * J
        interpolated = first_layer + second_layer + (1 if scale > 1 else 0)
        report = report + OpReport(
            swt_additions=6 * pixels * J + first_layer * pooled * node_cost,
            chi_additions=second_layer * pooled * 2 * J,
            abs_ops=first_layer * pixels + second_layer * pooled,
            interpolation_ops=8 * full * interpolated,
        )
    return report.scaled(channels)
