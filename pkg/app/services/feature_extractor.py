"""Tree-structured Haar feature extractor.

Every tree node runs one SWT: its approximation becomes the node's feature map and
the moduli of its details feed the children. Pooling (subsampling by pool_factor)
happens only between the first and second layer. All maps are bilinearly
interpolated back to the input size and stacked per pixel.
"""
from __future__ import annotations

import logging

import numpy as np
from numpy.typing import NDArray
from scipy import ndimage

from ..models import (
    DETAIL_ORIENTATIONS,
    ExtractorConfig,
    FeatureKey,
    FeatureStack,
    Image,
    PathId,
    Plane,
    ScaleRule,
)
from .haar_swt import lowpass_cascade, swt2d

logger = logging.getLogger(__name__)


def subsample(plane: Plane, s: int) -> Plane:
    if s < 1:
        raise ValueError(f"subsampling factor must be >= 1, got {s}")
    height, width = plane.shape
    if height % s or width % s:
        raise ValueError(f"plane of size {width}x{height} is not divisible by {s}")
    return plane[::s, ::s]


def bilinear_upsample(plane: Plane, target_w: int, target_h: int) -> Plane:
    """Align-corners bilinear interpolation: target t maps to source t * (src - 1) / (tgt - 1)."""
    src_h, src_w = plane.shape
    if target_w < src_w or target_h < src_h:
        raise ValueError(f"cannot upsample {src_w}x{src_h} to smaller {target_w}x{target_h}")
    if (target_h, target_w) == (src_h, src_w):
        return np.array(plane, dtype=np.float64)

    def axis_coords(src: int, tgt: int) -> NDArray[np.float64]:
        if src == 1 or tgt == 1:
            return np.zeros(tgt)
        return np.arange(tgt) * ((src - 1) / (tgt - 1))

    rows, cols = np.meshgrid(axis_coords(src_h, target_h), axis_coords(src_w, target_w), indexing="ij")
    return ndimage.map_coordinates(np.asarray(plane, dtype=np.float64), [rows, cols], order=1, mode="nearest")


def _second_layer_scales(j1: int, config: ExtractorConfig) -> range:
    if config.scale_rule is ScaleRule.NON_DECREASING:
        return range(j1, config.J + 1)
    return range(1, config.J + 1)


def per_channel_map_count(config: ExtractorConfig) -> int:
    R, J = config.R, config.J
    if config.D == 1:
        return 1 + R * J
    if config.scale_rule is ScaleRule.ALL:
        return 1 + R * J + R * R * J * J
    return 1 + R * J + R * R * J * (J + 1) // 2


def enumerate_paths(config: ExtractorConfig) -> list[PathId]:
    root = PathId.of()
    first = [root.child(j, r) for j in range(1, config.J + 1) for r in DETAIL_ORIENTATIONS]
    second: list[PathId] = []
    if config.D == 2:
        second = [
            path.child(j2, r2)
            for path in first
            for j2 in _second_layer_scales(path.entries[0][0], config)
            for r2 in DETAIL_ORIENTATIONS
        ]
    return [root, *first, *second]


def _channel_maps(plane: Plane, config: ExtractorConfig) -> list[tuple[PathId, Plane]]:
    """Feature maps of one channel at their native (possibly pooled) resolution."""
    J = config.J
    root = swt2d(plane, J)
    maps: list[tuple[PathId, Plane]] = [(PathId.of(), root.approx.plane)]
    for j1 in range(1, J + 1):
        for r1 in DETAIL_ORIENTATIONS:
            path = PathId.of((j1, r1))
            propagated = subsample(np.abs(root.detail(j1, r1)), config.pool_factor)
            if config.D == 1:
                maps.append((path, lowpass_cascade(propagated, J)))
                continue
            node = swt2d(propagated, J)
            maps.append((path, node.approx.plane))
            for j2 in _second_layer_scales(j1, config):
                for r2 in DETAIL_ORIENTATIONS:
                    leaf = np.abs(node.detail(j2, r2))
                    maps.append((path.child(j2, r2), lowpass_cascade(leaf, J)))
    maps.sort(key=lambda item: item[0])
    return maps


def extract_channel(plane: Plane, config: ExtractorConfig) -> list[tuple[PathId, Plane]]:
    height, width = plane.shape
    if height % config.pool_factor or width % config.pool_factor:
        raise ValueError(f"plane of size {width}x{height} is not divisible by pool factor {config.pool_factor}")
    return [
        (path, fmap if fmap.shape == plane.shape else bilinear_upsample(fmap, width, height))
        for path, fmap in _channel_maps(plane, config)
    ]


def extract_image(image: Image, config: ExtractorConfig) -> FeatureStack:
    channels, height, width = image.channels.shape
    if channels < 1 or height < 1 or width < 1:
        raise ValueError("cannot extract features from an empty image")
    multiple = config.padding_multiple
    padded = np.pad(
        np.asarray(image.channels, dtype=np.float64),
        ((0, 0), (0, -height % multiple), (0, -width % multiple)),
        mode="wrap",
    )
    padded_h, padded_w = padded.shape[1:]

    count = channels * len(config.image_scales) * per_channel_map_count(config)
    values = np.empty((count, height, width))
    keys: list[FeatureKey] = []
    for scale in config.image_scales:
        for channel in range(channels):
            for path, fmap in _channel_maps(subsample(padded[channel], scale), config):
                if fmap.shape != (padded_h, padded_w):
                    fmap = bilinear_upsample(fmap, padded_w, padded_h)
                values[len(keys)] = fmap[:height, :width]
                keys.append(FeatureKey(channel, scale, path))
    logger.debug("extracted %d feature maps from a %dx%d image", count, width, height)
    return FeatureStack(tuple(keys), values)


def pixel_feature(stack: FeatureStack, i: int, j: int) -> NDArray[np.float64]:
    if not (0 <= i < stack.height and 0 <= j < stack.width):
        raise IndexError(f"pixel ({i}, {j}) outside a {stack.width}x{stack.height} stack")
    return stack.values[:, i, j].copy()


def pixel_features(stack: FeatureStack, rows: NDArray[np.intp], cols: NDArray[np.intp]) -> NDArray[np.float64]:
    """Feature vectors of several pixels as an (n, m) matrix."""
    return np.ascontiguousarray(stack.values[:, rows, cols].T)


def feature_matrix(stack: FeatureStack) -> NDArray[np.float64]:
    """All pixel feature vectors in row-major pixel order, shape (H * W, m)."""
    return stack.values.reshape(len(stack), -1).T


def feature_names(stack: FeatureStack) -> list[str]:
    return [str(key) for key in stack.keys]
