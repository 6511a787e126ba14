"""Binary model format.

Little-endian layout:

    magic "WSG1" | u32 version
    u8 J | u8 R | u8 D | u8 pool_factor | u8 scale_rule | u8 color | u8 channels
    u8 n_scales | n_scales x u16 image scale
    u32 m_tilde | u32 feature dim m | f32 gamma | u64 rff seed | u8 PRNG id
    u16 K | K x (u16 byte length, UTF-8 class name)
    K x m_tilde f32 W (row-major) | K f32 v
    u64 checksum (BLAKE2b, 8-byte digest of the W and v bytes)

G and b are not stored; they are regenerated from the seed when the file is read.
"""
from __future__ import annotations

import hashlib
import logging
import math
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..models import ColorConversion, ExtractorConfig, LinearModel, ModelBundle, RffConfig, ScaleRule
from . import rff
from .feature_extractor import per_channel_map_count

logger = logging.getLogger(__name__)

MAGIC = b"WSG1"
FORMAT_VERSION = 1

_SCALE_RULES = [ScaleRule.NON_DECREASING, ScaleRule.ALL]
_COLORS = [ColorConversion.RAW, ColorConversion.YUV]
_F32 = np.dtype("<f4")


class ModelFormatError(ValueError):
    pass


class BadMagicError(ModelFormatError):
    pass


class UnsupportedVersionError(ModelFormatError):
    pass


class ChecksumMismatchError(ModelFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass


def payload_size(class_count: int, m_tilde: int) -> int:
    return 4 * class_count * (m_tilde + 1)


def _checksum(payload: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def to_storage_precision(model: LinearModel) -> LinearModel:
    return LinearModel(np.asarray(model.W, dtype=_F32), np.asarray(model.v, dtype=_F32))


def encode_model(bundle: ModelBundle) -> bytes:
    ext, cfg = bundle.extractor, bundle.rff
    model = to_storage_precision(bundle.model)
    if model.input_dim != cfg.m_tilde:
        raise ValueError(f"model input dimension {model.input_dim} does not match m_tilde {cfg.m_tilde}")
    if len(bundle.class_names) != model.class_count:
        raise ValueError(f"{len(bundle.class_names)} class names for {model.class_count} classes")

    parts = [
        struct.pack("<4sI", MAGIC, FORMAT_VERSION),
        struct.pack(
            "<7B",
            ext.J,
            ext.R,
            ext.D,
            ext.pool_factor,
            _SCALE_RULES.index(ext.scale_rule),
            _COLORS.index(bundle.color),
            bundle.channels,
        ),
        struct.pack(f"<B{len(ext.image_scales)}H", len(ext.image_scales), *ext.image_scales),
        struct.pack("<IIfQB", cfg.m_tilde, bundle.feature_dim, cfg.gamma, cfg.seed, rff.PRNG_PCG64),
        struct.pack("<H", model.class_count),
    ]
    for name in bundle.class_names:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)) + encoded)
    payload = model.W.astype(_F32).tobytes(order="C") + model.v.astype(_F32).tobytes()
    parts.append(payload)
    parts.append(struct.pack("<Q", _checksum(payload)))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.data):
            raise TruncatedModelError(f"model file ends at byte {len(self.data)}, needed {self.offset + size}")
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_model(data: bytes) -> ModelBundle:
    reader = _Reader(data)
    magic, version = reader.unpack("<4sI")
    if magic != MAGIC:
        raise BadMagicError(f"not a model file: magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"model format version {version} is not supported (expected {FORMAT_VERSION})")

    J, R, D, pool, rule, color, channels = reader.unpack("<7B")
    (n_scales,) = reader.unpack("<B")
    scales = reader.unpack(f"<{n_scales}H")
    m_tilde, feature_dim, gamma, seed, prng = reader.unpack("<IIfQB")
    (class_count,) = reader.unpack("<H")
    if channels < 1 or class_count < 1 or m_tilde < 1:
        raise ModelFormatError(
            f"invalid model header: {channels} channels, {class_count} classes, {m_tilde} random features"
        )
    if not (math.isfinite(gamma) and gamma > 0):
        raise ModelFormatError(f"invalid model header: gamma {gamma}")
    try:
        names = [reader.take(reader.unpack("<H")[0]).decode("utf-8") for _ in range(class_count)]
    except UnicodeDecodeError as exc:
        raise ModelFormatError(f"class name is not valid UTF-8: {exc}") from exc
    payload = reader.take(payload_size(class_count, m_tilde))
    (stored,) = reader.unpack("<Q")
    if stored != _checksum(payload):
        raise ChecksumMismatchError("model weights do not match the stored checksum")
    if reader.offset != len(data):
        raise ModelFormatError(f"{len(data) - reader.offset} unexpected trailing bytes")
    if prng != rff.PRNG_PCG64:
        raise ModelFormatError(f"unknown random generator id {prng}")

    try:
        extractor = ExtractorConfig(J, R, D, pool, tuple(scales), _SCALE_RULES[rule])
        rff_config = RffConfig(m_tilde, float(gamma), seed)
        conversion = _COLORS[color]
    except (ValueError, IndexError) as exc:
        raise ModelFormatError(f"invalid configuration in model header: {exc}") from exc
    expected_dim = channels * len(scales) * per_channel_map_count(extractor)
    if feature_dim != expected_dim:
        raise ModelFormatError(f"stored feature dimension {feature_dim} != {expected_dim} implied by the header")

    weights = np.frombuffer(payload, dtype=_F32)
    split = class_count * m_tilde
    model = LinearModel(weights[:split].reshape(class_count, m_tilde).copy(), weights[split:].copy())
    return ModelBundle(extractor, channels, conversion, rff_config, feature_dim, names, model)


def serialize_model(bundle: ModelBundle, path: str | Path) -> int:
    """Write atomically; returns the file size in bytes."""
    path = Path(path)
    data = encode_model(bundle)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.info("wrote model %s (%d bytes, %d classes, m~=%d)", path, len(data), bundle.class_count, bundle.rff.m_tilde)
    return len(data)


def deserialize_model(path: str | Path) -> ModelBundle:
    bundle = decode_model(Path(path).read_bytes())
    bundle.projection = rff.generate(bundle.rff, bundle.feature_dim)
    return bundle
