"""MNIST-format IDX ingestion, row normalization, targets, and pixel dropout.

IDX files are big-endian: images carry magic 0x00000803 followed by u32
count/rows/cols and the pixel bytes; labels carry magic 0x00000801, a u32
count, and the label bytes.  Gzipped files are detected by their leading
magic bytes and decompressed transparently.
"""

from __future__ import annotations

import gzip
import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

# Largest payload a header may declare before it is treated as corrupt.
_MAX_PAYLOAD = 1 << 40


class IdxError(ValueError):
    """Malformed IDX file."""


class IdxMagicError(IdxError):
    """Magic number does not match the expected IDX record type."""


class IdxTruncatedError(IdxError):
    """File ends before the declared payload."""


class IdxDimensionError(IdxError):
    """Declared dimensions are zero or implausibly large."""


@dataclass
class RawDataset:
    """Raw 8-bit images paired with integer class labels."""

    images: np.ndarray  # N x M, uint8
    labels: np.ndarray  # N, int64, each in [0, num_classes)
    num_classes: int

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.uint8)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.images.ndim != 2 or self.images.shape[1] < 1:
            raise ValueError(f"images must be N x M with M >= 1, got shape {self.images.shape}")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.images.shape[0]:
            raise ValueError(
                f"image/label count mismatch: {self.images.shape[0]} images, "
                f"{self.labels.shape[0]} labels"
            )
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(
                f"label out of range: values span [{self.labels.min()}, {self.labels.max()}] "
                f"but num_classes is {self.num_classes}"
            )


@dataclass
class Dataset:
    """Normalized samples (zero-mean, unit-norm rows) with class labels.

    Rows that came from all-constant images are identically zero; every
    other row has mean 0 and Euclidean norm 1 to within 1e-9.
    """

    x: np.ndarray  # N x M, float64
    labels: np.ndarray  # N, int64
    num_classes: int

    def __post_init__(self):
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.x.ndim != 2:
            raise ValueError(f"samples must be 2-D, got shape {self.x.shape}")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.x.shape[0]:
            raise ValueError(
                f"sample/label count mismatch: {self.x.shape[0]} rows, "
                f"{self.labels.shape[0]} labels"
            )
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError(
                f"label out of range for {self.num_classes} classes: "
                f"[{self.labels.min()}, {self.labels.max()}]"
            )
        if self.x.size:
            norms = np.linalg.norm(self.x, axis=1)
            means = self.x.mean(axis=1)
            ok = (np.abs(means) <= 1e-9) & ((np.abs(norms - 1.0) <= 1e-9) | (norms == 0.0))
            if not ok.all():
                bad = int(np.flatnonzero(~ok)[0])
                raise ValueError(
                    f"row {bad} is not normalized: mean {means[bad]:.3e}, norm {norms[bad]:.17g}"
                )


def _read_maybe_gzipped(path) -> bytes:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:2] == b"\x1f\x8b":
        blob = gzip.decompress(blob)
    return blob


def load_idx_images(path) -> np.ndarray:
    """Load an IDX image file (optionally gzipped) as an N x M uint8 array.

    M is rows*cols of the stored image grid, flattened row-major.
    """
    blob = _read_maybe_gzipped(path)
    if len(blob) < 16:
        raise IdxTruncatedError(f"{path}: image header truncated ({len(blob)} bytes)")
    magic, count, rows, cols = struct.unpack_from(">IIII", blob)
    if magic != IMAGE_MAGIC:
        raise IdxMagicError(f"{path}: bad image magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
    if rows == 0 or cols == 0:
        raise IdxDimensionError(f"{path}: zero image dimensions ({rows}x{cols})")
    expected = count * rows * cols
    if expected > _MAX_PAYLOAD:
        raise IdxDimensionError(f"{path}: declared payload of {expected} bytes is implausible")
    if len(blob) - 16 < expected:
        raise IdxTruncatedError(
            f"{path}: payload truncated, expected {expected} bytes, found {len(blob) - 16}"
        )
    if len(blob) - 16 > expected:
        raise IdxError(f"{path}: {len(blob) - 16 - expected} trailing bytes after payload")
    data = np.frombuffer(blob, dtype=np.uint8, count=expected, offset=16)
    return data.reshape(count, rows * cols).copy()


def load_idx_labels(path) -> np.ndarray:
    """Load an IDX label file (optionally gzipped) as an int64 array."""
    blob = _read_maybe_gzipped(path)
    if len(blob) < 8:
        raise IdxTruncatedError(f"{path}: label header truncated ({len(blob)} bytes)")
    magic, count = struct.unpack_from(">II", blob)
    if magic != LABEL_MAGIC:
        raise IdxMagicError(f"{path}: bad label magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
    if count > _MAX_PAYLOAD:
        raise IdxDimensionError(f"{path}: declared count of {count} labels is implausible")
    if len(blob) - 8 < count:
        raise IdxTruncatedError(
            f"{path}: payload truncated, expected {count} bytes, found {len(blob) - 8}"
        )
    if len(blob) - 8 > count:
        raise IdxError(f"{path}: {len(blob) - 8 - count} trailing bytes after payload")
    return np.frombuffer(blob, dtype=np.uint8, count=count, offset=8).astype(np.int64)


def write_idx_images(images: np.ndarray, path, grid: tuple[int, int] | None = None) -> None:
    """Write an N x M uint8 array as an IDX image file (gzipped if path ends in .gz).

    grid gives the (rows, cols) shape recorded in the header; it defaults to
    (1, M) and must multiply out to M.
    """
    images = np.ascontiguousarray(images, dtype=np.uint8)
    if images.ndim != 2:
        raise ValueError(f"images must be 2-D, got shape {images.shape}")
    n, m = images.shape
    rows, cols = grid if grid is not None else (1, m)
    if rows * cols != m:
        raise ValueError(f"grid {rows}x{cols} does not match image width {m}")
    blob = struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols) + images.tobytes()
    _write_maybe_gzipped(path, blob)


def write_idx_labels(labels: np.ndarray, path) -> None:
    """Write integer labels in [0, 255] as an IDX label file."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() > 255):
        raise ValueError("labels must fit in an unsigned byte")
    blob = struct.pack(">II", LABEL_MAGIC, labels.shape[0]) + labels.astype(np.uint8).tobytes()
    _write_maybe_gzipped(path, blob)


def _write_maybe_gzipped(path, blob: bytes) -> None:
    if str(path).endswith(".gz"):
        with gzip.open(path, "wb") as f:
            f.write(blob)
    else:
        Path(path).write_bytes(blob)


def normalize(raw: RawDataset) -> Dataset:
    """Normalize raw intensities row by row: square root, center, unit-scale.

    The three steps run in exactly this order.  All-constant images (which
    center to the zero vector) skip the final division and come out as zero
    rows; their count is reported through a single RuntimeWarning.
    """
    flat = raw.images.max(axis=1) == raw.images.min(axis=1)
    x = np.sqrt(raw.images.astype(np.float64))
    x -= x.mean(axis=1, keepdims=True)
    x[flat] = 0.0
    norms = np.linalg.norm(x, axis=1)
    np.divide(x, norms[:, None], out=x, where=norms[:, None] != 0.0)
    n_flat = int(flat.sum())
    if n_flat:
        warnings.warn(
            f"{n_flat} all-constant image(s) normalized to zero rows", RuntimeWarning
        )
    return Dataset(x=x, labels=raw.labels.copy(), num_classes=raw.num_classes)


def one_hot_encode(labels, k: int) -> np.ndarray:
    """N x k {0,1} target matrix with a single 1 per row."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {labels.shape}")
    if k < 1:
        raise ValueError(f"class count must be >= 1, got {k}")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ValueError(
            f"label out of range for {k} classes: [{labels.min()}, {labels.max()}]"
        )
    y = np.zeros((labels.shape[0], k))
    y[np.arange(labels.shape[0]), labels] = 1.0
    return y


def zero_pixel_noise(raw: RawDataset, fraction: float, seed: int) -> RawDataset:
    """Zero a random subset of exactly round(fraction·M) pixels in each image.

    Positions are drawn without replacement, independently per image, and
    deterministically from the seed.  This operates on raw intensities,
    before normalization; the original dataset is left untouched.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"noise fraction must lie in [0, 1], got {fraction}")
    n, m = raw.images.shape
    n_zero = int(math.floor(fraction * m + 0.5))  # round half up, not banker's
    images = raw.images.copy()
    if n_zero and n:
        rng = np.random.default_rng(seed)
        # The n_zero smallest of M iid uniforms index a uniform subset.
        scores = rng.random((n, m))
        hit = np.argpartition(scores, n_zero - 1, axis=1)[:, :n_zero]
        np.put_along_axis(images, hit, 0, axis=1)
    return RawDataset(images=images, labels=raw.labels.copy(), num_classes=raw.num_classes)
