# =============================================================================
# hesslab - Datasets
# =============================================================================
"""
MNIST (IDX format) ingestion, the MNIST-2 and random-label variants, and
synthetic Gaussian data.

IDX files are big-endian: a 4-byte magic number whose low byte is the number
of dimensions, one 4-byte size per dimension, then raw unsigned bytes.
"""

import gzip
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import BinaryIO, Optional, Union

import numpy as np
from loguru import logger

from ..core.errors import FormatError, PreconditionError
from ..core.random import make_rng

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
GZIP_MAGIC = b"\x1f\x8b"

PathLike = Union[str, Path]


@dataclass(frozen=True)
class Dataset:
    """Samples as rows of ``inputs`` with integer ``labels`` in ``[0, num_classes)``."""

    inputs: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str

    def __post_init__(self):
        if self.inputs.ndim != 2:
            raise PreconditionError("inputs must be a 2-D array", {"shape": self.inputs.shape})
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise PreconditionError(
                "inputs and labels disagree on sample count",
                {"inputs": self.inputs.shape[0], "labels": self.labels.shape[0]},
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise PreconditionError(
                "label outside [0, num_classes)", {"num_classes": self.num_classes}
            )
        if not np.all(np.isfinite(self.inputs)):
            raise PreconditionError("inputs contain non-finite values")

    @property
    def n_samples(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def dim(self) -> int:
        return int(self.inputs.shape[1])

    def one_hot(self) -> np.ndarray:
        y = np.zeros((self.n_samples, self.num_classes))
        y[np.arange(self.n_samples), self.labels] = 1.0
        return y

    def class_histogram(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def take(self, rows: np.ndarray, name: Optional[str] = None) -> "Dataset":
        return Dataset(
            inputs=self.inputs[rows],
            labels=self.labels[rows],
            num_classes=self.num_classes,
            name=name or self.name,
        )


def _open_maybe_gzip(path: PathLike) -> BinaryIO:
    path = Path(path)
    with open(path, "rb") as f:
        head = f.read(2)
    if head == GZIP_MAGIC:
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_idx(path: PathLike, expected_magic: int) -> np.ndarray:
    with _open_maybe_gzip(path) as f:
        raw = f.read()
    if len(raw) < 4:
        raise FormatError("IDX file too short", {"path": str(path)})
    (magic,) = struct.unpack(">I", raw[:4])
    if magic != expected_magic:
        raise FormatError(
            f"bad IDX magic number 0x{magic:08x} (expected 0x{expected_magic:08x})",
            {"path": str(path)},
        )
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise FormatError("truncated IDX header", {"path": str(path)})
    shape = struct.unpack(f">{ndim}I", raw[4:header_len])
    count = int(np.prod(shape))
    body = np.frombuffer(raw, dtype=np.uint8, offset=header_len)
    if body.size != count:
        raise FormatError(
            "IDX payload size does not match header",
            {"path": str(path), "expected": count, "found": int(body.size)},
        )
    return body.reshape(shape)


def load_idx(
    images_path: PathLike,
    labels_path: PathLike,
    num_classes: int = 10,
    name: str = "mnist",
) -> Dataset:
    """Load an IDX image/label pair; pixels are scaled to [0, 1] and rows flattened row-major."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            "image and label counts differ",
            {"images": int(images.shape[0]), "labels": int(labels.shape[0])},
        )
    inputs = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    logger.info(f"loaded {inputs.shape[0]} samples of dim {inputs.shape[1]} from {images_path}")
    return Dataset(inputs=inputs, labels=labels.astype(np.int64), num_classes=num_classes, name=name)


def write_idx(
    images_path: PathLike,
    labels_path: PathLike,
    images: np.ndarray,
    labels: np.ndarray,
) -> None:
    """Write uint8 images (N x rows x cols) and labels as IDX; ``.gz`` paths are compressed."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)

    def _write(path: PathLike, magic: int, array: np.ndarray) -> None:
        payload = struct.pack(">I", magic) + struct.pack(f">{array.ndim}I", *array.shape) + array.tobytes()
        opener = gzip.open if str(path).endswith(".gz") else open
        with opener(path, "wb") as f:
            f.write(payload)

    _write(images_path, IDX_IMAGES_MAGIC, images)
    _write(labels_path, IDX_LABELS_MAGIC, labels)


def relabel_mnist2(d: Dataset) -> Dataset:
    """Digits 0-4 become class 0 and 5-9 become class 1."""
    if d.num_classes != 10:
        raise PreconditionError("MNIST-2 relabeling needs 10 classes", {"num_classes": d.num_classes})
    return Dataset(
        inputs=d.inputs,
        labels=(d.labels >= 5).astype(np.int64),
        num_classes=2,
        name=f"{d.name}-2",
    )


def randomize_labels(d: Dataset, seed: int) -> Dataset:
    labels = make_rng(seed).integers(0, d.num_classes, size=d.n_samples, dtype=np.int64)
    return replace(d, labels=labels, name=f"{d.name}-random")


def gaussian_synthetic(n_samples: int, dim: int, num_classes: int, seed: int) -> Dataset:
    """Rows i.i.d. N(0, I_dim) with uniform labels."""
    if min(n_samples, dim, num_classes) < 1:
        raise PreconditionError(
            "gaussian_synthetic needs positive counts",
            {"n_samples": n_samples, "dim": dim, "num_classes": num_classes},
        )
    rng = make_rng(seed)
    inputs = rng.standard_normal((n_samples, dim))
    labels = rng.integers(0, num_classes, size=n_samples, dtype=np.int64)
    return Dataset(inputs=inputs, labels=labels, num_classes=num_classes, name="gaussian")


def subset(d: Dataset, n: int, seed: int) -> Dataset:
    """Seeded sample of n distinct rows. Requires 1 <= n <= N; n = 0 is rejected."""
    if not 1 <= n <= d.n_samples:
        raise PreconditionError("subset size out of range", {"n": n, "available": d.n_samples})
    rows = make_rng(seed).permutation(d.n_samples)[:n]
    return d.take(rows)
