"""MNIST IDX ingestion, the train/validation/test split and shuffling."""
import gzip
import logging
import struct
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetError, IdxFormatError
from .tensor import DTYPE, make_rng

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
NUM_CLASSES = 10

TRAIN_COUNT = 57_000
VALIDATION_COUNT = 3_000

CANONICAL_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}

OFFICIAL_TRAIN_CLASS_COUNTS = (5923, 6742, 5958, 6131, 5842, 5421, 5918, 6265, 5851, 5949)


@dataclass(frozen=True)
class LabeledImage:
    pixels: np.ndarray
    label: int
    index: int


@dataclass(frozen=True, eq=False)
class ImageSet:
    """Column-wise storage of labelled images.

    ``ids`` are the record positions in the source IDX file; they survive
    splitting and shuffling and identify members across ANG iterations.
    """

    pixels: np.ndarray
    labels: np.ndarray
    ids: np.ndarray

    @classmethod
    def empty(cls, rows=28, cols=28):
        return cls(
            np.zeros((0, rows, cols), dtype=DTYPE),
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
        )

    def __len__(self):
        return int(self.labels.shape[0])

    def __getitem__(self, position: int) -> LabeledImage:
        return LabeledImage(self.pixels[position], int(self.labels[position]), int(self.ids[position]))

    def __iter__(self):
        for position in range(len(self)):
            yield self[position]

    def take(self, positions) -> "ImageSet":
        positions = np.asarray(positions, dtype=np.int64)
        return ImageSet(self.pixels[positions], self.labels[positions], self.ids[positions])

    def class_positions(self, class_id: int) -> np.ndarray:
        return np.flatnonzero(self.labels == class_id)

    def position_of(self, member_id: int) -> int:
        hits = np.flatnonzero(self.ids == member_id)
        if hits.size == 0:
            raise DatasetError(f"member {member_id} not in image set")
        return int(hits[0])


@dataclass(frozen=True)
class DataSplit:
    train: ImageSet
    validation: ImageSet
    test: ImageSet


def _read_bytes(path) -> bytes:
    path = Path(path)
    if not path.exists():
        gz = path.with_name(path.name + ".gz")
        if gz.exists():
            path = gz
        else:
            raise FileNotFoundError(f"IDX file not found: {path}")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as handle:
            return handle.read()
    return path.read_bytes()


def _header(buf: bytes, path, fmt: str):
    size = struct.calcsize(fmt)
    if len(buf) < size:
        raise IdxFormatError(path, len(buf), "truncated header")
    return struct.unpack_from(fmt, buf, 0), size


def load_idx(images_path, labels_path, num_classes: int = NUM_CLASSES) -> ImageSet:
    # [offset] [type]   [value]
    # 0000     int32    0x00000803 magic (images) / 0x00000801 (labels)
    # 0004     int32    item count
    # 0008     int32    rows     (images only)
    # 0012     int32    columns  (images only)
    # then one unsigned byte per pixel / label
    image_buf = _read_bytes(images_path)
    label_buf = _read_bytes(labels_path)

    (magic, count, rows, cols), offset = _header(image_buf, images_path, ">IIII")
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(images_path, 0, f"bad magic {magic}")
    expected = count * rows * cols
    if len(image_buf) - offset < expected:
        raise IdxFormatError(images_path, len(image_buf), f"truncated pixel data, expected {expected} bytes")

    (label_magic, label_count), label_offset = _header(label_buf, labels_path, ">II")
    if label_magic != LABEL_MAGIC:
        raise IdxFormatError(labels_path, 0, f"bad magic {label_magic}")
    if label_count != count:
        raise IdxFormatError(labels_path, 4, f"count mismatch: {label_count} labels for {count} images")
    if len(label_buf) - label_offset < count:
        raise IdxFormatError(labels_path, len(label_buf), f"truncated label data, expected {count} bytes")

    raw = np.frombuffer(image_buf, dtype=np.uint8, count=expected, offset=offset)
    pixels = (raw.reshape(count, rows, cols) / 255.0).astype(DTYPE)
    labels = np.frombuffer(label_buf, dtype=np.uint8, count=count, offset=label_offset).astype(np.int64)
    bad = np.flatnonzero(labels >= num_classes)
    if bad.size:
        raise IdxFormatError(labels_path, label_offset + int(bad[0]), f"label {labels[bad[0]]} out of range")

    return ImageSet(pixels, labels, np.arange(count, dtype=np.int64))


def write_idx(images: ImageSet, images_path, labels_path) -> None:
    count = len(images)
    rows, cols = images.pixels.shape[1:]
    raw = np.rint(images.pixels.astype(np.float64) * 255.0).astype(np.uint8)
    Path(images_path).write_bytes(struct.pack(">IIII", IMAGE_MAGIC, count, rows, cols) + raw.tobytes())
    Path(labels_path).write_bytes(
        struct.pack(">II", LABEL_MAGIC, count) + images.labels.astype(np.uint8).tobytes()
    )


def split(dataset: ImageSet, train_count: int, val_count: int, seed: int = 0, test: ImageSet | None = None) -> DataSplit:
    """First ``train_count`` / last ``val_count`` records of a seeded permutation."""
    if train_count < 0 or val_count < 0 or train_count + val_count != len(dataset):
        raise DatasetError(
            f"split sizes {train_count} + {val_count} do not add up to {len(dataset)} images"
        )
    order = make_rng(seed).permutation(len(dataset))
    rows, cols = dataset.pixels.shape[1:]
    return DataSplit(
        train=dataset.take(order[:train_count]),
        validation=dataset.take(order[train_count:]),
        test=test if test is not None else ImageSet.empty(rows, cols),
    )


def shuffle(images: ImageSet, rng: np.random.Generator) -> ImageSet:
    """Returns a permuted copy; ``images`` is left untouched."""
    return images.take(rng.permutation(len(images)))


def label_histogram(images: ImageSet, num_classes: int = NUM_CLASSES) -> list[int]:
    return np.bincount(images.labels, minlength=num_classes).tolist()


def load_mnist(data_dir, seed: int = 0, train_count=None, val_count=VALIDATION_COUNT) -> DataSplit:
    """Loads the four canonical files; without ``train_count`` every non-validation image trains."""
    data_dir = Path(data_dir)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"MNIST data directory not found: {data_dir}")
    started = time.time()
    train = load_idx(data_dir / CANONICAL_FILES["train_images"], data_dir / CANONICAL_FILES["train_labels"])
    test = load_idx(data_dir / CANONICAL_FILES["test_images"], data_dir / CANONICAL_FILES["test_labels"])
    if len(train) == sum(OFFICIAL_TRAIN_CLASS_COUNTS) and tuple(label_histogram(train)) != OFFICIAL_TRAIN_CLASS_COUNTS:
        logger.warning("training label histogram differs from the official MNIST counts: %s", label_histogram(train))
    if train_count is None:
        train_count = len(train) - val_count
    data = split(train, train_count, val_count, seed=seed, test=test)
    logger.info(
        "MNIST loaded from %s: train=%d validation=%d test=%d (%.2fs)",
        data_dir, len(data.train), len(data.validation), len(data.test), time.time() - started,
    )
    return data
