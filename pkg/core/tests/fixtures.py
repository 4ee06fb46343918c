"""Small synthetic datasets and networks shared by the test modules."""
from pathlib import Path

import numpy as np

from core.choices import NetworkKind
from core.layers import ClassifierLayer, Conv2dLayer, DenseFcLayer
from core.mnist import CANONICAL_FILES, DataSplit, ImageSet, write_idx
from core.network import Network, temp_classifier


def synthetic_images(count, num_classes=10, rows=28, cols=28, seed=0, first_id=0) -> ImageSet:
    """Noise images with a bright class-specific band, quantised to 1/255 steps."""
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.arange(count, dtype=np.int64) % num_classes
    pixels = rng.random((count, rows, cols)) * 0.5
    band = max(rows // num_classes, 1)
    for i, label in enumerate(labels):
        start = (label * band) % rows
        pixels[i, start:start + band, :] += 0.5
    pixels = (np.rint(pixels * 255.0) / 255.0).astype(np.float32)
    return ImageSet(pixels, labels, np.arange(first_id, first_id + count, dtype=np.int64))


def synthetic_split(train=30, validation=10, test=10, num_classes=10, rows=28, cols=28) -> DataSplit:
    return DataSplit(
        train=synthetic_images(train, num_classes, rows, cols, seed=1),
        validation=synthetic_images(validation, num_classes, rows, cols, seed=2, first_id=train),
        test=synthetic_images(test, num_classes, rows, cols, seed=3),
    )


def vector_images(count, num_classes=2, size=4, seed=0) -> ImageSet:
    """Linearly separable vectors: class c lights feature c."""
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.arange(count, dtype=np.int64) % num_classes
    pixels = rng.random((count, size)) * 0.2
    pixels[np.arange(count), labels] += 1.0
    return ImageSet(pixels.astype(np.float32), labels, np.arange(count, dtype=np.int64))


def tiny_network(rng=None, inputs=4, hidden=6, classes=2) -> Network:
    network = Network(
        NetworkKind.CUSTOM,
        [DenseFcLayer(hidden, inputs), ClassifierLayer(classes, hidden)],
        input_shape=(inputs,),
    )
    if rng is not None:
        network.initialize(rng)
    return network


def tiny_seed(with_temp_classifier=True, rng=None, temp_classifier_fan_in=None, num_classes=3):
    """Seed network for 4x4 images: one 2x2 stride 2 convolution, 8 source outputs."""
    layers = [Conv2dLayer(2, 2, 2, (1, 4, 4), stride=2)]
    if with_temp_classifier:
        layers.append(temp_classifier(8, num_classes, temp_classifier_fan_in))
    network = Network(NetworkKind.SEED, layers, (1, 4, 4))
    if rng is not None:
        network.initialize(rng)
    return network


def write_mnist_dir(path, train=40, test=10) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    write_idx(
        synthetic_images(train, seed=1),
        path / CANONICAL_FILES["train_images"], path / CANONICAL_FILES["train_labels"],
    )
    write_idx(
        synthetic_images(test, seed=3),
        path / CANONICAL_FILES["test_images"], path / CANONICAL_FILES["test_labels"],
    )
    return path
