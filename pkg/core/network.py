"""Layer stacks, the baseline, seed and 20 FC architectures, weight accounting and model files."""
import copy
import logging
import struct
import zlib
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .choices import Activation, NetworkKind
from .errors import ChecksumError, ModelFormatError, ShapeError, TruncatedModelError, VersionMismatchError
from .layers import ClassifierLayer, Conv2dLayer, Conv3dLayer, ConvLayer, DenseFcLayer, SparseFcLayer, eq2_connections
from .tensor import ACC_DTYPE, DTYPE, check_finite, cross_entropy, softmax

logger = logging.getLogger(__name__)

MNIST_INPUT = (1, 28, 28)
NUM_CLASSES = 10
TEMP_CLASSIFIER_FAN_IN = 100
EVAL_CHUNK = 500


@dataclass
class LayerSize:
    index: int
    kind: str
    perceptrons: int
    weights: int
    connections: int
    filters: int | None = None
    kernel: int | None = None
    stride: int | None = None
    eq2_connections: float | None = None


@dataclass
class SizeReport:
    network: str
    layers: list[LayerSize] = field(default_factory=list)

    @property
    def total_weights(self) -> int:
        return sum(layer.weights for layer in self.layers)

    @property
    def total_perceptrons(self) -> int:
        return sum(layer.perceptrons for layer in self.layers)

    @property
    def total_connections(self) -> int:
        return sum(layer.connections for layer in self.layers)

    def to_dict(self) -> dict:
        return {
            "network": self.network,
            "layers": [asdict(layer) for layer in self.layers],
            "total_weights": self.total_weights,
            "total_perceptrons": self.total_perceptrons,
            "total_connections": self.total_connections,
        }


class Network:
    def __init__(self, name, layers, input_shape=MNIST_INPUT):
        self.name = str(name)
        self.layers = list(layers)
        self.input_shape = tuple(int(v) for v in input_shape)
        self.validate()

    def __repr__(self):
        return f"Network({self.name!r}, {[layer.kind for layer in self.layers]})"

    def validate(self) -> None:
        shape = self.input_shape
        for index, layer in enumerate(self.layers):
            if isinstance(layer, ConvLayer):
                if layer.input_shape != shape:
                    raise ShapeError(f"layer {index} ({layer.kind}) expects {layer.input_shape}, previous gives {shape}")
                shape = layer.output_shape
            else:
                if layer.input_count != int(np.prod(shape)):
                    raise ShapeError(f"layer {index} ({layer.kind}) expects {layer.input_count} inputs, previous gives {int(np.prod(shape))}")
                shape = (layer.perceptron_count,)

    @property
    def feature_depth(self) -> int:
        """Number of leading convolution layers; the last of them is the source layer."""
        depth = 0
        for layer in self.layers:
            if not isinstance(layer, ConvLayer):
                break
            depth += 1
        return depth

    @property
    def source_size(self) -> int:
        if self.feature_depth == 0:
            return int(np.prod(self.input_shape))
        return int(np.prod(self.layers[self.feature_depth - 1].output_shape))

    @property
    def classifier(self):
        if self.layers and self.layers[-1].is_classifier:
            return self.layers[-1]
        return None

    @property
    def weight_count(self) -> int:
        return sum(layer.weight_count for layer in self.layers)

    def initialize(self, rng) -> "Network":
        for layer in self.layers:
            layer.initialize(rng)
        return self

    def copy(self) -> "Network":
        return copy.deepcopy(self)

    def remove_classifier(self):
        if self.classifier is None:
            raise ShapeError(f"{self.name} has no classifier to remove")
        return self.layers.pop()

    def _batch(self, images) -> np.ndarray:
        x = np.asarray(images)
        if x.size == int(np.prod(self.input_shape)) and x.shape[1:] != self.input_shape:
            # a single sample, possibly without its channel axis
            return x.reshape((1,) + self.input_shape)
        return x.reshape((x.shape[0],) + self.input_shape)

    def forward(self, images, depth=None) -> np.ndarray:
        """Batched forward pass through the first ``depth`` layers (all by default)."""
        x = self._batch(images)
        for layer in self.layers[:depth]:
            x = layer.forward(x)
        return x

    def _chunks(self, images, depth, chunk):
        for start in range(0, len(images), chunk):
            yield self.forward(images[start:start + chunk], depth)

    def source_outputs(self, images, chunk=EVAL_CHUNK) -> np.ndarray:
        depth = self.feature_depth
        parts = [out.reshape(out.shape[0], -1) for out in self._chunks(images, depth, chunk)]
        if not parts:
            return np.zeros((0, self.source_size), dtype=DTYPE)
        return np.concatenate(parts)

    def predict(self, images, chunk=EVAL_CHUNK) -> np.ndarray:
        parts = [np.argmax(out, axis=1) for out in self._chunks(images, None, chunk)]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)

    def train_step(self, image, label: int, learning_rate: float) -> tuple[bool, float]:
        """One per-image SGD step; returns (classified correctly before the update, loss)."""
        activations = [self._batch(image)]
        for layer in self.layers:
            activations.append(layer.forward(activations[-1]))
        logits = activations[-1][0]
        probs = softmax(logits)
        loss = cross_entropy(probs, label)
        check_finite(np.append(logits, loss), f"logits and loss (label {label}) of {self.name}")
        correct = int(np.argmax(logits)) == int(label)

        grad = probs.astype(ACC_DTYPE)
        grad[label] -= 1.0
        grad = grad[None]
        for index in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[index]
            grads = layer.backward(activations[index], activations[index + 1], grad, input_grad=index > 0)
            if index > 0:
                grad = grads.input.reshape(activations[index].shape)
            if learning_rate:
                layer.apply_gradients(grads, learning_rate)
        return correct, loss

    def count(self) -> SizeReport:
        report = SizeReport(self.name)
        for index, layer in enumerate(self.layers):
            if isinstance(layer, ConvLayer):
                report.layers.append(LayerSize(
                    index=index,
                    kind=layer.kind,
                    perceptrons=layer.perceptron_count,
                    weights=layer.weight_count,
                    connections=layer.connection_count,
                    filters=layer.filter_count,
                    kernel=layer.kernel_rows,
                    stride=layer.stride,
                    eq2_connections=eq2_connections(layer.kernel_rows, layer.kernel_cols, layer.input_shape[1], layer.stride),
                ))
            else:
                report.layers.append(LayerSize(
                    index=index,
                    kind=layer.kind,
                    perceptrons=layer.perceptron_count,
                    weights=layer.weight_count,
                    connections=layer.connection_count,
                ))
        return report

    def save(self, path) -> None:
        save(self, path)

    @classmethod
    def load(cls, path) -> "Network":
        return load(path)


def count(network: Network) -> SizeReport:
    return network.count()


def _seed_layers(input_shape=MNIST_INPUT, dtype=DTYPE):
    # 28x28 padded to 30x30 gives 12x12 maps; 12x12 padded to 15x15 gives 3x3 maps
    conv1 = Conv2dLayer(6, 7, 7, input_shape, stride=2, padding=((1, 1), (1, 1)), dtype=dtype)
    conv2 = Conv3dLayer(50, 7, 7, conv1.output_shape, stride=4, padding=((1, 2), (1, 2)), dtype=dtype)
    return [conv1, conv2]


def temp_classifier(source_size, num_classes=NUM_CLASSES, fan_in=TEMP_CLASSIFIER_FAN_IN, dtype=DTYPE):
    """Linear classifier attached to the seed network while priming.

    Class ``c`` reads source outputs (fan_in*c + k) mod source_size for k < fan_in, so
    every source output feeds at least one class. ``fan_in=None`` connects densely.
    """
    if fan_in is None or fan_in >= source_size:
        return ClassifierLayer(num_classes, source_size, dtype=dtype)
    connections = [[(fan_in * c + k) % source_size for k in range(fan_in)] for c in range(num_classes)]
    return SparseFcLayer(connections, source_size, Activation.IDENTITY, dtype=dtype)


def _finish(network: Network, rng) -> Network:
    if rng is not None:
        network.initialize(rng)
    logger.debug("built %s with %d weights", network.name, network.weight_count)
    return network


def build_seed(with_temp_classifier=True, rng=None, num_classes=NUM_CLASSES, temp_classifier_fan_in=TEMP_CLASSIFIER_FAN_IN, dtype=DTYPE) -> Network:
    layers = _seed_layers(dtype=dtype)
    if with_temp_classifier:
        source = int(np.prod(layers[-1].output_shape))
        layers.append(temp_classifier(source, num_classes, temp_classifier_fan_in, dtype))
    return _finish(Network(NetworkKind.SEED, layers), rng)


def _dense_head(perceptrons, rng, name, num_classes, dtype):
    layers = _seed_layers(dtype=dtype)
    source = int(np.prod(layers[-1].output_shape))
    layers.append(DenseFcLayer(perceptrons, source, dtype=dtype))
    layers.append(ClassifierLayer(num_classes, perceptrons, dtype=dtype))
    return _finish(Network(name, layers), rng)


def build_baseline(rng=None, num_classes=NUM_CLASSES, dtype=DTYPE) -> Network:
    return _dense_head(100, rng, NetworkKind.BASELINE, num_classes, dtype)


def build_fc20(rng=None, num_classes=NUM_CLASSES, dtype=DTYPE) -> Network:
    return _dense_head(20, rng, NetworkKind.FC20, num_classes, dtype)


# Model file, little-endian:
#   magic "NGEN" | u16 version | u8 name length | name | 3 x u32 input shape | u16 layer count
#   per layer: u8 kind | hyperparameters | f32 weights | f32 biases | u8 mask flag [| packed mask bits]
#   u32 CRC-32 of everything before it
MAGIC = b"NGEN"
FORMAT_VERSION = 1
_KIND_CODES = {"conv2d": 1, "conv3d": 2, "dense": 3, "classifier": 4, "sparse": 5}
_KINDS = {code: kind for kind, code in _KIND_CODES.items()}
_ACTIVATION_CODES = {Activation.TANH: 0, Activation.IDENTITY: 1}
_ACTIVATIONS = {code: act for act, code in _ACTIVATION_CODES.items()}


def _encode_layer(layer) -> bytes:
    parts = [struct.pack("<B", _KIND_CODES[layer.kind])]
    if isinstance(layer, ConvLayer):
        (top, bottom), (left, right) = layer.padding
        parts.append(struct.pack(
            "<11I", layer.filter_count, layer.kernel_rows, layer.kernel_cols, *layer.input_shape,
            layer.stride, top, bottom, left, right,
        ))
    elif isinstance(layer, SparseFcLayer):
        parts.append(struct.pack(
            "<IIIB", layer.perceptron_count, layer.source_size, layer.indices.size, _ACTIVATION_CODES[layer.activation],
        ))
        parts.append(layer.indptr.astype("<u4").tobytes())
        parts.append(layer.indices.astype("<u4").tobytes())
    else:
        parts.append(struct.pack(
            "<IIB", layer.perceptron_count, layer.input_count, _ACTIVATION_CODES[layer.activation],
        ))
    parts.append(layer.weights.astype("<f4").tobytes())
    parts.append(layer.biases.astype("<f4").tobytes())
    if layer.mask is None:
        parts.append(struct.pack("<B", 0))
    else:
        parts.append(struct.pack("<B", 1))
        parts.append(np.packbits(layer.mask.ravel()).tobytes())
    return b"".join(parts)


def to_bytes(network: Network) -> bytes:
    name = network.name.encode("ascii")
    body = [
        MAGIC,
        struct.pack("<HB", FORMAT_VERSION, len(name)),
        name,
        struct.pack("<3IH", *network.input_shape, len(network.layers)),
    ]
    body.extend(_encode_layer(layer) for layer in network.layers)
    payload = b"".join(body)
    return payload + struct.pack("<I", zlib.crc32(payload))


def save(network: Network, path) -> None:
    Path(path).write_bytes(to_bytes(network))
    logger.info("model %s saved to %s (%d weights)", network.name, path, network.weight_count)


class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.path = path
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.buf):
            raise TruncatedModelError(f"{self.path}: truncated at offset {self.offset}")
        chunk = self.buf[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, dtype: str, count: int) -> np.ndarray:
        itemsize = np.dtype(dtype).itemsize
        return np.frombuffer(self.take(itemsize * count), dtype=dtype)


def _decode_layer(reader: _Reader):
    (code,) = reader.unpack("<B")
    kind = _KINDS.get(code)
    if kind is None:
        raise ModelFormatError(f"{reader.path}: unknown layer kind {code} at offset {reader.offset - 1}")
    if kind in ("conv2d", "conv3d"):
        filters, kr, kc, channels, rows, cols, stride, top, bottom, left, right = reader.unpack("<11I")
        cls = Conv2dLayer if kind == "conv2d" else Conv3dLayer
        layer = cls(filters, kr, kc, (channels, rows, cols), stride, ((top, bottom), (left, right)))
        layer.weights = reader.array("<f4", layer.weights.size).reshape(layer.weights.shape).astype(DTYPE)
    elif kind == "sparse":
        perceptrons, source, nnz, act = reader.unpack("<IIIB")
        indptr = reader.array("<u4", perceptrons + 1).astype(np.int64)
        indices = reader.array("<u4", nnz).astype(np.int64)
        if indptr[-1] != nnz or np.any(np.diff(indptr) < 0):
            raise ModelFormatError(f"{reader.path}: corrupt sparse row pointers")
        connections = [indices[indptr[p]:indptr[p + 1]] for p in range(perceptrons)]
        weights = reader.array("<f4", nnz)
        layer = SparseFcLayer(connections, source, _ACTIVATIONS[act], weights=weights)
    else:
        perceptrons, inputs, act = reader.unpack("<IIB")
        if kind == "classifier":
            layer = ClassifierLayer(perceptrons, inputs)
        else:
            layer = DenseFcLayer(perceptrons, inputs, _ACTIVATIONS[act])
        layer.weights = reader.array("<f4", layer.weights.size).reshape(layer.weights.shape).astype(DTYPE)
    layer.biases = reader.array("<f4", layer.biases.size).astype(DTYPE)
    (has_mask,) = reader.unpack("<B")
    if has_mask:
        size = layer.weights.size
        bits = np.frombuffer(reader.take((size + 7) // 8), dtype=np.uint8)
        layer.mask = np.unpackbits(bits, count=size).astype(bool).reshape(layer.weights.shape)
    return layer


def from_bytes(buf: bytes, path="<bytes>") -> Network:
    if len(buf) < 4:
        raise TruncatedModelError(f"{path}: {len(buf)} bytes is too short for a model file")
    payload, (stored,) = buf[:-4], struct.unpack("<I", buf[-4:])
    if zlib.crc32(payload) != stored:
        raise ChecksumError(f"{path}: checksum mismatch")
    reader = _Reader(payload, path)
    if reader.take(len(MAGIC)) != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    version, name_len = reader.unpack("<HB")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    name = reader.take(name_len).decode("ascii")
    *input_shape, layer_count = reader.unpack("<3IH")
    layers = [_decode_layer(reader) for _ in range(layer_count)]
    if reader.offset != len(payload):
        raise ModelFormatError(f"{path}: {len(payload) - reader.offset} trailing bytes")
    return Network(name, layers, input_shape)


def load(path) -> Network:
    network = from_bytes(Path(path).read_bytes(), path)
    logger.info("model %s loaded from %s (%d weights)", network.name, path, network.weight_count)
    return network
