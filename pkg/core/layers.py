"""Forward and backward passes for convolution, dense and sparse layers.

Every layer accepts either a single sample or a batch on a leading axis.
Products are accumulated in float64 and results stored back in the layer
dtype. Backward passes return exact gradients of the forward computation,
tanh included.
"""
import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .choices import Activation
from .errors import MaskAlignmentError, ShapeError
from .tensor import ACC_DTYPE, DTYPE, tanh_activate, tanh_grad_from_output

logger = logging.getLogger(__name__)


@dataclass
class LayerGradients:
    input: np.ndarray | None
    weights: np.ndarray
    biases: np.ndarray


@dataclass
class PruneMask:
    alive: np.ndarray

    @classmethod
    def all_alive(cls, layer):
        return cls(np.ones(layer.weights.shape, dtype=bool))

    @classmethod
    def by_threshold(cls, layer, threshold: float):
        return cls(np.abs(layer.weights) >= threshold)


class Layer:
    kind = "layer"
    activation = Activation.TANH

    def __init__(self, dtype=DTYPE):
        self.dtype = np.dtype(dtype)
        self.mask = None

    @property
    def is_classifier(self) -> bool:
        return self.activation == Activation.IDENTITY

    @property
    def alive_weight_count(self) -> int:
        if self.mask is None:
            return int(self.weights.size)
        return int(np.count_nonzero(self.mask))

    @property
    def weight_count(self) -> int:
        return self.alive_weight_count + int(self.biases.size)

    def _activate(self, z):
        if self.activation == Activation.TANH:
            return tanh_activate(z)
        return z

    def _pre_activation_grad(self, y, grad_y):
        grad = np.asarray(grad_y, dtype=ACC_DTYPE)
        if self.activation == Activation.TANH:
            return grad * tanh_grad_from_output(np.asarray(y, dtype=ACC_DTYPE))
        return grad

    def apply_gradients(self, grads: LayerGradients, learning_rate: float) -> None:
        weight_grads = grads.weights
        if self.mask is not None:
            weight_grads = np.where(self.mask, weight_grads, 0.0)
        self.weights = (self.weights.astype(ACC_DTYPE) - learning_rate * weight_grads).astype(self.dtype)
        self.biases = (self.biases.astype(ACC_DTYPE) - learning_rate * grads.biases).astype(self.dtype)
        if self.mask is not None:
            self.weights[~self.mask] = 0

    def _uniform(self, rng, size, fan_in):
        r = 1.0 / np.sqrt(np.maximum(fan_in, 1))
        return (rng.uniform(-1.0, 1.0, size) * r).astype(self.dtype)


class ConvLayer(Layer):
    """Strided convolution over (channels, rows, cols) input with tanh output.

    ``padding`` is ((top, bottom), (left, right)) zero padding applied to the input.
    """

    kind = "conv"

    def __init__(self, filter_count, kernel_rows, kernel_cols, input_shape, stride=1, padding=((0, 0), (0, 0)), dtype=DTYPE):
        super().__init__(dtype)
        self.filter_count = int(filter_count)
        self.kernel_rows = int(kernel_rows)
        self.kernel_cols = int(kernel_cols)
        self.input_shape = tuple(int(v) for v in input_shape)
        self.stride = int(stride)
        self.padding = tuple(tuple(int(p) for p in side) for side in padding)
        channels, rows, cols = self.input_shape
        (top, bottom), (left, right) = self.padding
        self.padded_shape = (rows + top + bottom, cols + left + right)
        if self.padded_shape[0] < self.kernel_rows or self.padded_shape[1] < self.kernel_cols:
            raise ShapeError(f"padded input {self.padded_shape} smaller than kernel {self.kernel_rows}x{self.kernel_cols}")
        self.output_shape = (
            self.filter_count,
            (self.padded_shape[0] - self.kernel_rows) // self.stride + 1,
            (self.padded_shape[1] - self.kernel_cols) // self.stride + 1,
        )
        self.weights = np.zeros((self.filter_count, channels, self.kernel_rows, self.kernel_cols), dtype=self.dtype)
        self.biases = np.zeros(self.filter_count, dtype=self.dtype)
        assert self.weights.size + self.biases.size == (self.kernel_rows * self.kernel_cols * channels + 1) * self.filter_count

    @property
    def input_channels(self) -> int:
        return self.input_shape[0]

    @property
    def fan_in(self) -> int:
        return self.input_channels * self.kernel_rows * self.kernel_cols

    @property
    def positions(self) -> int:
        return self.output_shape[1] * self.output_shape[2]

    @property
    def perceptron_count(self) -> int:
        return self.filter_count * self.positions

    @property
    def connection_count(self) -> int:
        # every output position of a filter sees that filter's live kernel weights plus its bias
        if self.mask is None:
            per_filter = np.full(self.filter_count, self.fan_in)
        else:
            per_filter = self.mask.reshape(self.filter_count, -1).sum(axis=1)
        return int(((per_filter + 1) * self.positions).sum())

    def initialize(self, rng) -> None:
        self.weights = self._uniform(rng, self.weights.shape, self.fan_in)
        self.biases = self._uniform(rng, self.biases.shape, self.fan_in)
        if self.mask is not None:
            self.weights[~self.mask] = 0

    def _batch(self, x):
        x = np.asarray(x)
        single = x.ndim == 3
        x4 = x[None] if single else x
        if x4.shape[1:] != self.input_shape:
            raise ShapeError(f"{self.kind} expects input {self.input_shape}, got {x4.shape[1:]}")
        return x4, single

    def _columns(self, x4):
        (top, bottom), (left, right) = self.padding
        padded = np.pad(x4.astype(ACC_DTYPE), ((0, 0), (0, 0), (top, bottom), (left, right)))
        windows = sliding_window_view(padded, (self.kernel_rows, self.kernel_cols), axis=(2, 3))
        _, out_rows, out_cols = self.output_shape
        windows = windows[:, :, :: self.stride, :: self.stride][:, :, :out_rows, :out_cols]
        # (batch, rows, cols, channels, kr, kc) -> one row per output position
        return windows.transpose(0, 2, 3, 1, 4, 5).reshape(x4.shape[0] * self.positions, self.fan_in)

    def forward(self, x) -> np.ndarray:
        x4, single = self._batch(x)
        cols = self._columns(x4)
        kernels = self.weights.astype(ACC_DTYPE).reshape(self.filter_count, -1)
        z = cols @ kernels.T + self.biases.astype(ACC_DTYPE)
        _, out_rows, out_cols = self.output_shape
        z = z.reshape(x4.shape[0], out_rows, out_cols, self.filter_count).transpose(0, 3, 1, 2)
        y = self._activate(z).astype(self.dtype)
        return y[0] if single else y

    def backward(self, x, y, grad_y, input_grad=True) -> LayerGradients:
        x4, single = self._batch(x)
        y4 = np.asarray(y)[None] if single else np.asarray(y)
        g4 = np.asarray(grad_y)[None] if single else np.asarray(grad_y)
        dz = self._pre_activation_grad(y4, g4).transpose(0, 2, 3, 1).reshape(-1, self.filter_count)
        cols = self._columns(x4)
        kernels = self.weights.astype(ACC_DTYPE).reshape(self.filter_count, -1)
        weight_grads = (dz.T @ cols).reshape(self.weights.shape)
        bias_grads = dz.sum(axis=0)

        grad_x = None
        if input_grad:
            _, out_rows, out_cols = self.output_shape
            channels, rows, cols_in = self.input_shape
            (top, _), (left, _) = self.padding
            dcols = (dz @ kernels).reshape(x4.shape[0], out_rows, out_cols, channels, self.kernel_rows, self.kernel_cols)
            padded = np.zeros((x4.shape[0], channels) + self.padded_shape, dtype=ACC_DTYPE)
            row_span = self.stride * (out_rows - 1) + 1
            col_span = self.stride * (out_cols - 1) + 1
            for i in range(self.kernel_rows):
                for j in range(self.kernel_cols):
                    padded[:, :, i:i + row_span:self.stride, j:j + col_span:self.stride] += (
                        dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                    )
            grad_x = padded[:, :, top:top + rows, left:left + cols_in]
            if single:
                grad_x = grad_x[0]
        return LayerGradients(grad_x, weight_grads, bias_grads)


class Conv2dLayer(ConvLayer):
    kind = "conv2d"

    def __init__(self, filter_count, kernel_rows, kernel_cols, input_shape, stride=1, padding=((0, 0), (0, 0)), dtype=DTYPE):
        if len(input_shape) == 2:
            input_shape = (1,) + tuple(input_shape)
        if input_shape[0] != 1:
            raise ShapeError("2D convolution takes a single input channel")
        super().__init__(filter_count, kernel_rows, kernel_cols, input_shape, stride, padding, dtype)


class Conv3dLayer(ConvLayer):
    kind = "conv3d"


def eq2_connections(kernel_rows, kernel_cols, input_rows, stride) -> float:
    """Closed-form connection estimate: (kr*kc + 1) * ((input - kernel - stride) / stride) ** 2.

    It does not agree with the geometric window count; kept for side-by-side reporting.
    """
    return (kernel_rows * kernel_cols + 1) * ((input_rows - kernel_rows - stride) / stride) ** 2


class DenseFcLayer(Layer):
    kind = "dense"

    def __init__(self, perceptron_count, input_count, activation=Activation.TANH, dtype=DTYPE):
        super().__init__(dtype)
        self.activation = Activation(activation)
        self.weights = np.zeros((int(perceptron_count), int(input_count)), dtype=self.dtype)
        self.biases = np.zeros(int(perceptron_count), dtype=self.dtype)
        assert self.weights.size + self.biases.size == perceptron_count * (input_count + 1)

    @property
    def perceptron_count(self) -> int:
        return int(self.weights.shape[0])

    @property
    def input_count(self) -> int:
        return int(self.weights.shape[1])

    @property
    def connection_count(self) -> int:
        return self.weight_count - self.perceptron_count

    def initialize(self, rng) -> None:
        self.weights = self._uniform(rng, self.weights.shape, self.input_count)
        self.biases = self._uniform(rng, self.biases.shape, self.input_count)
        if self.mask is not None:
            self.weights[~self.mask] = 0

    def extend_inputs(self, count: int, rng) -> None:
        """Appends ``count`` input columns (new source perceptrons), freshly randomized."""
        fan_in = self.input_count + count
        extra = self._uniform(rng, (self.perceptron_count, count), fan_in)
        self.weights = np.concatenate([self.weights, extra], axis=1)
        if self.mask is not None:
            self.mask = np.concatenate([self.mask, np.ones_like(extra, dtype=bool)], axis=1)

    def _dense_weights(self) -> np.ndarray:
        return self.weights.astype(ACC_DTYPE)

    def _batch(self, x):
        x = np.asarray(x)
        single = x.ndim == 1
        x2 = x[None] if single else x.reshape(x.shape[0], -1)
        if x2.shape[1] != self.input_count:
            raise ShapeError(f"{self.kind} expects {self.input_count} inputs, got {x2.shape[1]}")
        return x2, single

    def forward(self, x) -> np.ndarray:
        x2, single = self._batch(x)
        z = x2.astype(ACC_DTYPE) @ self._dense_weights().T + self.biases.astype(ACC_DTYPE)
        y = self._activate(z).astype(self.dtype)
        return y[0] if single else y

    def _weight_grads(self, full):
        return full

    def backward(self, x, y, grad_y, input_grad=True) -> LayerGradients:
        x2, single = self._batch(x)
        y2 = np.atleast_2d(y)
        dz = self._pre_activation_grad(y2, np.atleast_2d(grad_y))
        full = dz.T @ x2.astype(ACC_DTYPE)
        grad_x = None
        if input_grad:
            grad_x = dz @ self._dense_weights()
            if single:
                grad_x = grad_x[0]
        return LayerGradients(grad_x, self._weight_grads(full), dz.sum(axis=0))


class ClassifierLayer(DenseFcLayer):
    kind = "classifier"

    def __init__(self, class_count, input_count, dtype=DTYPE):
        super().__init__(class_count, input_count, Activation.IDENTITY, dtype)


class SparseFcLayer(DenseFcLayer):
    """Perceptrons wired only to listed source outputs.

    Storage is compressed by row: ``indptr`` delimits each perceptron's slice of
    ``indices`` (sorted source indices) and ``weights`` (one weight per
    connection). The forward pass scatters the live connections into a dense
    float64 matrix so that a fully connected sparse layer computes exactly what
    the dense layer computes.
    """

    kind = "sparse"

    def __init__(self, connections, source_size, activation=Activation.TANH, weights=None, biases=None, dtype=DTYPE):
        Layer.__init__(self, dtype)
        self.activation = Activation(activation)
        self.source_size = int(source_size)
        lists = [np.asarray(sorted(int(i) for i in conn), dtype=np.int64) for conn in connections]
        self.indptr = np.zeros(len(lists) + 1, dtype=np.int64)
        self.indptr[1:] = np.cumsum([lst.size for lst in lists])
        self.indices = np.concatenate(lists) if lists else np.zeros(0, dtype=np.int64)
        self.weights = (
            np.zeros(self.indices.size, dtype=self.dtype) if weights is None else np.asarray(weights, dtype=self.dtype).copy()
        )
        self.biases = (
            np.zeros(len(lists), dtype=self.dtype) if biases is None else np.asarray(biases, dtype=self.dtype).copy()
        )
        self.validate()

    @classmethod
    def from_pairs(cls, perceptrons, biases, source_size, activation=Activation.TANH, dtype=DTYPE):
        """Builds from per-perceptron lists of (source_index, weight) pairs."""
        ordered = [sorted(pairs) for pairs in perceptrons]
        connections = [[index for index, _ in pairs] for pairs in ordered]
        weights = [weight for pairs in ordered for _, weight in pairs]
        return cls(connections, source_size, activation, weights, biases, dtype)

    def validate(self) -> None:
        if self.weights.shape != self.indices.shape:
            raise ShapeError("sparse weights are not aligned with connection indices")
        if self.biases.size != self.perceptron_count:
            raise ShapeError("one bias per perceptron expected")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= self.source_size):
            raise ShapeError(f"connection index out of range for source size {self.source_size}")
        for p in range(self.perceptron_count):
            row = self.indices[self.indptr[p]:self.indptr[p + 1]]
            if row.size > 1 and np.any(np.diff(row) <= 0):
                raise ShapeError(f"perceptron {p} has duplicate source indices")

    @property
    def perceptron_count(self) -> int:
        return int(self.indptr.size - 1)

    @property
    def input_count(self) -> int:
        return self.source_size

    def connection_counts(self) -> list[int]:
        if self.mask is None:
            return np.diff(self.indptr).tolist()
        rows = self._rows()
        return np.bincount(rows[self.mask], minlength=self.perceptron_count).tolist()

    def perceptron(self, p: int) -> list[tuple[int, float]]:
        sl = slice(self.indptr[p], self.indptr[p + 1])
        return list(zip(self.indices[sl].tolist(), self.weights[sl].tolist()))

    def _rows(self) -> np.ndarray:
        return np.repeat(np.arange(self.perceptron_count), np.diff(self.indptr))

    def _dense_weights(self) -> np.ndarray:
        dense = np.zeros((self.perceptron_count, self.source_size), dtype=ACC_DTYPE)
        dense[self._rows(), self.indices] = self.weights.astype(ACC_DTYPE)
        return dense

    def _weight_grads(self, full):
        return full[self._rows(), self.indices]

    def initialize(self, rng) -> None:
        fan_in = np.diff(self.indptr)
        self.weights = self._uniform(rng, self.indices.size, np.repeat(fan_in, fan_in))
        self.biases = self._uniform(rng, self.perceptron_count, fan_in)
        if self.mask is not None:
            self.weights[~self.mask] = 0

    def extend_inputs(self, count, rng):
        raise ShapeError("sparse layers grow by perceptrons, not inputs")

    def add_perceptrons(self, connections, rng) -> None:
        grown = SparseFcLayer(connections, self.source_size, self.activation, dtype=self.dtype)
        grown.initialize(rng)
        offset = self.indptr[-1]
        self.indptr = np.concatenate([self.indptr, grown.indptr[1:] + offset])
        self.indices = np.concatenate([self.indices, grown.indices])
        self.weights = np.concatenate([self.weights, grown.weights])
        self.biases = np.concatenate([self.biases, grown.biases])
        if self.mask is not None:
            self.mask = np.concatenate([self.mask, np.ones(grown.indices.size, dtype=bool)])
        self.validate()


def apply_mask(layer: Layer, mask: PruneMask) -> Layer:
    """Zeroes and freezes the weights ``mask`` marks dead. Biases are never masked."""
    alive = np.asarray(mask.alive, dtype=bool)
    if alive.shape != layer.weights.shape:
        raise MaskAlignmentError(f"mask shape {alive.shape} does not match weights {layer.weights.shape}")
    layer.mask = alive if layer.mask is None else (layer.mask & alive)
    layer.weights = layer.weights.copy()
    layer.weights[~layer.mask] = 0
    logger.debug("%s: %d of %d weights alive", layer.kind, layer.alive_weight_count, layer.weights.size)
    return layer


def conv_forward(layer: ConvLayer, x) -> np.ndarray:
    return layer.forward(x)


def conv_backward(layer: ConvLayer, x, grad_y) -> LayerGradients:
    return layer.backward(x, layer.forward(x), grad_y)


def sparse_fc_forward(layer: SparseFcLayer, source_outputs) -> np.ndarray:
    return layer.forward(source_outputs)


def sparse_fc_backward(layer: SparseFcLayer, source_outputs, grad_y) -> LayerGradients:
    return layer.backward(source_outputs, layer.forward(source_outputs), grad_y)
