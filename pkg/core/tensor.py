"""Dense value arrays and the statistical kernels used by growth and training.

Weights and activations are stored as 32-bit floats. Every reduction accumulates
in 64-bit floats with numpy's fixed pairwise order, so a given input always
reduces to the same value.
"""
import numpy as np

from .errors import NonFiniteError, ShapeError

DTYPE = np.float32
ACC_DTYPE = np.float64


def make_rng(seed: int) -> np.random.Generator:
    """Experiment-owned generator: PCG-64, a pure function of ``seed``."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def _vector(values, name="values") -> np.ndarray:
    arr = np.asarray(values, dtype=ACC_DTYPE).ravel()
    if arr.size == 0:
        raise ShapeError(f"{name} is empty")
    return arr


def mean(values) -> float:
    arr = _vector(values)
    return float(arr.sum() / arr.size)


def std_dev(values) -> float:
    """Population standard deviation (divisor N)."""
    arr = _vector(values)
    mu = arr.sum() / arr.size
    return float(np.sqrt(np.square(mu - arr).sum() / arr.size))


def mse(a, b) -> float:
    left = _vector(a, "a")
    right = _vector(b, "b")
    if left.size != right.size:
        raise ShapeError(f"length mismatch: {left.size} != {right.size}")
    return float(np.square(left - right).sum() / left.size)


def mean_rows(rows) -> np.ndarray:
    """Element-wise average of the row vectors of a 2-D array."""
    arr = np.asarray(rows, dtype=ACC_DTYPE)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ShapeError(f"expected a non-empty 2-D array, got shape {arr.shape}")
    return arr.sum(axis=0) / arr.shape[0]


def row_mse(rows, reference) -> np.ndarray:
    """:func:`mse` of every row of ``rows`` against ``reference``."""
    arr = np.asarray(rows, dtype=ACC_DTYPE)
    ref = _vector(reference, "reference")
    if arr.ndim != 2 or arr.shape[1] != ref.size:
        raise ShapeError(f"rows of shape {arr.shape} do not match a reference of length {ref.size}")
    return np.square(arr - ref).sum(axis=1) / ref.size


def tanh_activate(x) -> np.ndarray:
    return np.tanh(x)


def tanh_derivative(x) -> np.ndarray:
    t = np.tanh(x)
    return 1.0 - t * t


def tanh_grad_from_output(y) -> np.ndarray:
    return 1.0 - y * y


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=ACC_DTYPE)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs, label: int) -> float:
    p = float(np.asarray(probs)[label])
    return float(-np.log(max(p, np.finfo(ACC_DTYPE).tiny)))


def check_finite(values, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"non-finite values in {what}")
