"""Weight-magnitude pruning and threshold sweeps."""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .choices import PruneTarget
from .errors import ConfigError
from .layers import ConvLayer, PruneMask, apply_mask
from .mnist import DataSplit, ImageSet
from .network import Network
from .training import TrainConfig, evaluate, run

logger = logging.getLogger(__name__)


def parse_targets(value):
    """``fc``, ``conv``, ``all`` or a comma separated list of layer indices."""
    if isinstance(value, (tuple, list)):
        return tuple(int(v) for v in value)
    text = str(value).strip()
    if text in PruneTarget.values:
        return PruneTarget(text)
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise ConfigError(f"invalid prune target {value!r}; use fc, conv, all or layer indices") from None


@dataclass(frozen=True)
class PruneSpec:
    threshold: float
    targets: object = PruneTarget.FC

    def __post_init__(self):
        if math.isnan(self.threshold) or self.threshold < 0:
            raise ConfigError(f"threshold must be non-negative, got {self.threshold}")
        object.__setattr__(self, "targets", parse_targets(self.targets))
        if isinstance(self.targets, tuple) and not self.targets:
            raise ConfigError("no layers to prune")


@dataclass(frozen=True)
class PruneResult:
    threshold: float
    removed: int
    original_weights: int
    remaining_weights: int
    test_accuracy: float | None = None
    retrained: bool = False

    @property
    def removed_fraction(self) -> float:
        return self.removed / self.original_weights if self.original_weights else 0.0

    @property
    def removed_percent(self) -> float:
        return 100.0 * self.removed_fraction

    @property
    def error(self) -> float | None:
        return None if self.test_accuracy is None else 100.0 - self.test_accuracy

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "removed_percent": self.removed_percent,
            "connections": self.remaining_weights,
            "test_accuracy": self.test_accuracy,
            "error": self.error,
            "retrained": self.retrained,
        }


def target_layers(network: Network, targets) -> list[int]:
    targets = parse_targets(targets)
    if targets == PruneTarget.ALL:
        return list(range(len(network.layers)))
    if targets == PruneTarget.CONV:
        return [i for i, layer in enumerate(network.layers) if isinstance(layer, ConvLayer)]
    if targets == PruneTarget.FC:
        return [i for i, layer in enumerate(network.layers) if not isinstance(layer, ConvLayer)]
    for index in targets:
        if not 0 <= index < len(network.layers):
            raise ConfigError(f"layer index {index} out of range for {len(network.layers)} layers")
    return sorted(set(targets))


def prune(network: Network, spec: PruneSpec, eval_set: ImageSet | None = None) -> tuple[Network, PruneResult]:
    """Masks target-layer weights with |w| < threshold on a copy of ``network``.

    The removed fraction is relative to every weight of the network, biases included.
    """
    pruned = network.copy()
    original = network.weight_count
    for index in target_layers(pruned, spec.targets):
        layer = pruned.layers[index]
        apply_mask(layer, PruneMask.by_threshold(layer, spec.threshold))
    accuracy = evaluate(pruned, eval_set) if eval_set is not None and len(eval_set) else None
    result = PruneResult(spec.threshold, original - pruned.weight_count, original, pruned.weight_count, accuracy)
    logger.debug("threshold %s removed %d of %d weights", spec.threshold, result.removed, original)
    return pruned, result


def threshold_for_weight_count(network: Network, target_weights: int, targets=PruneTarget.FC) -> float:
    """Smallest threshold leaving at most ``target_weights`` weights (ties may remove more)."""
    magnitudes = []
    for index in target_layers(network, targets):
        layer = network.layers[index]
        alive = np.abs(layer.weights)
        if layer.mask is not None:
            alive = alive[layer.mask]
        magnitudes.append(alive.ravel())
    magnitudes = np.sort(np.concatenate(magnitudes)) if magnitudes else np.zeros(0, dtype=np.float32)
    excess = network.weight_count - int(target_weights)
    if excess <= 0:
        return 0.0
    if excess >= magnitudes.size:
        return math.inf
    edge = magnitudes[excess - 1]
    # next value up in the weights' own dtype, so the mask comparison removes edge itself
    return float(np.nextafter(edge, edge.dtype.type(np.inf)))


def sweep(network: Network, thresholds, eval_set: ImageSet, targets=PruneTarget.FC, retrain_split: DataSplit | None = None, train_config: TrainConfig | None = None):
    """One PruneResult per threshold, in ascending threshold order.

    With ``retrain_split`` every pruned network is fine-tuned, its masks held,
    before evaluation; such results are flagged ``retrained``.
    """
    thresholds = sorted(float(t) for t in thresholds)
    if not thresholds:
        raise ConfigError("at least one threshold is required")
    results = []
    for threshold in thresholds:
        pruned, result = prune(network, PruneSpec(threshold, targets))
        if retrain_split is not None:
            pruned = run(pruned, retrain_split, train_config or TrainConfig()).network
        accuracy = evaluate(pruned, eval_set) if len(eval_set) else None
        result = PruneResult(
            threshold, result.removed, result.original_weights, result.remaining_weights, accuracy, retrain_split is not None,
        )
        logger.info(
            "threshold %g: removed %.2f%%, %d weights left, test %s",
            threshold, result.removed_percent, result.remaining_weights,
            "-" if accuracy is None else f"{accuracy:.2f}%",
        )
        results.append(result)
    return results
