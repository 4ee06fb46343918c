"""Training cycles, validation-gated test inference and the stopping criteria."""
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .choices import StoppingReason
from .errors import ConfigError, DatasetError, NonFiniteError
from .mnist import NUM_CLASSES, DataSplit, ImageSet, shuffle
from .network import EVAL_CHUNK, Network
from .tensor import make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    max_cycles: int = 30
    patience: int = 20
    target_val_accuracy: float = 100.0
    learning_rate: float = 0.01
    seed: int = 0
    eval_chunk: int = EVAL_CHUNK

    def __post_init__(self):
        if self.max_cycles < 1:
            raise ConfigError(f"max_cycles must be at least 1, got {self.max_cycles}")
        if self.patience < 1:
            raise ConfigError(f"patience must be at least 1, got {self.patience}")
        if not 0.0 < self.target_val_accuracy <= 100.0:
            raise ConfigError(f"target validation accuracy must be in (0, 100], got {self.target_val_accuracy}")
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.eval_chunk < 1:
            raise ConfigError(f"eval_chunk must be at least 1, got {self.eval_chunk}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CycleMetrics:
    cycle: int
    train: float
    validate: float
    test: float | None
    weights: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    """Outcome of :func:`run`.

    ``network`` is the snapshot taken at the validation peak, ``final`` the state
    after the last cycle.
    """

    network: Network
    final: Network
    history: list[CycleMetrics] = field(default_factory=list)
    stopping_reason: StoppingReason | None = None
    peak_cycle: int = 0

    @property
    def peak(self) -> CycleMetrics | None:
        for metrics in self.history:
            if metrics.cycle == self.peak_cycle:
                return metrics
        return None

    @property
    def peak_validation(self) -> float | None:
        return self.peak.validate if self.peak else None

    @property
    def test_at_peak(self) -> float | None:
        return self.peak.test if self.peak else None

    @property
    def test_evaluations(self) -> int:
        return sum(1 for metrics in self.history if metrics.test is not None)


def evaluate(network: Network, images: ImageSet, chunk: int = EVAL_CHUNK) -> float:
    """Arg-max accuracy in percent."""
    if len(images) == 0:
        raise DatasetError("cannot evaluate on an empty image set")
    predicted = network.predict(images.pixels, chunk)
    return 100.0 * int(np.count_nonzero(predicted == images.labels)) / len(images)


def per_class_recall(network: Network, images: ImageSet, num_classes: int = NUM_CLASSES, chunk: int = EVAL_CHUNK) -> list[float | None]:
    """Percentage of each class classified correctly; None for classes absent from ``images``."""
    if len(images) == 0:
        raise DatasetError("cannot evaluate on an empty image set")
    predicted = network.predict(images.pixels, chunk)
    recall = []
    for class_id in range(num_classes):
        members = images.labels == class_id
        total = int(np.count_nonzero(members))
        if total == 0:
            recall.append(None)
            continue
        recall.append(100.0 * int(np.count_nonzero(predicted[members] == class_id)) / total)
    return recall


def train_cycle(network: Network, train_set: ImageSet, learning_rate: float, cycle: int | None = None) -> float:
    """One SGD pass over ``train_set`` in its current order; returns online train accuracy in percent."""
    if len(train_set) == 0:
        raise DatasetError("cannot train on an empty image set")
    correct = 0
    for position in range(len(train_set)):
        label = int(train_set.labels[position])
        try:
            hit, _ = network.train_step(train_set.pixels[position], label, learning_rate)
        except NonFiniteError as e:
            raise NonFiniteError(
                f"{e} (cycle {cycle}, position {position}, image {int(train_set.ids[position])}, lr {learning_rate})"
            ) from e
        correct += hit
    return 100.0 * correct / len(train_set)


def stopping_reason(validation_history, config: TrainConfig) -> StoppingReason | None:
    """Decides from validation accuracies alone whether training stops after the last cycle."""
    if not validation_history:
        return None
    if validation_history[-1] >= config.target_val_accuracy:
        return StoppingReason.PERFECT_VALIDATION
    best = -np.inf
    last_improvement = 0
    for index, accuracy in enumerate(validation_history):
        if accuracy > best:
            best = accuracy
            last_improvement = index
    if len(validation_history) - 1 - last_improvement >= config.patience:
        return StoppingReason.PATIENCE
    if len(validation_history) >= config.max_cycles:
        return StoppingReason.MAX_CYCLES
    return None


def _test_accuracy(network, split: DataSplit, chunk):
    if len(split.test) == 0:
        return None
    return evaluate(network, split.test, chunk)


def run(network: Network, split: DataSplit, config: TrainConfig, rng=None, initial_row=False, early_stopping=True) -> RunResult:
    """Trains ``network`` in place until a stopping criterion holds.

    After every cycle the validation set is evaluated, the test set only when
    validation reaches a new maximum, and the training order is reshuffled.
    With ``early_stopping`` off exactly ``config.max_cycles`` cycles run.
    """
    rng = make_rng(config.seed) if rng is None else rng
    started = time.time()
    history = []
    best = -np.inf
    snapshot = network.copy()
    peak_cycle = 0

    if initial_row:
        validate = evaluate(network, split.validation, config.eval_chunk)
        best = validate
        history.append(CycleMetrics(
            cycle=0,
            train=evaluate(network, split.train, config.eval_chunk),
            validate=validate,
            test=_test_accuracy(network, split, config.eval_chunk),
            weights=network.weight_count,
        ))

    validations = []
    train_set = split.train
    reason = None
    for cycle in range(1, config.max_cycles + 1):
        train = train_cycle(network, train_set, config.learning_rate, cycle)
        validate = evaluate(network, split.validation, config.eval_chunk)
        test = None
        if validate > best:
            best = validate
            test = _test_accuracy(network, split, config.eval_chunk)
            snapshot = network.copy()
            peak_cycle = cycle
        metrics = CycleMetrics(cycle, train, validate, test, network.weight_count)
        history.append(metrics)
        logger.info(
            "%s cycle %d: train=%.2f%% validate=%.2f%% test=%s weights=%d",
            network.name, cycle, train, validate, "-" if test is None else f"{test:.2f}%", metrics.weights,
        )
        train_set = shuffle(train_set, rng)
        validations.append(validate)
        if early_stopping:
            reason = stopping_reason(validations, config)
            if reason is not None:
                break
    if reason is None:
        reason = StoppingReason.MAX_CYCLES

    logger.info(
        "%s stopped after %d cycles (%s), peak validation at cycle %d (%.1fs)",
        network.name, len(validations), reason, peak_cycle, time.time() - started,
    )
    return RunResult(snapshot, network, history, reason, peak_cycle)


def prime(network: Network, split: DataSplit, cycles: int, config: TrainConfig, rng=None, initial_row=False, early_stopping=False) -> RunResult:
    """Runs ``cycles`` priming passes; the temporary classifier stays attached."""
    if cycles < 0:
        raise ConfigError(f"priming cycles must be non-negative, got {cycles}")
    if cycles == 0:
        history = []
        if initial_row:
            history.append(CycleMetrics(
                cycle=0,
                train=evaluate(network, split.train, config.eval_chunk),
                validate=evaluate(network, split.validation, config.eval_chunk),
                test=_test_accuracy(network, split, config.eval_chunk),
                weights=network.weight_count,
            ))
        return RunResult(network.copy(), network, history, None, 0)
    priming = TrainConfig(
        max_cycles=cycles,
        patience=config.patience,
        target_val_accuracy=config.target_val_accuracy,
        learning_rate=config.learning_rate,
        seed=config.seed,
        eval_chunk=config.eval_chunk,
    )
    return run(network, split, priming, rng, initial_row=initial_row, early_stopping=early_stopping)
