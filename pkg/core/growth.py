"""Artificial neurogenesis: grows a sparse fully connected layer from class extremes.

The seed network is primed with a temporary classifier, which is then dropped.
For every class the member whose source-layer output is closest to the class
average and the member farthest from it are picked; each becomes one new
perceptron wired only to the source outputs lying within ``x`` standard
deviations of that member's mean output. A fresh classifier reads the grown
layer and the whole network is trained. While the accuracy target is unmet,
consumed members are excluded and the weakest classes get the next extremes.
"""
import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .choices import Band, NetworkKind
from .errors import ClassExhaustedError, ConfigError, EmptyProfileError
from .layers import ClassifierLayer, SparseFcLayer
from .mnist import NUM_CLASSES, DataSplit, ImageSet, LabeledImage
from .network import EVAL_CHUNK, TEMP_CLASSIFIER_FAN_IN, Network, build_seed
from .tensor import ACC_DTYPE, make_rng, mean, mean_rows, row_mse, std_dev
from .training import TrainConfig, per_class_recall, prime, run

logger = logging.getLogger(__name__)

MOST_SIMILAR = "most_similar"
LEAST_SIMILAR = "least_similar"


@dataclass(frozen=True)
class GrowthConfig:
    scaling_factor: float = 1.0
    priming_cycles: int = 11
    accuracy_target: float = 0.0
    max_iterations: int = 5
    band: Band = Band.INSIDE
    excluded: frozenset = frozenset()
    temp_classifier_fan_in: int | None = TEMP_CLASSIFIER_FAN_IN

    def __post_init__(self):
        if not self.scaling_factor > 0:
            raise ConfigError(f"scaling factor must be positive, got {self.scaling_factor}")
        if self.priming_cycles < 0:
            raise ConfigError(f"priming cycles must be non-negative, got {self.priming_cycles}")
        if not 0.0 <= self.accuracy_target <= 100.0:
            raise ConfigError(f"accuracy target must be in [0, 100], got {self.accuracy_target}")
        if self.max_iterations < 1:
            raise ConfigError(f"max iterations must be at least 1, got {self.max_iterations}")
        object.__setattr__(self, "band", Band(self.band))
        object.__setattr__(self, "excluded", frozenset(int(m) for m in self.excluded))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["band"] = str(self.band)
        data["excluded"] = sorted(self.excluded)
        return data


@dataclass(frozen=True)
class MemberError:
    member_id: int
    mse: float


@dataclass
class ClassProfile:
    class_id: int
    average: np.ndarray
    members: list[MemberError]

    def __len__(self):
        return len(self.members)


@dataclass(frozen=True)
class ExtremePair:
    class_id: int
    most_similar: MemberError
    least_similar: MemberError

    @property
    def degenerate(self) -> bool:
        return self.most_similar.member_id == self.least_similar.member_id

    @property
    def members(self):
        return ((MOST_SIMILAR, self.most_similar), (LEAST_SIMILAR, self.least_similar))


@dataclass(frozen=True)
class CriticalEntry:
    class_id: int
    role: str
    member_id: int
    mse: float
    indices: tuple
    mu: float
    sigma: float

    @property
    def connection_count(self) -> int:
        return len(self.indices)

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "role": self.role,
            "member_id": self.member_id,
            "mse": self.mse,
            "mu": self.mu,
            "sigma": self.sigma,
            "connections": self.connection_count,
        }


@dataclass
class CriticalSet:
    entries: list[CriticalEntry] = field(default_factory=list)

    @property
    def connections(self) -> list[list[int]]:
        return [list(entry.indices) for entry in self.entries]

    @property
    def member_ids(self) -> set[int]:
        return {entry.member_id for entry in self.entries}


@dataclass
class GrowthIteration:
    iteration: int
    classes: list[int]
    critical: CriticalSet
    history: list
    stopping_reason: str
    peak_cycle: int
    peak_validation: float
    test_at_peak: float | None
    weights: int
    grown_connections: int
    recall: list

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "classes": self.classes,
            "extremes": [entry.to_dict() for entry in self.critical.entries],
            "history": [metrics.to_dict() for metrics in self.history],
            "stopping_reason": str(self.stopping_reason),
            "peak_cycle": self.peak_cycle,
            "peak_validation": self.peak_validation,
            "test_at_peak": self.test_at_peak,
            "weights": self.weights,
            "grown_connections": self.grown_connections,
            "recall": self.recall,
        }


@dataclass
class GrowthReport:
    growth_config: GrowthConfig
    train_config: TrainConfig
    priming: list = field(default_factory=list)
    iterations: list[GrowthIteration] = field(default_factory=list)
    finish: str = ""

    @property
    def last(self) -> GrowthIteration | None:
        return self.iterations[-1] if self.iterations else None

    @property
    def total_weights(self) -> int:
        return self.last.weights if self.last else 0

    @property
    def grown_connections(self) -> int:
        return self.last.grown_connections if self.last else 0

    def to_dict(self) -> dict:
        return {
            "growth_config": self.growth_config.to_dict(),
            "train_config": self.train_config.to_dict(),
            "priming": [metrics.to_dict() for metrics in self.priming],
            "iterations": [iteration.to_dict() for iteration in self.iterations],
            "total_weights": self.total_weights,
            "grown_connections": self.grown_connections,
            "finish": self.finish,
        }


def class_profiles(network, train_set: ImageSet, excluded=(), classes=None, num_classes=NUM_CLASSES, chunk=EVAL_CHUNK) -> list[ClassProfile]:
    """Per-class average source output and members sorted by MSE to it.

    Ties in MSE are broken by member id.
    """
    excluded = np.asarray(sorted(int(m) for m in excluded), dtype=np.int64)
    profiles = []
    for class_id in (range(num_classes) if classes is None else classes):
        positions = train_set.class_positions(class_id)
        positions = positions[~np.isin(train_set.ids[positions], excluded)]
        if positions.size == 0:
            raise EmptyProfileError(f"class {class_id} has no remaining members")
        outputs = network.source_outputs(train_set.pixels[positions], chunk)
        average = mean_rows(outputs)
        errors = row_mse(outputs, average)
        ids = train_set.ids[positions]
        order = np.lexsort((ids, errors))
        members = [MemberError(int(ids[i]), float(errors[i])) for i in order]
        profiles.append(ClassProfile(int(class_id), average, members))
    return profiles


def select_extremes(profile: ClassProfile, excluded=()) -> ExtremePair:
    """First and last members of the sorted profile not in ``excluded``."""
    excluded = set(excluded)
    remaining = [member for member in profile.members if member.member_id not in excluded]
    if not remaining:
        raise EmptyProfileError(f"class {profile.class_id} has no members left to select")
    return ExtremePair(profile.class_id, remaining[0], remaining[-1])


def critical_indices(outputs, scaling_factor: float, band=Band.INSIDE) -> tuple[np.ndarray, float, float]:
    """Source indices within (or outside) ``scaling_factor`` population std devs of the mean."""
    values = np.asarray(outputs, dtype=ACC_DTYPE).ravel()
    mu = mean(values)
    sigma = std_dev(values)
    deviation = np.abs(values - mu)
    if Band(band) == Band.INSIDE:
        picked = deviation <= scaling_factor * sigma
    else:
        picked = deviation > scaling_factor * sigma
    return np.flatnonzero(picked), float(mu), float(sigma)


def critical_outputs(network, member: LabeledImage, scaling_factor: float, band=Band.INSIDE) -> np.ndarray:
    outputs = network.source_outputs(member.pixels[None])[0]
    indices, _, _ = critical_indices(outputs, scaling_factor, band)
    return indices


def critical_set(network, pairs, train_set: ImageSet, scaling_factor: float, band=Band.INSIDE) -> CriticalSet:
    found = CriticalSet()
    for pair in pairs:
        if pair.degenerate:
            raise ClassExhaustedError(f"class {pair.class_id} is exhausted: only member {pair.most_similar.member_id} is left")
        for role, member in pair.members:
            image = train_set[train_set.position_of(member.member_id)]
            outputs = network.source_outputs(image.pixels[None])[0]
            indices, mu, sigma = critical_indices(outputs, scaling_factor, band)
            found.entries.append(CriticalEntry(
                pair.class_id, role, member.member_id, member.mse, tuple(indices.tolist()), mu, sigma,
            ))
    return found


def grow_layer(network: Network, pairs, train_set: ImageSet, scaling_factor: float, rng, band=Band.INSIDE, num_classes=NUM_CLASSES):
    """Builds the grown sparse layer, one perceptron per extreme member, and its classifier.

    Returns ``(sparse, classifier, critical)``.
    """
    critical = critical_set(network, pairs, train_set, scaling_factor, band)
    sparse = SparseFcLayer(critical.connections, network.source_size)
    sparse.initialize(rng)
    classifier = ClassifierLayer(num_classes, sparse.perceptron_count)
    classifier.initialize(rng)
    return sparse, classifier, critical


def weak_classes(recall) -> list[int]:
    """Classes whose recall lies strictly below the median recall."""
    present = [(class_id, value) for class_id, value in enumerate(recall) if value is not None]
    if not present:
        return []
    median = float(np.median([value for _, value in present]))
    return [class_id for class_id, value in present if value < median]


def ang(split: DataSplit, growth_config: GrowthConfig = None, train_config: TrainConfig = None, seed_builder=build_seed, num_classes=NUM_CLASSES):
    """Primes a seed network, grows it and trains it; returns ``(network, report)``.

    The returned network is the peak-validation snapshot of the last iteration.
    """
    growth_config = growth_config or GrowthConfig()
    train_config = train_config or TrainConfig()
    rng = make_rng(train_config.seed)

    seed = seed_builder(with_temp_classifier=True, rng=rng, temp_classifier_fan_in=growth_config.temp_classifier_fan_in)
    priming = prime(seed, split, growth_config.priming_cycles, train_config, rng)
    network = priming.final
    network.remove_classifier()
    source_depth = network.feature_depth
    report = GrowthReport(growth_config, train_config, priming=priming.history)
    logger.info(
        "seed primed for %d cycles, growing with x=%s (%s band)",
        growth_config.priming_cycles, growth_config.scaling_factor, growth_config.band,
    )

    excluded = set(growth_config.excluded)
    classes = list(range(num_classes))
    for iteration in range(1, growth_config.max_iterations + 1):
        profiles = class_profiles(network, split.train, excluded, classes, num_classes, train_config.eval_chunk)
        pairs = [select_extremes(profile) for profile in profiles]
        if iteration == 1:
            sparse, classifier, critical = grow_layer(
                network, pairs, split.train, growth_config.scaling_factor, rng, growth_config.band, num_classes,
            )
            network = Network(NetworkKind.GROWN, network.layers[:source_depth] + [sparse, classifier], network.input_shape)
        else:
            critical = critical_set(network, pairs, split.train, growth_config.scaling_factor, growth_config.band)
            sparse, classifier = network.layers[source_depth], network.layers[source_depth + 1]
            sparse.add_perceptrons(critical.connections, rng)
            classifier.extend_inputs(len(critical.entries), rng)
            network.validate()
        excluded |= critical.member_ids
        logger.info(
            "iteration %d: %d extreme perceptrons for classes %s, %d grown connections",
            iteration, len(critical.entries), classes, sum(e.connection_count for e in critical.entries),
        )

        result = run(network, split, train_config, rng)
        network = result.network
        recall = per_class_recall(network, split.validation, num_classes, train_config.eval_chunk)
        report.iterations.append(GrowthIteration(
            iteration=iteration,
            classes=classes,
            critical=critical,
            history=result.history,
            stopping_reason=result.stopping_reason,
            peak_cycle=result.peak_cycle,
            peak_validation=result.peak_validation,
            test_at_peak=result.test_at_peak,
            weights=network.weight_count,
            grown_connections=network.layers[source_depth].connection_count,
            recall=recall,
        ))

        if result.peak_validation >= growth_config.accuracy_target:
            report.finish = "accuracy_target"
            break
        classes = weak_classes(recall)
        if not classes:
            report.finish = "no_weak_classes"
            break
    else:
        report.finish = "max_iterations"

    logger.info("grown network: %d weights (%s)", network.weight_count, report.finish)
    return network, report
