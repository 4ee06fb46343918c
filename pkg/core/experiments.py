"""Scripted sweeps and the size/accuracy comparison between network variants.

Every sweep point starts from a freshly built network whose generator is
seeded with the configured seed, so all points share one weight initialisation.
Optima are chosen on validation accuracy; test accuracy is only reported.
"""
import logging
from dataclasses import dataclass, field, replace

from . import __version__
from .choices import NetworkKind, PruneTarget, SweepKind
from .errors import ConfigError
from .growth import GrowthConfig, ang
from .mnist import DataSplit
from .network import build_baseline, build_fc20, build_seed
from .pruning import PruneSpec, prune, sweep, threshold_for_weight_count
from .tensor import make_rng
from .training import TrainConfig, evaluate, prime, run

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

DEFAULT_GRIDS = {
    SweepKind.PRIMING_SATURATION: (30,),
    SweepKind.SCALING_FACTOR: (0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5),
    SweepKind.PRIMING_VS_CONNECTIONS: tuple(range(0, 21)),
    SweepKind.PRUNE_BASELINE: (0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1),
    SweepKind.PRUNE_FC20: (0.0, 0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1),
    SweepKind.FULL_COMPARISON: ("baseline", "grown", "fc20"),
}

COLUMNS = {
    SweepKind.PRIMING_SATURATION: ("cycle", "train", "validate", "test", "weights"),
    SweepKind.SCALING_FACTOR: ("scaling_factor", "connections", "weights", "validate", "test"),
    SweepKind.PRIMING_VS_CONNECTIONS: ("priming_cycles", "connections", "weights", "validate", "test"),
    SweepKind.PRUNE_BASELINE: ("threshold", "removed_percent", "connections", "test_accuracy", "error"),
    SweepKind.PRUNE_FC20: ("threshold", "removed_percent", "connections", "test_accuracy", "error"),
    SweepKind.FULL_COMPARISON: ("network", "weights", "relative_size", "validate", "test"),
}


@dataclass(frozen=True)
class SweepSpec:
    kind: SweepKind
    grid: tuple = ()
    seed: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", SweepKind(self.kind))
        except ValueError:
            raise ConfigError(f"unknown experiment {self.kind!r}; choose from {', '.join(SweepKind.values)}") from None
        grid = tuple(self.grid) or DEFAULT_GRIDS[self.kind]
        if not grid:
            raise ConfigError(f"{self.kind} needs a non-empty parameter grid")
        object.__setattr__(self, "grid", grid)


@dataclass
class ExperimentReport:
    spec: SweepSpec
    config: dict
    rows: list[dict] = field(default_factory=list)
    optimum: dict | None = None
    reference: dict | None = None

    @property
    def columns(self):
        return COLUMNS[self.spec.kind]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "version": __version__,
            "kind": str(self.spec.kind),
            "grid": list(self.spec.grid),
            "seed": self.spec.seed,
            "config": self.config,
            "rows": self.rows,
            "optimum": self.optimum,
            "reference": self.reference,
        }


def _peak_row(rows, key="validate"):
    """First row holding the highest validation accuracy."""
    best = None
    for row in rows:
        if row[key] is not None and (best is None or row[key] > best[key]):
            best = row
    return best


def _config(train_config, growth_config=None, **extra) -> dict:
    config = {"train": train_config.to_dict()}
    if growth_config is not None:
        config["growth"] = growth_config.to_dict()
    config.update(extra)
    return config


def train_fresh(builder, split: DataSplit, train_config: TrainConfig):
    """Builds and trains a network on one generator: initialisation draws first, then shuffles."""
    rng = make_rng(train_config.seed)
    return run(builder(rng), split, train_config, rng)


def run_priming_saturation(split: DataSplit, max_cycles: int = 30, train_config: TrainConfig = None, growth_config: GrowthConfig = None) -> ExperimentReport:
    """Primes the seed network until a stopping criterion holds, one row per trained cycle.

    The untrained evaluation goes to ``reference["initial"]``. The optimum is the
    cycle of the last validation improvement (saturation).
    """
    train_config = train_config or TrainConfig()
    growth_config = growth_config or GrowthConfig()
    if max_cycles < 1:
        raise ConfigError(f"max_cycles must be at least 1, got {max_cycles}")
    spec = SweepSpec(SweepKind.PRIMING_SATURATION, (max_cycles,), train_config.seed)
    rng = make_rng(train_config.seed)
    seed = build_seed(True, rng, temp_classifier_fan_in=growth_config.temp_classifier_fan_in)
    result = prime(seed, split, max_cycles, train_config, rng, initial_row=True, early_stopping=True)
    report = ExperimentReport(spec, _config(train_config, growth_config))
    initial, *trained = result.history
    report.rows = [metrics.to_dict() for metrics in trained]
    report.reference = {"initial": initial.to_dict()}
    peak = result.peak
    report.optimum = {
        "saturation_cycle": result.peak_cycle,
        "validate": peak.validate,
        "test": peak.test,
        "stopping_reason": str(result.stopping_reason),
    }
    return report


def _growth_row(key, value, network, report):
    last = report.last
    return {
        key: value,
        "connections": report.grown_connections,
        "weights": network.weight_count,
        "validate": last.peak_validation,
        "test": last.test_at_peak,
    }


def run_scaling_sweep(split: DataSplit, scaling_factors=None, train_config: TrainConfig = None, growth_config: GrowthConfig = None) -> ExperimentReport:
    train_config = train_config or TrainConfig()
    growth_config = growth_config or GrowthConfig()
    spec = SweepSpec(SweepKind.SCALING_FACTOR, tuple(scaling_factors or ()), train_config.seed)
    report = ExperimentReport(spec, _config(train_config, growth_config))
    for x in spec.grid:
        network, growth = ang(split, replace(growth_config, scaling_factor=float(x)), train_config)
        report.rows.append(_growth_row("scaling_factor", float(x), network, growth))
        logger.info("scaling factor %s: %d weights", x, network.weight_count)
    report.optimum = _peak_row(report.rows)
    return report


def run_priming_sweep(split: DataSplit, priming_cycles=None, train_config: TrainConfig = None, growth_config: GrowthConfig = None) -> ExperimentReport:
    train_config = train_config or TrainConfig()
    growth_config = growth_config or GrowthConfig()
    spec = SweepSpec(SweepKind.PRIMING_VS_CONNECTIONS, tuple(priming_cycles or ()), train_config.seed)
    report = ExperimentReport(spec, _config(train_config, growth_config))
    for cycles in spec.grid:
        network, growth = ang(split, replace(growth_config, priming_cycles=int(cycles)), train_config)
        report.rows.append(_growth_row("priming_cycles", int(cycles), network, growth))
        logger.info("priming cycles %s: %d weights", cycles, network.weight_count)
    report.optimum = _peak_row(report.rows)
    return report


def _prune_report(kind, builder, split, thresholds, train_config, targets, retrain, matched_weights=None):
    train_config = train_config or TrainConfig()
    spec = SweepSpec(kind, tuple(thresholds or ()), train_config.seed)
    trained = train_fresh(builder, split, train_config).network
    reference_test = evaluate(trained, split.test) if len(split.test) else None
    results = sweep(
        trained, spec.grid, split.test, targets,
        retrain_split=split if retrain else None, train_config=train_config,
    )
    report = ExperimentReport(spec, _config(train_config, targets=str(targets), retrain=retrain))
    report.rows = [result.to_dict() for result in results]
    report.reference = {
        "network": str(trained.name),
        "weights": trained.weight_count,
        "validate": evaluate(trained, split.validation),
        "test": reference_test,
    }
    if matched_weights is not None:
        threshold = threshold_for_weight_count(trained, matched_weights, targets)
        _, matched = prune(trained, PruneSpec(threshold, targets), split.test)
        report.reference["matched"] = matched.to_dict()
    return report


def run_prune_baseline(split: DataSplit, thresholds=None, train_config: TrainConfig = None, targets=PruneTarget.FC, retrain=False) -> ExperimentReport:
    return _prune_report(SweepKind.PRUNE_BASELINE, build_baseline, split, thresholds, train_config, targets, retrain)


def run_prune_fc20(split: DataSplit, thresholds=None, train_config: TrainConfig = None, targets=PruneTarget.FC, retrain=False, matched_weights=None) -> ExperimentReport:
    """Sweeps the trained 20 FC network; ``matched_weights`` adds a row pruned to that size."""
    return _prune_report(SweepKind.PRUNE_FC20, build_fc20, split, thresholds, train_config, targets, retrain, matched_weights)


def run_full_comparison(split: DataSplit, train_config: TrainConfig = None, growth_config: GrowthConfig = None) -> ExperimentReport:
    """Baseline, grown and 20 FC networks, plus the baseline pruned to half its
    weights and the 20 FC network pruned to the grown network's size."""
    train_config = train_config or TrainConfig()
    growth_config = growth_config or GrowthConfig()
    spec = SweepSpec(SweepKind.FULL_COMPARISON, seed=train_config.seed)

    networks = {}
    for kind, builder in ((NetworkKind.BASELINE, build_baseline), (NetworkKind.FC20, build_fc20)):
        networks[str(kind)] = train_fresh(builder, split, train_config).network
    grown, growth = ang(split, growth_config, train_config)
    networks[str(NetworkKind.GROWN)] = grown

    baseline = networks[str(NetworkKind.BASELINE)]
    half = threshold_for_weight_count(baseline, baseline.weight_count // 2)
    networks["baseline-pruned"], _ = prune(baseline, PruneSpec(half))
    matched = threshold_for_weight_count(networks[str(NetworkKind.FC20)], grown.weight_count)
    networks["fc20-pruned"], _ = prune(networks[str(NetworkKind.FC20)], PruneSpec(matched))

    report = ExperimentReport(spec, _config(train_config, growth_config))
    order = ("baseline", "baseline-pruned", "grown", "fc20", "fc20-pruned")
    for name in order:
        network = networks[name]
        report.rows.append({
            "network": name,
            "weights": network.weight_count,
            "relative_size": 100.0 * (network.weight_count - grown.weight_count) / grown.weight_count,
            "validate": evaluate(network, split.validation),
            "test": evaluate(network, split.test) if len(split.test) else None,
        })
    report.optimum = _peak_row(report.rows)
    report.reference = {"grown_weights": grown.weight_count, "growth_finish": growth.finish}
    return report


def run_experiment(kind, split: DataSplit, grid=(), train_config: TrainConfig = None, growth_config: GrowthConfig = None, **options) -> ExperimentReport:
    """Dispatches ``kind`` to its runner; ``options`` go to the prune sweeps."""
    spec = SweepSpec(kind, grid)
    train_config = train_config or TrainConfig()
    grid = tuple(grid)
    if spec.kind == SweepKind.PRIMING_SATURATION:
        return run_priming_saturation(split, int(grid[0]) if grid else DEFAULT_GRIDS[spec.kind][0], train_config, growth_config)
    if spec.kind == SweepKind.SCALING_FACTOR:
        return run_scaling_sweep(split, grid, train_config, growth_config)
    if spec.kind == SweepKind.PRIMING_VS_CONNECTIONS:
        return run_priming_sweep(split, grid, train_config, growth_config)
    if spec.kind == SweepKind.PRUNE_BASELINE:
        return run_prune_baseline(split, grid, train_config, **options)
    if spec.kind == SweepKind.PRUNE_FC20:
        return run_prune_fc20(split, grid, train_config, **options)
    return run_full_comparison(split, train_config, growth_config)
