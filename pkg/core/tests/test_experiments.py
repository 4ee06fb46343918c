import numpy.testing as npt
from django.test import SimpleTestCase

from core.choices import SweepKind
from core.errors import ConfigError
from core.experiments import (
    COLUMNS, DEFAULT_GRIDS, SweepSpec, run_experiment, run_full_comparison, run_priming_saturation, run_scaling_sweep,
    train_fresh,
)
from core.growth import GrowthConfig
from core.network import build_fc20
from core.tensor import make_rng
from core.training import TrainConfig, evaluate, run, stopping_reason
from core.tests.fixtures import synthetic_split

TRAIN = TrainConfig(max_cycles=1, learning_rate=0.05)
GROWTH = GrowthConfig(priming_cycles=1)


class SweepSpecTests(SimpleTestCase):
    def test_unknown_kind(self):
        with self.assertRaises(ConfigError) as ctx:
            SweepSpec("bogus")
        self.assertIn("prune-baseline", str(ctx.exception))

    def test_default_grid(self):
        spec = SweepSpec("scaling")
        self.assertEqual(spec.kind, SweepKind.SCALING_FACTOR)
        self.assertEqual(spec.grid, DEFAULT_GRIDS[SweepKind.SCALING_FACTOR])
        self.assertEqual(SweepSpec("scaling", [0.5]).grid, (0.5,))

    def test_every_kind_has_columns_and_grid(self):
        for kind in SweepKind:
            self.assertIn(kind, COLUMNS)
            self.assertTrue(DEFAULT_GRIDS[kind])


class PrimingSaturationTests(SimpleTestCase):
    def test_single_trained_row(self):
        report = run_priming_saturation(synthetic_split(), 1, TRAIN, GROWTH)
        self.assertEqual([row["cycle"] for row in report.rows], [1])
        self.assertEqual(report.reference["initial"]["cycle"], 0)
        self.assertEqual(report.rows[0]["weights"], 16_060)
        self.assertIn(report.optimum["saturation_cycle"], (0, 1))
        data = report.to_dict()
        self.assertEqual(data["kind"], "priming")
        self.assertEqual(data["schema_version"], 1)

    def test_needs_a_cycle(self):
        with self.assertRaises(ConfigError):
            run_priming_saturation(synthetic_split(), 0, TRAIN, GROWTH)

    def test_ends_at_the_first_stopping_criterion(self):
        config = TrainConfig(max_cycles=6, patience=1, learning_rate=0.05)
        report = run_priming_saturation(synthetic_split(), 6, config, GROWTH)
        validations = [row["validate"] for row in report.rows]
        self.assertLessEqual(len(validations), 6)
        self.assertIsNone(stopping_reason(validations[:-1], config))
        self.assertEqual(report.optimum["stopping_reason"], str(stopping_reason(validations, config)))


class GrowthSweepTests(SimpleTestCase):
    def test_connections_grow_with_scaling_factor(self):
        report = run_scaling_sweep(synthetic_split(), (0.1, 1.0), TRAIN, GROWTH)
        self.assertEqual([row["scaling_factor"] for row in report.rows], [0.1, 1.0])
        self.assertLessEqual(report.rows[0]["connections"], report.rows[1]["connections"])
        self.assertIn(report.optimum, report.rows)
        for row in report.rows:
            self.assertEqual(set(row), set(COLUMNS[SweepKind.SCALING_FACTOR]))

    def test_dispatch(self):
        report = run_experiment("priming-connections", synthetic_split(), [0], TRAIN, GROWTH)
        self.assertEqual(report.spec.kind, SweepKind.PRIMING_VS_CONNECTIONS)
        self.assertEqual([row["priming_cycles"] for row in report.rows], [0])


class PruneSweepTests(SimpleTestCase):
    def test_fc20_with_matched_size(self):
        report = run_experiment("prune-fc20", synthetic_split(), [0.0, 0.05], TRAIN, matched_weights=20_000)
        self.assertEqual([row["threshold"] for row in report.rows], [0.0, 0.05])
        self.assertEqual(report.rows[0]["connections"], build_fc20().weight_count)
        self.assertEqual(report.reference["weights"], 24_280)
        self.assertLessEqual(report.reference["matched"]["connections"], 20_000)
        self.assertIsNone(report.optimum)


class FullComparisonTests(SimpleTestCase):
    def test_rows(self):
        report = run_full_comparison(synthetic_split(), TRAIN, GROWTH)
        rows = {row["network"]: row for row in report.rows}
        self.assertEqual(list(rows), ["baseline", "baseline-pruned", "grown", "fc20", "fc20-pruned"])
        grown = rows["grown"]["weights"]
        self.assertEqual(rows["grown"]["relative_size"], 0.0)
        self.assertEqual(rows["baseline"]["weights"], 61_160)
        self.assertLessEqual(rows["baseline-pruned"]["weights"], 61_160 // 2)
        if grown < rows["fc20"]["weights"]:
            self.assertLessEqual(rows["fc20-pruned"]["weights"], grown)
        self.assertAlmostEqual(rows["baseline"]["relative_size"], 100.0 * (61_160 - grown) / grown)
        self.assertEqual(report.reference["grown_weights"], grown)


class TrainFreshTests(SimpleTestCase):
    def test_initialisation_and_shuffles_share_one_generator(self):
        split = synthetic_split()
        config = TrainConfig(max_cycles=2, learning_rate=0.05)
        rng = make_rng(config.seed)
        expected = run(build_fc20(rng), split, config, rng).network
        trained = train_fresh(build_fc20, split, config).network
        for a, b in zip(trained.layers, expected.layers):
            npt.assert_array_equal(a.weights, b.weights)
            npt.assert_array_equal(a.biases, b.biases)

    def test_prune_reference_is_the_shared_generator_network(self):
        split = synthetic_split()
        trained = train_fresh(build_fc20, split, TRAIN).network
        report = run_experiment("prune-fc20", split, [0.0], TRAIN)
        self.assertEqual(report.reference["validate"], evaluate(trained, split.validation))
        self.assertEqual(report.rows[0]["test_accuracy"], evaluate(trained, split.test))
