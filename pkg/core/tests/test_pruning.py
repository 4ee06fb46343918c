import math

import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase

from core.choices import NetworkKind, PruneTarget
from core.errors import ConfigError
from core.layers import ClassifierLayer, DenseFcLayer
from core.mnist import DataSplit
from core.network import Network
from core.pruning import PruneSpec, parse_targets, prune, sweep, target_layers, threshold_for_weight_count
from core.tensor import make_rng
from core.training import TrainConfig, train_cycle
from core.tests.fixtures import tiny_network, tiny_seed, vector_images


def hand_network():
    dense = DenseFcLayer(1, 3)
    dense.weights[...] = [[0.5, -0.01, 0.2]]
    dense.biases[...] = [0.0]
    classifier = ClassifierLayer(2, 1)
    classifier.weights[...] = [[0.3], [-0.4]]
    classifier.biases[...] = [0.05, -0.05]
    return Network(NetworkKind.CUSTOM, [dense, classifier], input_shape=(3,))


class PruneTests(SimpleTestCase):
    def test_small_weight_removed(self):
        network = hand_network()
        pruned, result = prune(network, PruneSpec(0.1))
        npt.assert_array_equal(pruned.layers[0].weights, np.array([[0.5, 0.0, 0.2]], dtype=np.float32))
        self.assertEqual((result.removed, result.original_weights, result.remaining_weights), (1, 8, 7))
        self.assertAlmostEqual(result.removed_fraction, 1 / 8)
        self.assertAlmostEqual(result.removed_percent, 12.5)

    def test_original_is_untouched(self):
        network = hand_network()
        prune(network, PruneSpec(1.0))
        self.assertIsNone(network.layers[0].mask)
        self.assertEqual(network.weight_count, 8)

    def test_zero_and_infinite_thresholds(self):
        network = tiny_network(make_rng(0))
        _, kept = prune(network, PruneSpec(0.0))
        self.assertEqual(kept.removed, 0)
        pruned, dropped = prune(network, PruneSpec(math.inf))
        self.assertEqual(dropped.remaining_weights, 6 + 2)
        for layer, original in zip(pruned.layers, network.layers):
            npt.assert_array_equal(layer.biases, original.biases)

    def test_removed_weights_grow_with_threshold(self):
        network = tiny_network(make_rng(1))
        removed = [prune(network, PruneSpec(t))[1].removed for t in (0.0, 0.05, 0.1, 0.2, 0.4, 1.0)]
        self.assertEqual(removed, sorted(removed))

    def test_pruning_twice_changes_nothing(self):
        network = tiny_network(make_rng(2))
        once, first = prune(network, PruneSpec(0.2))
        twice, second = prune(once, PruneSpec(0.2))
        self.assertEqual(first.remaining_weights, second.remaining_weights)
        self.assertEqual(second.removed, 0)
        for a, b in zip(once.layers, twice.layers):
            npt.assert_array_equal(a.weights, b.weights)

    def test_composition_equals_larger_threshold(self):
        network = tiny_network(make_rng(6))
        for low, high in ((0.05, 0.2), (0.1, 0.35), (0.0, 0.5)):
            stepwise, _ = prune(prune(network, PruneSpec(low))[0], PruneSpec(high))
            direct, _ = prune(network, PruneSpec(high))
            self.assertEqual(stepwise.weight_count, direct.weight_count)
            for a, b in zip(stepwise.layers, direct.layers):
                npt.assert_array_equal(a.weights, b.weights)
                npt.assert_array_equal(a.mask, b.mask)

    def test_mask_matches_zeroed_weights(self):
        network = tiny_network(make_rng(3))
        pruned, _ = prune(network, PruneSpec(0.25))
        zeroed = network.copy()
        for layer in zeroed.layers:
            layer.weights[np.abs(layer.weights) < 0.25] = 0
        images = vector_images(10)
        npt.assert_array_equal(pruned.forward(images.pixels), zeroed.forward(images.pixels))

    def test_pruned_weights_stay_dead_while_training(self):
        pruned, _ = prune(tiny_network(make_rng(4)), PruneSpec(0.3))
        weights = pruned.weight_count
        train_cycle(pruned, vector_images(20), 0.5)
        self.assertEqual(pruned.weight_count, weights)
        for layer in pruned.layers:
            self.assertFalse(np.any(layer.weights[~layer.mask]))

    def test_conv_target_leaves_dense_layers(self):
        network = tiny_seed(with_temp_classifier=True, rng=make_rng(0), temp_classifier_fan_in=None)
        pruned, result = prune(network, PruneSpec(math.inf, PruneTarget.CONV))
        self.assertEqual(result.removed, network.layers[0].weights.size)
        npt.assert_array_equal(pruned.layers[1].weights, network.layers[1].weights)
        self.assertIsNone(pruned.layers[1].mask)

    def test_evaluates_when_given_a_set(self):
        _, result = prune(tiny_network(make_rng(0)), PruneSpec(0.1), vector_images(10))
        self.assertIsNotNone(result.test_accuracy)
        self.assertAlmostEqual(result.error, 100.0 - result.test_accuracy)


class SpecTests(SimpleTestCase):
    def test_invalid_thresholds(self):
        for threshold in (-0.1, math.nan):
            with self.assertRaises(ConfigError):
                PruneSpec(threshold)

    def test_parse_targets(self):
        self.assertEqual(parse_targets("fc"), PruneTarget.FC)
        self.assertEqual(parse_targets("all"), PruneTarget.ALL)
        self.assertEqual(parse_targets("2,3"), (2, 3))
        with self.assertRaises(ConfigError):
            parse_targets("dense")

    def test_target_layers(self):
        network = tiny_seed(with_temp_classifier=True, temp_classifier_fan_in=None)
        self.assertEqual(target_layers(network, PruneTarget.FC), [1])
        self.assertEqual(target_layers(network, PruneTarget.CONV), [0])
        self.assertEqual(target_layers(network, "all"), [0, 1])
        with self.assertRaises(ConfigError):
            target_layers(network, "5")


class ThresholdForWeightCountTests(SimpleTestCase):
    def test_hits_the_requested_size(self):
        network = tiny_network(make_rng(5))
        threshold = threshold_for_weight_count(network, 30)
        pruned, _ = prune(network, PruneSpec(threshold))
        self.assertLessEqual(pruned.weight_count, 30)
        self.assertGreaterEqual(pruned.weight_count, 28)

    def test_bounds(self):
        network = tiny_network(make_rng(5))
        self.assertEqual(threshold_for_weight_count(network, network.weight_count), 0.0)
        self.assertEqual(threshold_for_weight_count(network, 0), math.inf)


class SweepTests(SimpleTestCase):
    def test_sorted_results(self):
        results = sweep(tiny_network(make_rng(0)), [0.3, 0.0, 0.1], vector_images(10))
        self.assertEqual([r.threshold for r in results], [0.0, 0.1, 0.3])
        self.assertEqual([r.remaining_weights for r in results], sorted((r.remaining_weights for r in results), reverse=True))
        self.assertFalse(any(r.retrained for r in results))
        self.assertEqual(
            set(results[0].to_dict()),
            {"threshold", "removed_percent", "connections", "test_accuracy", "error", "retrained"},
        )

    def test_empty_thresholds(self):
        with self.assertRaises(ConfigError):
            sweep(tiny_network(make_rng(0)), [], vector_images(10))

    def test_retraining_keeps_masks(self):
        split = DataSplit(vector_images(20, seed=1), vector_images(6, seed=2), vector_images(6, seed=3))
        network = tiny_network(make_rng(0))
        plain = sweep(network, [0.2], split.test)
        retrained = sweep(network, [0.2], split.test, retrain_split=split, train_config=TrainConfig(max_cycles=2, learning_rate=0.05))
        self.assertTrue(retrained[0].retrained)
        self.assertEqual(retrained[0].remaining_weights, plain[0].remaining_weights)
