import math

import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase

from core.choices import Band, NetworkKind
from core.errors import ClassExhaustedError, ConfigError, EmptyProfileError
from core.growth import (
    ClassProfile, GrowthConfig, MemberError, ang, class_profiles, critical_indices, critical_outputs, critical_set, grow_layer,
    select_extremes, weak_classes,
)
from core.layers import SparseFcLayer
from core.mnist import ImageSet
from core.network import Network
from core.tensor import make_rng
from core.training import TrainConfig
from core.tests.fixtures import synthetic_images, synthetic_split, tiny_seed


def stub_set():
    pixels = np.array([[0, 0], [1, 1], [4, 1]], dtype=np.float32)
    return ImageSet(pixels, np.zeros(3, dtype=np.int64), np.array([10, 11, 12], dtype=np.int64))


def stub_network():
    return Network(NetworkKind.CUSTOM, [], input_shape=(2,))


class CriticalIndicesTests(SimpleTestCase):
    def test_inside_band(self):
        indices, mu, sigma = critical_indices([1, 2, 3, 4, 10], 1.0)
        self.assertEqual(indices.tolist(), [0, 1, 2, 3])
        self.assertAlmostEqual(mu, 4.0)
        self.assertAlmostEqual(sigma, math.sqrt(10.0))

    def test_constant_outputs_are_all_critical(self):
        indices, _, sigma = critical_indices(np.full(7, 0.25), 0.5)
        self.assertEqual(sigma, 0.0)
        self.assertEqual(indices.tolist(), list(range(7)))

    def test_sets_nest_with_scaling_factor(self):
        values = make_rng(3).normal(size=200)
        previous = set()
        for x in (0.1, 0.5, 1.0, 1.5, 3.0):
            current = set(critical_indices(values, x)[0].tolist())
            self.assertTrue(previous <= current)
            previous = current

    def test_outside_band_is_the_complement(self):
        values = make_rng(4).normal(size=50)
        inside = set(critical_indices(values, 0.8, Band.INSIDE)[0].tolist())
        outside = set(critical_indices(values, 0.8, Band.OUTSIDE)[0].tolist())
        self.assertFalse(inside & outside)
        self.assertEqual(inside | outside, set(range(50)))


class CriticalOutputsTests(SimpleTestCase):
    def test_stub_member(self):
        network = Network(NetworkKind.CUSTOM, [], input_shape=(5,))
        pixels = np.array([[1, 2, 3, 4, 10]], dtype=np.float32)
        images = ImageSet(pixels, np.zeros(1, dtype=np.int64), np.array([7], dtype=np.int64))
        self.assertEqual(critical_outputs(network, images[0], 1.0).tolist(), [0, 1, 2, 3])
        self.assertEqual(critical_outputs(network, images[0], 1.0, Band.OUTSIDE).tolist(), [4])


class ProfileTests(SimpleTestCase):
    def test_members_sorted_by_error(self):
        (profile,) = class_profiles(stub_network(), stub_set(), num_classes=1)
        npt.assert_allclose(profile.average, [5 / 3, 2 / 3])
        self.assertEqual([m.member_id for m in profile.members], [11, 10, 12])
        npt.assert_allclose([m.mse for m in profile.members], [5 / 18, 29 / 18, 50 / 18])

    def test_ties_broken_by_member_id(self):
        (profile,) = class_profiles(stub_network(), stub_set(), excluded={11}, num_classes=1)
        self.assertEqual([m.member_id for m in profile.members], [10, 12])
        self.assertEqual(profile.members[0].mse, profile.members[1].mse)
        pair = select_extremes(profile)
        self.assertEqual((pair.most_similar.member_id, pair.least_similar.member_id), (10, 12))

    def test_independent_of_member_order(self):
        rng = make_rng(8)
        pixels = rng.integers(0, 10, size=(12, 3)).astype(np.float32)
        images = ImageSet(pixels, np.arange(12, dtype=np.int64) % 2, np.arange(100, 112, dtype=np.int64))
        network = Network(NetworkKind.CUSTOM, [], input_shape=(3,))
        shuffled = images.take(rng.permutation(12))
        for a, b in zip(class_profiles(network, images, num_classes=2), class_profiles(network, shuffled, num_classes=2)):
            npt.assert_array_equal(a.average, b.average)
            self.assertEqual(a.members, b.members)

    def test_empty_class(self):
        with self.assertRaises(EmptyProfileError):
            class_profiles(stub_network(), stub_set(), excluded={10, 11, 12}, num_classes=1)
        with self.assertRaises(EmptyProfileError):
            class_profiles(stub_network(), stub_set(), classes=[1])

    def test_single_member_is_degenerate(self):
        profile = ClassProfile(0, np.zeros(2), [MemberError(11, 0.0)])
        pair = select_extremes(profile)
        self.assertTrue(pair.degenerate)
        with self.assertRaises(ClassExhaustedError):
            critical_set(stub_network(), [pair], stub_set(), 1.0)

    def test_select_extremes_skips_excluded(self):
        (profile,) = class_profiles(stub_network(), stub_set(), num_classes=1)
        pair = select_extremes(profile, excluded={11, 12})
        self.assertTrue(pair.degenerate)
        with self.assertRaises(EmptyProfileError):
            select_extremes(profile, excluded={10, 11, 12})


class GrowLayerTests(SimpleTestCase):
    def setUp(self):
        self.rng = make_rng(0)
        self.network = tiny_seed(with_temp_classifier=False, rng=self.rng)
        self.images = synthetic_images(12, num_classes=3, rows=4, cols=4)
        self.pairs = [select_extremes(p) for p in class_profiles(self.network, self.images, num_classes=3)]

    def test_huge_scaling_factor_connects_everything(self):
        conv = self.network.layers[0].weights.copy()
        sparse, classifier, critical = grow_layer(self.network, self.pairs, self.images, 1e6, self.rng, num_classes=3)
        self.assertIsInstance(sparse, SparseFcLayer)
        self.assertEqual(sparse.connection_counts(), [8] * 6)
        self.assertEqual((classifier.perceptron_count, classifier.input_count), (3, 6))
        self.assertEqual(len(critical.member_ids), 6)
        npt.assert_array_equal(self.network.layers[0].weights, conv)

    def test_one_perceptron_per_extreme_member(self):
        sparse, _, critical = grow_layer(self.network, self.pairs, self.images, 1.0, self.rng, num_classes=3)
        self.assertEqual([e.role for e in critical.entries[:2]], ["most_similar", "least_similar"])
        self.assertEqual(sparse.connection_counts(), [e.connection_count for e in critical.entries])
        for entry in critical.entries:
            image = self.images[self.images.position_of(entry.member_id)]
            self.assertEqual(image.label, entry.class_id)


class WeakClassTests(SimpleTestCase):
    def test_strictly_below_median(self):
        self.assertEqual(weak_classes([90.0, 80.0, 100.0, None, 70.0]), [1, 4])

    def test_equal_recall_has_no_weak_classes(self):
        self.assertEqual(weak_classes([50.0, 50.0, 50.0]), [])
        self.assertEqual(weak_classes([None, None]), [])


class GrowthConfigTests(SimpleTestCase):
    def test_invalid_values(self):
        for kwargs in (
            {"scaling_factor": 0.0}, {"priming_cycles": -1}, {"accuracy_target": 101.0}, {"max_iterations": 0},
        ):
            with self.assertRaises(ConfigError):
                GrowthConfig(**kwargs)
        with self.assertRaises(ValueError):
            GrowthConfig(band="sideways")

    def test_to_dict(self):
        data = GrowthConfig(excluded={3, 1}).to_dict()
        self.assertEqual(data["excluded"], [1, 3])
        self.assertEqual(data["band"], "inside")


class AngTests(SimpleTestCase):
    def _grow(self):
        split = synthetic_split(train=30, validation=9, test=9, num_classes=3, rows=4, cols=4)
        growth = GrowthConfig(priming_cycles=1, accuracy_target=100.0, max_iterations=2, temp_classifier_fan_in=None)
        train = TrainConfig(max_cycles=2, learning_rate=0.05)
        return ang(split, growth, train, seed_builder=tiny_seed, num_classes=3)

    def test_identical_runs(self):
        first, first_report = self._grow()
        second, second_report = self._grow()
        self.assertEqual(first_report.to_dict(), second_report.to_dict())
        for a, b in zip(first.layers, second.layers):
            npt.assert_array_equal(a.weights, b.weights)

    def test_grown_structure(self):
        network, report = self._grow()
        self.assertEqual(network.name, NetworkKind.GROWN)
        self.assertEqual([layer.kind for layer in network.layers], ["conv2d", "sparse", "classifier"])
        self.assertEqual(len(report.priming), 1)
        first = report.iterations[0]
        self.assertEqual(first.classes, [0, 1, 2])
        self.assertEqual(len(first.critical.entries), 6)
        sparse = network.layers[1]
        expected = sum(len(it.critical.entries) for it in report.iterations)
        self.assertEqual(sparse.perceptron_count, expected)
        self.assertEqual(network.layers[2].input_count, expected)
        self.assertEqual(report.total_weights, network.weight_count)
        self.assertIn(report.finish, ("accuracy_target", "no_weak_classes", "max_iterations"))

    def test_members_used_once(self):
        _, report = self._grow()
        seen = set()
        for iteration in report.iterations:
            ids = iteration.critical.member_ids
            self.assertFalse(ids & seen)
            seen |= ids
