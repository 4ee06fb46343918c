import math

import numpy as np
import numpy.testing as npt
from django.test import SimpleTestCase

from core.errors import NonFiniteError, ShapeError
from core.tensor import (
    check_finite, cross_entropy, make_rng, mean, mean_rows, mse, row_mse, softmax, std_dev, tanh_derivative,
    tanh_grad_from_output,
)

# first draws of make_rng(0).random()
SEED_ZERO_STREAM = (
    0.6369616873214543, 0.2697867137638703, 0.04097352393619469, 0.016527635528529094,
    0.8132702392002724, 0.9127555772777217, 0.6066357757671799, 0.7294965609839984,
    0.5436249914654229, 0.9350724237877682, 0.8158535541215322, 0.002738500170148095,
    0.8574042765875693, 0.033585575305464355, 0.7296554464299441, 0.17565562060255901,
    0.8631789223498866, 0.5414612202490917, 0.2997118905373848, 0.42268722119765845,
    0.028319671145462966, 0.12428327649956394, 0.6706244146936303, 0.6471895115742501,
    0.6153851114812539, 0.38367755426188344, 0.997209935789211, 0.9808353387762301,
    0.6855419844806947, 0.6504592762678163, 0.6884467305709401, 0.3889214239791038,
    0.13509650502241122, 0.7214883401940817, 0.5253543224757259, 0.31024187555895566,
    0.4858353588317891, 0.8894878343490003, 0.9340435159562497, 0.35779519670907023,
    0.5715298307297609, 0.32186939107594215, 0.5943000301996968, 0.33791122550713326,
    0.39161900052816123, 0.8902743520047923, 0.22715759353337972, 0.6231871446860424,
    0.08401534358238483, 0.8326441476533978, 0.7870983074886834, 0.23936944299295215,
    0.8764842308107038, 0.05856803480519435, 0.3361170605456604, 0.15027946689483906,
    0.450339366649287, 0.7963242702872942, 0.23064220899374743, 0.05202130106440961,
    0.4045518398215282, 0.19851304450925533, 0.0907530456191219, 0.5803323859868507,
    0.2986961328189226, 0.6719948779563594, 0.1995154439682133, 0.9421131105064978,
    0.36511016824482856, 0.10549527957022953, 0.6291081515397092, 0.9271545530678674,
    0.440377154715784, 0.9545904936907372, 0.499895813687647, 0.42522862484907553,
    0.6202134520153778, 0.9950965052353241, 0.9489436749377653, 0.4600451393090961,
    0.7577288453082914, 0.49742269548761897, 0.5293121601967704, 0.7857857007138075,
    0.4146558493556708, 0.7344835717887294, 0.7111428779897498, 0.9320596866133782,
    0.1149326332809052, 0.7290151170763094, 0.9274239286245599, 0.9679261899246464,
    0.014706304965369288, 0.8636400902455758, 0.9811950400663443, 0.9572101796109636,
    0.1487640122324979, 0.972628813822955, 0.8899355557205206, 0.8223738275430704,
)


class RngTests(SimpleTestCase):
    def test_seed_zero_stream_is_fixed(self):
        npt.assert_array_equal(make_rng(0).random(100), SEED_ZERO_STREAM)

    def test_same_seed_same_stream(self):
        npt.assert_array_equal(make_rng(7).permutation(50), make_rng(7).permutation(50))


class StatisticsTests(SimpleTestCase):
    def test_mean_and_population_std(self):
        self.assertEqual(mean([1, 2, 3, 4, 10]), 4.0)
        self.assertAlmostEqual(std_dev([1, 2, 3, 4, 10]), math.sqrt(10.0), places=12)

    def test_constant_vector_has_zero_spread(self):
        self.assertEqual(std_dev([0.25] * 7), 0.0)

    def test_mse(self):
        self.assertEqual(mse([0, 0], [1, 3]), 5.0)
        self.assertEqual(mse([2.5], [2.5]), 0.0)

    def test_row_kernels_agree_with_vector_kernels(self):
        rows = make_rng(2).normal(size=(6, 9))
        average = mean_rows(rows)
        npt.assert_allclose(average, [mean(column) for column in rows.T], rtol=1e-12)
        npt.assert_allclose(row_mse(rows, average), [mse(row, average) for row in rows], rtol=1e-12)

    def test_row_kernel_shapes(self):
        with self.assertRaises(ShapeError):
            mean_rows(np.zeros((0, 3)))
        with self.assertRaises(ShapeError):
            row_mse(np.zeros((2, 3)), np.zeros(4))

    def test_empty_and_mismatched_inputs(self):
        with self.assertRaises(ShapeError):
            mean([])
        with self.assertRaises(ShapeError):
            std_dev([])
        with self.assertRaises(ShapeError):
            mse([1, 2], [1])


class ActivationTests(SimpleTestCase):
    def test_tanh_derivative_matches_central_differences(self):
        x = make_rng(11).uniform(-4.0, 4.0, 1000)
        h = 1e-6
        numeric = (np.tanh(x + h) - np.tanh(x - h)) / (2 * h)
        npt.assert_allclose(tanh_derivative(x), numeric, rtol=1e-6, atol=1e-8)

    def test_tanh_derivative_from_input_and_output_agree(self):
        x = np.linspace(-3, 3, 13)
        npt.assert_allclose(tanh_derivative(x), tanh_grad_from_output(np.tanh(x)), rtol=1e-12)

    def test_softmax_is_shift_invariant_and_normalised(self):
        logits = np.array([1.0, 2.0, 3.0])
        npt.assert_allclose(softmax(logits), softmax(logits + 1000.0), rtol=1e-12)
        self.assertAlmostEqual(float(softmax(logits).sum()), 1.0, places=12)

    def test_cross_entropy_is_finite_for_zero_probability(self):
        self.assertEqual(cross_entropy(np.array([1.0, 0.0]), 0), 0.0)
        self.assertTrue(math.isfinite(cross_entropy(np.array([1.0, 0.0]), 1)))

    def test_check_finite(self):
        check_finite(np.ones(3), "ones")
        with self.assertRaises(NonFiniteError):
            check_finite(np.array([1.0, np.nan]), "weights")
