import math
import unittest

import numpy as np
from scipy.stats import chi2

from fusekit import kalman, lsq, matlib
from fusekit.kalman import FilterEstimate, EstimateKind, InnovationRecord, FilterSequenceError
from fusekit.matlib import DomainError, MatrixShapeError
from fusekit.statespace import Gaussian, DiscreteLinearModel, MeasurementModel


def posterior(mean, cov, k:int=0) -> FilterEstimate:
    return FilterEstimate(Gaussian(mean, cov), EstimateKind.POSTERIOR, k)


def prior(mean, cov, k:int=1) -> FilterEstimate:
    return FilterEstimate(Gaussian(mean, cov), EstimateKind.PRIOR, k)


def random_covariance(rng:np.random.Generator, n:int, floor:float=0.1) -> np.ndarray:
    root = rng.normal(size=(n, n))
    return matlib.symmetrize(matlib.matrix(root @ root.T + floor * np.eye(n)))


class PredictTest(unittest.TestCase):

    def test_static_noiseless(self):
        est = posterior([1.0, -2.0], [[2.0, 0.5], [0.5, 1.0]])
        predicted = kalman.kf_predict(est, DiscreteLinearModel(np.eye(2), 1.0))
        np.testing.assert_array_equal(est.mean(), predicted.mean())
        np.testing.assert_array_equal(est.cov(), predicted.cov())
        self.assertEqual(EstimateKind.PRIOR, predicted.kind())
        self.assertEqual(1, predicted.k())

    def test_scalar(self):
        predicted = kalman.kf_predict(posterior([1.0], [[1.0]]),
            DiscreteLinearModel([[2.0]], 1.0, l=[[1.0]], q=[[1.0]]))
        self.assertEqual(5.0, predicted.cov()[0, 0])
        self.assertEqual(2.0, predicted.mean()[0])

    def test_pendulum_mean(self):
        dt = 0.1
        omega = math.sqrt(9.81)
        theta = math.radians(10.0)
        f = [[math.cos(omega * dt), math.sin(omega * dt) / omega],
             [-omega * math.sin(omega * dt), math.cos(omega * dt)]]
        predicted = kalman.kf_predict(posterior([theta, 0.0], 0.01 * np.eye(2)), DiscreteLinearModel(f, dt))
        np.testing.assert_allclose(np.array([theta * math.cos(omega * dt), -theta * omega * math.sin(omega * dt)]),
            predicted.mean(), atol=1e-15)

    def test_control_input(self):
        model = DiscreteLinearModel(np.eye(2), 0.1, g=[[0.005], [0.1]])
        predicted = kalman.kf_predict(posterior([0.0, 0.0], np.eye(2)), model, [2.0])
        np.testing.assert_allclose(np.array([0.01, 0.2]), predicted.mean())

    def test_requires_posterior(self):
        with self.assertRaises(FilterSequenceError):
            kalman.kf_predict(prior([0.0], [[1.0]]), DiscreteLinearModel([[1.0]], 1.0))

    def test_dimension_mismatch(self):
        with self.assertRaises(MatrixShapeError):
            kalman.kf_predict(posterior([0.0], [[1.0]]), DiscreteLinearModel(np.eye(2), 1.0))


class UpdateTest(unittest.TestCase):

    def test_scalar(self):
        updated, record = kalman.kf_update(prior([0.0], [[1.0]]), MeasurementModel([[1.0]], [[1.0]]), [2.0])
        self.assertEqual(EstimateKind.POSTERIOR, updated.kind())
        self.assertEqual(1, updated.k())
        self.assertAlmostEqual(1.0, updated.mean()[0], 15)
        self.assertAlmostEqual(0.5, updated.cov()[0, 0], 15)
        self.assertEqual(2.0, record.nu()[0])
        self.assertEqual(2.0, record.s()[0, 0])
        self.assertAlmostEqual(2.0, record.nis(), 15)

    def test_update_logged(self):
        with self.assertLogs("fusekit.kalman", level="DEBUG") as logs:
            kalman.kf_update(prior([0.0], [[1.0]], 4), MeasurementModel([[1.0]], [[1.0]]), [2.0])
        self.assertIn("Update at step 4", logs.output[0])

    def test_uninformative_measurement(self):
        est = prior([1.0, 2.0], [[2.0, 0.3], [0.3, 1.0]])
        updated, record = kalman.kf_update(est, MeasurementModel(np.eye(2), 1e12 * np.eye(2)), [50.0, -50.0])
        np.testing.assert_allclose(est.mean(), updated.mean(), rtol=1e-6)
        np.testing.assert_allclose(est.cov(), updated.cov(), rtol=1e-6)

    def test_diffuse_prior(self):
        updated, record = kalman.kf_update(prior([0.0, 0.0], 1e12 * np.eye(2)),
            MeasurementModel(np.eye(2), np.eye(2)), [3.0, -4.0])
        np.testing.assert_allclose(np.array([3.0, -4.0]), updated.mean(), rtol=1e-6)

    def test_requires_prior(self):
        with self.assertRaises(FilterSequenceError):
            kalman.kf_update(posterior([0.0], [[1.0]]), MeasurementModel([[1.0]], [[1.0]]), [1.0])

    def test_measurement_size(self):
        with self.assertRaises(MatrixShapeError):
            kalman.kf_update(prior([0.0], [[1.0]]), MeasurementModel([[1.0]], [[1.0]]), [1.0, 2.0])
        with self.assertRaises(MatrixShapeError):
            kalman.kf_update(prior([0.0, 0.0], np.eye(2)), MeasurementModel([[1.0]], [[1.0]]), [1.0])

    def test_coast(self):
        est = prior([1.0], [[2.0]], 4)
        coasted = kalman.kf_coast(est)
        self.assertEqual(EstimateKind.POSTERIOR, coasted.kind())
        self.assertEqual(4, coasted.k())
        self.assertIs(est.belief(), coasted.belief())
        with self.assertRaises(FilterSequenceError):
            kalman.kf_coast(coasted)

    def test_matches_recursive_least_squares(self):
        rng = np.random.default_rng(20)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            d = int(rng.integers(1, 4))
            p = int(rng.integers(1, 4))
            x0 = rng.normal(size=n)
            p0 = random_covariance(rng, n)
            h = rng.normal(size=(d, n))
            r = random_covariance(rng, d)
            z = rng.normal(size=d)

            model = DiscreteLinearModel(np.eye(n), 0.1, l=rng.normal(size=(n, p)), q=np.zeros((p, p)))
            predicted = kalman.kf_predict(posterior(x0, p0), model)
            updated, record = kalman.kf_update(predicted, MeasurementModel(h, r), z)
            state = lsq.rls_update(lsq.rls_init(x0, p0), h, z, r)

            self.assertLessEqual(matlib.max_abs(updated.mean() - state.x_hat()), 1e-12)
            self.assertLessEqual(matlib.max_abs(updated.cov() - state.p()), 1e-12)

    def test_posterior_not_larger(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            d = int(rng.integers(1, 4))
            p_prior = random_covariance(rng, n)
            updated, record = kalman.kf_update(prior(rng.normal(size=n), p_prior),
                MeasurementModel(rng.normal(size=(d, n)), random_covariance(rng, d)), rng.normal(size=d))
            for _ in range(10):
                direction = rng.normal(size=n)
                self.assertLessEqual(direction @ updated.cov() @ direction,
                    direction @ p_prior @ direction + 1e-9)

    def test_precision_weighted_mean(self):
        rng = np.random.default_rng(22)
        for _ in range(100):
            n = int(rng.integers(1, 5))
            x = rng.normal(size=n)
            z = rng.normal(size=n)
            p_prior = random_covariance(rng, n, 0.5)
            r = random_covariance(rng, n, 0.5)
            updated, record = kalman.kf_update(prior(x, p_prior), MeasurementModel(np.eye(n), r), z)

            p_info = np.linalg.inv(p_prior)
            r_info = np.linalg.inv(r)
            expected = np.linalg.solve(p_info + r_info, p_info @ x + r_info @ z)
            self.assertLessEqual(matlib.max_abs(updated.mean() - expected), 1e-8)

    def test_covariance_independent_of_measurements(self):
        rng = np.random.default_rng(23)
        model = DiscreteLinearModel([[1.0, 0.1], [0.0, 1.0]], 0.1, l=[[0.005], [0.1]], q=[[0.25]])
        meas = MeasurementModel([[1.0, 0.0]], [[0.04]])
        first = second = posterior([0.0, 0.0], np.eye(2))
        for _ in range(50):
            first, record = kalman.kf_update(kalman.kf_predict(first, model), meas, rng.normal(size=1))
            second, record = kalman.kf_update(kalman.kf_predict(second, model), meas, 100.0 * rng.normal(size=1))
            self.assertLessEqual(matlib.max_abs(first.cov() - second.cov()), 1e-12)

    def test_cost_is_expected_squared_error(self):
        rng = np.random.default_rng(24)
        p0 = 1.0
        r = 0.5
        meas = MeasurementModel([[1.0]], [[r]])
        squared_errors = list()
        for _ in range(20000):
            x = rng.normal(0.0, math.sqrt(p0))
            z = x + rng.normal(0.0, math.sqrt(r))
            updated, record = kalman.kf_update(prior([0.0], [[p0]]), meas, [z])
            squared_errors.append((updated.mean()[0] - x) ** 2)

        cost = kalman.estimation_cost(updated)
        self.assertAlmostEqual(p0 * r / (p0 + r), cost, 12)
        self.assertLessEqual(abs(np.mean(squared_errors) - cost) / cost, 0.05)


class InnovationTest(unittest.TestCase):

    def test_record(self):
        record = InnovationRecord([1.0, -1.0], [[2.0, 0.0], [0.0, 4.0]])
        self.assertAlmostEqual(0.75, record.nis(), 15)
        self.assertEqual(2, record.dim())
        with self.assertRaises(DomainError):
            InnovationRecord([1.0], [[0.0]])
        with self.assertRaises(MatrixShapeError):
            InnovationRecord([1.0, 2.0], [[1.0]])

    def test_all_zero(self):
        summary = kalman.innovation_stats([InnovationRecord([0.0], [[1.0]]) for _ in range(5)])
        np.testing.assert_array_equal(np.zeros(1), summary.mean())
        np.testing.assert_array_equal(np.zeros((1, 1)), summary.sample_cov())
        self.assertEqual(0.0, summary.mean_nis())

    def test_constant(self):
        summary = kalman.innovation_stats([InnovationRecord([0.3, -2.0], np.eye(2)) for _ in range(10)])
        np.testing.assert_allclose(np.array([0.3, -2.0]), summary.mean(), atol=1e-15)
        np.testing.assert_allclose(np.zeros((2, 2)), summary.sample_cov(), atol=1e-15)
        self.assertEqual(10, summary.count())

    def test_chi_square_mean(self):
        rng = np.random.default_rng(25)
        records = [InnovationRecord([rng.normal(0.0, math.sqrt(2.0))], [[2.0]]) for _ in range(10000)]
        summary = kalman.innovation_stats(records)
        self.assertTrue(0.9 <= summary.mean_nis() <= 1.1)
        self.assertAlmostEqual(2.0, summary.sample_cov()[0, 0], delta=0.1)

    def test_needs_two(self):
        with self.assertRaises(DomainError):
            kalman.innovation_stats([InnovationRecord([0.0], [[1.0]])])

    def test_nis_interval(self):
        summary = kalman.innovation_stats([InnovationRecord([1.0], [[1.0]]), InnovationRecord([-1.0], [[1.0]])])
        low, high = summary.nis_interval(0.05)
        self.assertAlmostEqual(chi2.ppf(0.025, 2) / 2, low, 12)
        self.assertAlmostEqual(chi2.ppf(0.975, 2) / 2, high, 12)
        self.assertTrue(summary.is_consistent(0.05))
        with self.assertRaises(DomainError):
            summary.nis_interval(1.5)


class InitializationTest(unittest.TestCase):

    def test_angle_measurement(self):
        est = kalman.initialize_from_measurement(MeasurementModel([[1.0, 0.0]], [[0.0025]]), [0.17], 2)
        self.assertEqual(EstimateKind.POSTERIOR, est.kind())
        self.assertEqual(0, est.k())
        np.testing.assert_array_equal(np.array([0.17, 0.0]), est.mean())
        np.testing.assert_allclose(np.diag([0.0025, 0.025]), est.cov())

    def test_position_measurement(self):
        meas = MeasurementModel([[1, 0, 0, 0], [0, 0, 1, 0]], np.eye(2))
        est = kalman.initialize_from_measurement(meas, [3.0, -1.0], 4)
        np.testing.assert_array_equal(np.array([3.0, 0.0, -1.0, 0.0]), est.mean())
        np.testing.assert_allclose(np.diag([1.0, 10.0, 1.0, 10.0]), est.cov())

    def test_scaled_row(self):
        est = kalman.initialize_from_measurement(MeasurementModel([[2.0, 0.0]], [[4.0]]), [1.0], 2, 5.0)
        np.testing.assert_allclose(np.array([0.5, 0.0]), est.mean())
        np.testing.assert_allclose(np.diag([1.0, 5.0]), est.cov())

    def test_nothing_observed(self):
        with self.assertRaises(DomainError):
            kalman.initialize_from_measurement(MeasurementModel([[1.0, 1.0]], [[1.0]]), [1.0], 2)
