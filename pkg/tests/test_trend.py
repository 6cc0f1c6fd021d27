import math
import unittest

from cvqed.common.trend import TrendEstimator


class TestTrendEstimator(unittest.TestCase):

    def test_line_fit(self):
        estimator = TrendEstimator()
        for x in range(5):
            estimator.add(x, 2.0 * x + 1.0)
        slope, intercept = estimator.fit()
        self.assertAlmostEqual(slope, 2.0)
        self.assertAlmostEqual(intercept, 1.0)

    def test_log_log_slope(self):
        estimator = TrendEstimator(log_x=True, log_y=True)
        for dt in (0.1, 0.05, 0.025):
            estimator.add(dt, 3.0 * dt**2)
        self.assertAlmostEqual(estimator.slope, 2.0)
        self.assertAlmostEqual(estimator.fit()[1], math.log(3.0))

    def test_needs_two_samples(self):
        estimator = TrendEstimator()
        estimator.add(1.0, 1.0)
        with self.assertRaises(ValueError):
            estimator.fit()

    def test_window(self):
        estimator = TrendEstimator(window_size=3)
        for x, y in ((0, 100), (1, 1), (2, 2), (3, 3)):
            estimator.add(x, y)
        self.assertEqual(len(estimator), 3)
        self.assertEqual(estimator.samples[0], (1.0, 1.0))
        self.assertAlmostEqual(estimator.slope, 1.0)

    def test_monotonic(self):
        estimator = TrendEstimator()
        for x, y in ((0, 3), (1, 2), (2, 2), (3, 1)):
            estimator.add(x, y)
        self.assertTrue(estimator.is_monotonic(increasing=False))
        self.assertFalse(estimator.is_monotonic())


if __name__ == "__main__":
    unittest.main()
