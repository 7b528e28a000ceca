import numpy as np
from django.test import SimpleTestCase

from ozone_network.exceptions import DegenerateWindow, InsufficientData
from calibration.moments import RAW, TREND, CalibrationEstimate, apply_correction, mv_estimate
from calibration.trend import (
    EstimateHistory, decompose, fluctuation_timescale, quadratic_trend,
)
from timeseries.series import TimeSeries, window

T0 = 500_000


def slice_of(values, site_id='S', end=T0):
    values = np.asarray(values, dtype=float)
    hours = np.arange(end - values.size + 1, end + 1)
    return window(TimeSeries(site_id, hours, values), end, values.size)


def history_of(a0, a1, start=T0, step=1):
    history = EstimateHistory('S')
    for i, (x0, x1) in enumerate(zip(a0, a1)):
        history.append(CalibrationEstimate(start + i * step, float(x0), float(x1)))
    return history


class MvEstimateTests(SimpleTestCase):
    def test_identity(self):
        y = slice_of(np.linspace(10, 50, 72))
        est = mv_estimate(y, y)
        self.assertAlmostEqual(est.a1_hat, 1.0, places=12)
        self.assertAlmostEqual(est.a0_hat, 0.0, places=10)
        self.assertEqual((est.source, est.timestamp), (RAW, T0))

    def test_direct_moments(self):
        base = np.random.default_rng(1).normal(size=72)
        base = (base - base.mean()) / base.std(ddof=1)
        y = slice_of(10 + base)
        z = slice_of(30 + 2 * base, 'P')
        est = mv_estimate(y, z)
        self.assertAlmostEqual(est.a1_hat, 2.0, places=9)
        self.assertAlmostEqual(est.a0_hat, 10.0, places=9)

    def test_inverts_linear_sensor(self):
        x = 30 + 15 * np.sin(np.arange(72) * 2 * np.pi / 24)
        y = 0.6 * x + 8
        est = mv_estimate(slice_of(y), slice_of(x, 'P'))
        self.assertAlmostEqual(est.a1_hat, 1 / 0.6, places=9)
        self.assertAlmostEqual(est.a0_hat, -8 / 0.6, places=9)
        np.testing.assert_allclose(apply_correction(est, y), x, atol=1e-9)

    def test_affine_recovery(self):
        rng = np.random.default_rng(5)
        x = np.maximum(0, 35 + 15 * np.sin(np.arange(72) * 2 * np.pi / 24) + rng.normal(0, 3, 72))
        y = (x - 10) / 2
        est = mv_estimate(slice_of(y), slice_of(x, 'P'))
        self.assertAlmostEqual(est.a0_hat, 10.0, delta=1e-9)
        self.assertAlmostEqual(est.a1_hat, 2.0, delta=1e-9)
        np.testing.assert_allclose(apply_correction(est, y), x, atol=1e-9, rtol=0)

    def test_corrected_moments_match_proxy(self):
        rng = np.random.default_rng(44)
        for _ in range(100):
            y = rng.gamma(4, 8, size=72) * rng.uniform(0.3, 2) + rng.uniform(-10, 10)
            z = rng.normal(rng.uniform(20, 50), rng.uniform(2, 20), size=72)
            est = mv_estimate(slice_of(y), slice_of(z, 'P'))
            corrected = apply_correction(est, y)
            self.assertAlmostEqual(corrected.mean(), z.mean(), delta=1e-9)
            self.assertAlmostEqual(corrected.var(ddof=1), z.var(ddof=1), delta=1e-9)

    def test_invariances(self):
        rng = np.random.default_rng(8)
        y, z = rng.normal(30, 5, 72), rng.normal(35, 7, 72)
        est = mv_estimate(slice_of(y), slice_of(z, 'P'))
        shifted_y = mv_estimate(slice_of(y + 4), slice_of(z, 'P'))
        shifted_z = mv_estimate(slice_of(y), slice_of(z + 4, 'P'))
        scaled_y = mv_estimate(slice_of(3 * y), slice_of(z, 'P'))
        self.assertAlmostEqual(shifted_y.a1_hat, est.a1_hat, places=9)
        self.assertAlmostEqual(shifted_z.a1_hat, est.a1_hat, places=9)
        self.assertAlmostEqual(shifted_z.a0_hat, est.a0_hat + 4, places=9)
        self.assertAlmostEqual(scaled_y.a1_hat, est.a1_hat / 3, places=9)

    def test_flat_sensor_is_degenerate(self):
        with self.assertRaises(DegenerateWindow):
            mv_estimate(slice_of(np.full(72, 41.3)), slice_of(np.arange(72.0), 'P'))

    def test_incomplete_window(self):
        sparse = window(TimeSeries('S', np.arange(T0 - 71, T0 + 1, 3), np.arange(24.0)), T0, 72)
        with self.assertRaises(InsufficientData):
            mv_estimate(sparse, slice_of(np.arange(72.0), 'P'))


class ApplyCorrectionTests(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(apply_correction(CalibrationEstimate(T0, 0.0, 1.0), 37.0), 37.0)
        self.assertEqual(apply_correction(CalibrationEstimate(T0, 10.0, 2.0), 15.0), 40.0)

    def test_estimate_validation(self):
        with self.assertRaises(ValueError):
            CalibrationEstimate(T0, 0.0, 0.0)
        with self.assertRaises(ValueError):
            CalibrationEstimate(T0, float('nan'), 1.0)


class QuadraticTrendTests(SimpleTestCase):
    def test_constant_estimates(self):
        history = history_of(np.zeros(720), np.ones(720))
        for t in (T0 + 100, T0 + 300, T0 + 719):
            est = quadratic_trend(history, t)
            self.assertEqual(est.source, TREND)
            self.assertAlmostEqual(est.a1_hat, 1.0, places=9)
            self.assertAlmostEqual(est.a0_hat, 0.0, places=9)

    def test_reproduces_linear_drift(self):
        tau = np.arange(500)
        history = history_of(np.zeros(500), 1 + 0.001 * tau)
        for t in (T0 + 120, T0 + 250, T0 + 499):
            self.assertAlmostEqual(quadratic_trend(history, t).a1_hat, 1 + 0.001 * (t - T0), delta=1e-9)

    def test_noisy_linear_drift(self):
        rng = np.random.default_rng(500)
        tau = np.arange(500)
        line = 1 + 0.001 * tau
        history = history_of(rng.normal(0, 0.05, 500), line + rng.normal(0, 0.05, 500))
        self.assertLess(abs(quadratic_trend(history, T0 + 499).a1_hat - line[-1]), 0.02)

    def test_fewer_than_three_falls_back(self):
        history = history_of([1.0, 2.0], [1.1, 1.2])
        est = quadratic_trend(history, T0 + 1)
        self.assertTrue(est.fallback)
        self.assertEqual((est.a0_hat, est.a1_hat), (2.0, 1.2))

    def test_only_estimates_up_to_t(self):
        a1 = np.concatenate([np.ones(100), np.full(100, 5.0)])
        history = history_of(np.zeros(200), a1)
        self.assertAlmostEqual(quadratic_trend(history, T0 + 99).a1_hat, 1.0, places=9)

    def test_running_fit_matches_direct_fit(self):
        rng = np.random.default_rng(2)
        history = EstimateHistory('S')
        for i in range(300):
            history.append(CalibrationEstimate(T0 + i, rng.normal(), 1 + rng.uniform(0, 0.2)))
            if i >= 2:
                running = history.current_trend(T0 + i)
                direct = quadratic_trend(history, T0 + i)
                self.assertAlmostEqual(running.a1_hat, direct.a1_hat, places=9)
                self.assertAlmostEqual(running.a0_hat, direct.a0_hat, places=9)

    def test_refit_cadence(self):
        history = history_of(np.zeros(3), [1.0, 1.0, 1.0], step=24)
        history.current_trend(T0 + 48, refit_hours=24)
        history.append(CalibrationEstimate(T0 + 60, 0.0, 2.0))
        # Within the refit interval the previous fit is reused.
        self.assertAlmostEqual(history.current_trend(T0 + 60, refit_hours=24).a1_hat, 1.0, places=7)
        self.assertNotAlmostEqual(history.current_trend(T0 + 60, refit_hours=1).a1_hat, 1.0, places=3)

    def test_history_rejects_out_of_order(self):
        history = history_of([0.0], [1.0])
        with self.assertRaises(ValueError):
            history.append(CalibrationEstimate(T0, 0.0, 1.0))
        with self.assertRaises(ValueError):
            history.append(CalibrationEstimate(T0 + 5, 0.0, 1.0, source=TREND))


class DecomposeTests(SimpleTestCase):
    def test_constant_raw_has_zero_residuals(self):
        d = decompose(history_of(np.full(50, 2.0), np.full(50, 1.1), step=24))
        np.testing.assert_allclose(d.a1_residual, 0.0, atol=1e-7)
        np.testing.assert_allclose(d.a0_residual, 0.0, atol=1e-7)

    def test_trend_plus_residual_is_raw(self):
        rng = np.random.default_rng(6)
        history = history_of(rng.normal(size=200), 1 + rng.uniform(0, 0.3, 200))
        d = decompose(history)
        np.testing.assert_allclose(d.a1_trend + d.a1_residual, history.a1_values, rtol=0, atol=1e-12)
        np.testing.assert_allclose(d.a0_trend + d.a0_residual, history.a0_values, rtol=0, atol=1e-12)

    def test_matches_expanding_fit(self):
        rng = np.random.default_rng(7)
        history = history_of(rng.normal(size=200), 1 + rng.uniform(0, 0.3, 200))
        d = decompose(history)
        self.assertEqual(d.a1_trend[1], history.a1_values[1])
        for i in (120, 160, 199):
            self.assertAlmostEqual(d.a1_trend[i], quadratic_trend(history, T0 + i).a1_hat, places=8)

    def test_empty_history(self):
        with self.assertRaises(InsufficientData):
            decompose(EstimateHistory('S'))


class FluctuationTimescaleTests(SimpleTestCase):
    def test_ar1_decay(self):
        rng = np.random.default_rng(11)
        phi = np.exp(-1 / 24)  # e-folding at one day
        x = np.zeros(20_000)
        for i in range(1, x.size):
            x[i] = phi * x[i - 1] + rng.normal()
        lag = fluctuation_timescale(x, 24 * 7)
        self.assertIsNotNone(lag)
        self.assertTrue(18 <= lag <= 30)

    def test_constant_and_persistent(self):
        self.assertEqual(fluctuation_timescale(np.zeros(100), 10), 0)
        self.assertIsNone(fluctuation_timescale(np.arange(1000.0), 5))
