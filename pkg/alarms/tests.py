import numpy as np
from django.test import SimpleTestCase

from ozone_network.exceptions import ConfigError, OutOfOrderUpdate
from alarms.engine import SiteState, SiteSummary, monitor, step
from alarms.forms import ThresholdsForm, parse_thresholds
from alarms.ledger import AlarmLedger, Breaches, decide_correction, evaluate_breaches, update_persistence
from alarms.thresholds import Thresholds
from calibration.moments import CalibrationEstimate
from timeseries.series import TimeSeries

H = 480_000
QUIET = Breaches(ks=False, a1=False, a0=False)
A0_ONLY = Breaches(ks=False, a1=False, a0=True)


def diurnal(n, seed=0, start=H, site_id='P'):
    rng = np.random.default_rng(seed)
    values = 40 + 15 * np.sin(np.arange(n) * 2 * np.pi / 24) + rng.normal(0, 3, n)
    return TimeSeries(site_id, np.arange(start, start + n), values)


class ThresholdsTests(SimpleTestCase):
    def test_defaults(self):
        th = Thresholds()
        self.assertEqual((th.p_ks_min, th.a1_low, th.a1_high, th.a0_low, th.a0_high), (0.05, 0.7, 1.3, -5.0, 5.0))
        self.assertEqual((th.t_d, th.t_f, th.completeness_min), (72, 120, 0.75))
        self.assertEqual(th.correction_alarm_count, 1)

    def test_bounds_must_straddle_identity(self):
        with self.assertRaises(ConfigError):
            Thresholds(a1_low=1.1)
        with self.assertRaises(ConfigError):
            Thresholds(a0_high=-1.0)
        with self.assertRaises(ConfigError):
            Thresholds(t_f=0)

    def test_updated_ignores_blanks(self):
        th = Thresholds().updated(t_d=48, t_f=None)
        self.assertEqual((th.t_d, th.t_f), (48, 120))


class ThresholdsFormTests(SimpleTestCase):
    def test_blank_form_keeps_defaults(self):
        form = ThresholdsForm({})
        self.assertTrue(form.is_valid())
        self.assertEqual(form.to_thresholds(), Thresholds())

    def test_parse_thresholds(self):
        th = parse_thresholds({'t_d': 96, 'a0_low': -8, 'a0_high': 8})
        self.assertEqual((th.t_d, th.a0_low, th.a0_high), (96, -8.0, 8.0))

    def test_round_trip_through_dict(self):
        th = Thresholds(t_d=48, correction_alarm_count=2)
        self.assertEqual(parse_thresholds(th.as_dict()), th)

    def test_rejects_unknown_and_invalid(self):
        with self.assertRaisesMessage(ConfigError, 'unknown keys'):
            parse_thresholds({'window': 72})
        with self.assertRaisesMessage(ConfigError, 't_d'):
            parse_thresholds({'t_d': 0})
        with self.assertRaisesMessage(ConfigError, 'p_ks_min'):
            parse_thresholds({'p_ks_min': 'often'})
        with self.assertRaises(ConfigError):
            parse_thresholds({'a1_low': 1.5})


class EvaluateBreachesTests(SimpleTestCase):
    th = Thresholds()

    def flags(self, p=0.5, a0=0.0, a1=1.0):
        return evaluate_breaches(p, CalibrationEstimate(H, a0, a1), self.th)

    def test_interior_passes(self):
        self.assertEqual(self.flags(), QUIET)

    def test_boundaries_breach(self):
        self.assertTrue(self.flags(p=0.05).ks)
        self.assertTrue(self.flags(a1=0.7).a1)
        self.assertTrue(self.flags(a1=1.3).a1)
        self.assertTrue(self.flags(a0=-5.0).a0)
        self.assertTrue(self.flags(a0=5.0).a0)

    def test_just_inside(self):
        self.assertEqual(self.flags(p=0.0501, a0=4.999, a1=1.299), QUIET)

    def test_rejects_non_finite(self):
        with self.assertRaises(ValueError):
            self.flags(p=float('nan'))


class PersistenceTests(SimpleTestCase):
    def test_latches_only_after_t_f_breach_hours(self):
        rng = np.random.default_rng(120)
        for _ in range(1000):
            t_f = int(rng.integers(1, 40))
            th = Thresholds(t_f=t_f)
            ledger = AlarmLedger('S')
            t = H
            # Some unrelated quiet and frozen hours first.
            for _ in range(int(rng.integers(0, 5))):
                ledger.update_persistence(t, QUIET, th)
                t += 1
            for _ in range(t_f):
                ledger.update_persistence(t, A0_ONLY, th)
                t += 1
                if rng.random() < 0.2:
                    ledger.freeze(t)
                    t += 1
            self.assertFalse(ledger.latched['a0'])
            ledger.update_persistence(t, A0_ONLY, th)
            self.assertTrue(ledger.latched['a0'])
            self.assertFalse(ledger.latched['ks'] or ledger.latched['a1'])

    def test_quiet_hour_resets_clock_and_clears_alarm(self):
        th = Thresholds(t_f=3)
        ledger = AlarmLedger('S')
        for i in range(4):
            update_persistence(ledger, H + i, A0_ONLY, th)
        self.assertTrue(ledger.latched['a0'])
        update_persistence(ledger, H + 4, QUIET, th)
        self.assertFalse(ledger.latched['a0'])
        self.assertEqual(ledger.clocks['a0'].breach_hours, 0)
        for i in range(5, 8):
            update_persistence(ledger, H + i, A0_ONLY, th)
        self.assertFalse(ledger.latched['a0'])

    def test_freeze_keeps_clock(self):
        th = Thresholds(t_f=2)
        ledger = AlarmLedger('S')
        ledger.update_persistence(H, A0_ONLY, th).freeze(H + 1).update_persistence(H + 2, A0_ONLY, th)
        self.assertEqual(ledger.clocks['a0'].breach_hours, 2)
        self.assertEqual(ledger.clocks['a0'].breach_start, H)

    def test_out_of_order(self):
        ledger = AlarmLedger('S')
        ledger.update_persistence(H, QUIET, Thresholds())
        with self.assertRaises(OutOfOrderUpdate):
            ledger.update_persistence(H, QUIET, Thresholds())
        with self.assertRaises(OutOfOrderUpdate):
            ledger.freeze(H - 1)


class DecideCorrectionTests(SimpleTestCase):
    def ledger_with(self, flags, th):
        ledger = AlarmLedger('S')
        for i in range(th.t_f + 1):
            ledger.update_persistence(H + i, flags, th)
        return ledger

    def test_single_alarm_policy(self):
        th = Thresholds(t_f=5)
        self.assertTrue(decide_correction(self.ledger_with(A0_ONLY, th), th))
        self.assertFalse(decide_correction(self.ledger_with(QUIET, th), th))

    def test_two_alarm_policy(self):
        th = Thresholds(t_f=5, correction_alarm_count=2)
        self.assertFalse(decide_correction(self.ledger_with(A0_ONLY, th), th))
        both = Breaches(ks=True, a1=False, a0=True)
        self.assertTrue(decide_correction(self.ledger_with(both, th), th))


class StepTests(SimpleTestCase):
    def test_incomplete_window_is_unverified(self):
        proxy = diurnal(100)
        sensor = diurnal(100, site_id='S').between(H, H + 10)
        out, state = step(SiteState.start('S'), H + 10, sensor, proxy, Thresholds())
        self.assertFalse(out.verified)
        self.assertEqual(out.output_value, out.raw_value)
        self.assertFalse(state.ledger.history[-1].verified)
        self.assertEqual(len(state.history), 0)

    def test_verified_hour_records_estimate(self):
        proxy = diurnal(100)
        sensor = TimeSeries('S', proxy.hours, proxy.values)
        out, state = step(SiteState.start('S'), H + 99, sensor, proxy, Thresholds())
        self.assertTrue(out.verified)
        row = state.ledger.history[-1]
        self.assertEqual(row.p_ks, 1.0)
        self.assertAlmostEqual(row.a1_raw, 1.0, places=12)
        self.assertEqual(len(state.history), 1)


class MonitorTests(SimpleTestCase):
    def test_identical_proxy_never_alarms(self):
        proxy = diurnal(500)
        sensor = TimeSeries('S', proxy.hours, proxy.values)
        result = monitor(sensor, proxy, Thresholds())
        self.assertFalse(result.corrected.any())
        np.testing.assert_array_equal(result.output.values, sensor.values)
        self.assertFalse(any(row.alarm_sum for row in result.ledger.history))
        self.assertEqual(len(result.ledger.history), 500)

    def test_offset_sensor_is_corrected_after_persistence(self):
        th = Thresholds()
        proxy = diurnal(400, seed=3)
        sensor = TimeSeries('S', proxy.hours, proxy.values - 15)
        result = monitor(sensor, proxy, th)
        first_verified = int(np.argmax(result.verified))
        first_corrected = int(np.argmax(result.corrected))
        self.assertTrue(result.corrected.any())
        self.assertEqual(first_corrected - first_verified, th.t_f)
        self.assertTrue(result.corrected[first_corrected:].all())
        np.testing.assert_allclose(result.output.values[result.corrected],
                                   proxy.values[result.corrected], atol=1e-4)
        self.assertTrue(result.ledger.latched['a0'])

    def test_flat_sensor_breaches_a1(self):
        proxy = diurnal(300)
        sensor = TimeSeries('S', proxy.hours, np.full(300, 41.0))
        result = monitor(sensor, proxy, Thresholds())
        self.assertTrue(result.ledger.latched['a1'])
        self.assertTrue(all(row.breach_a1 for row in result.ledger.history if row.verified))
        # No raw estimate ever exists, so there is no trend to correct with.
        self.assertFalse(result.corrected.any())

    def test_independent_null_pairs(self):
        rng = np.random.default_rng(2024)
        hours = np.arange(H, H + 24 * 90)
        breaches = verified = 0
        for pair in range(12):
            proxy = TimeSeries('P', hours, rng.normal(15, 5, hours.size))
            sensor = TimeSeries('S', hours, rng.normal(15, 5, hours.size))
            result = monitor(sensor, proxy, Thresholds())
            rows = [row for row in result.ledger.history if row.verified]
            breaches += sum(row.breach_ks for row in rows)
            verified += len(rows)
            self.assertFalse(any(row.alarm_sum for row in result.ledger.history), pair)
            self.assertFalse(result.corrected.any(), pair)
        # The p-value lattice at 72 samples puts the expected rate near 0.036.
        rate = breaches / verified
        self.assertGreaterEqual(rate, 0.02)
        self.assertLessEqual(rate, 0.07)

    def test_start_and_end(self):
        proxy = diurnal(200)
        sensor = TimeSeries('S', proxy.hours, proxy.values)
        result = monitor(sensor, proxy, Thresholds(), start=H + 100, end=H + 149)
        self.assertEqual(result.output.hours.tolist(), list(range(H + 100, H + 150)))


class SiteSummaryTests(SimpleTestCase):
    def test_percentages(self):
        proxy = diurnal(200)
        sensor = TimeSeries('S', proxy.hours, proxy.values)
        summary = monitor(sensor, proxy, Thresholds()).summary
        self.assertEqual(summary.hours, 200)
        self.assertEqual(summary.alarm_pct, {'ks': 0.0, 'a0': 0.0, 'a1': 0.0})
        # Windows reach 75% completeness at the 54th hour.
        self.assertAlmostEqual(summary.unverified_pct, 100.0 * 53 / 200)

    def test_failed(self):
        summary = SiteSummary.failed('S', 'no series data')
        self.assertEqual(summary.failure, 'no series data')
        self.assertTrue(np.isnan(summary.correction_pct))
