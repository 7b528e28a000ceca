from datetime import datetime, timedelta, timezone

import numpy as np
from django.test import SimpleTestCase

from timeseries.series import (
    Observation, RawReadings, TimeSeries, align, from_hour, month_index, parse_timestamp,
    resample_hourly, to_hour, window,
)

H = 480_000  # an arbitrary hour stamp (2024-10-03)


def hourly(site_id, hours, values=None):
    hours = np.asarray(hours, dtype=np.int64)
    values = np.arange(hours.size, dtype=float) if values is None else values
    return TimeSeries(site_id, hours, values)


class HourStampTests(SimpleTestCase):
    def test_round_trip_through_datetime(self):
        moment = datetime(2024, 3, 1, 13, tzinfo=timezone.utc)
        self.assertEqual(from_hour(to_hour(moment)), moment)

    def test_rejects_naive_and_unaligned(self):
        with self.assertRaises(ValueError):
            to_hour(datetime(2024, 3, 1, 13))
        with self.assertRaises(ValueError):
            to_hour(datetime(2024, 3, 1, 13, 30, tzinfo=timezone.utc))

    def test_parse_timestamp_is_strict(self):
        self.assertEqual(parse_timestamp('1970-01-02T01:00:00Z'), 25)
        for bad in ('2024-01-01T00:30:00Z', '2024-01-01T00:00:00+00:00', '2024-01-01 00:00:00Z'):
            with self.assertRaises(ValueError):
                parse_timestamp(bad)

    def test_month_index_uses_thirty_day_buckets(self):
        self.assertEqual(month_index(H, H), 1)
        self.assertEqual(month_index(H + 719, H), 1)
        self.assertEqual(month_index(H + 720, H), 2)


class TimeSeriesTests(SimpleTestCase):
    def test_timestamps_must_increase(self):
        with self.assertRaises(ValueError):
            hourly('S', [H, H])
        with self.assertRaises(ValueError):
            hourly('S', [H + 1, H])

    def test_values_must_be_finite(self):
        with self.assertRaises(ValueError):
            TimeSeries('S', [H], [np.nan])

    def test_arrays_are_read_only(self):
        s = hourly('S', [H, H + 1])
        with self.assertRaises(ValueError):
            s.values[0] = 5.0

    def test_from_observations(self):
        start = from_hour(H)
        s = TimeSeries.from_observations('S', [Observation(start, 1.0),
                                               Observation(start + timedelta(hours=2), 3.0)])
        self.assertEqual(s.hours.tolist(), [H, H + 2])
        self.assertEqual(list(s)[1], Observation(start + timedelta(hours=2), 3.0))
        self.assertIsNone(s.value_at(H + 1))

    def test_between_is_closed(self):
        s = hourly('S', range(H, H + 10))
        self.assertEqual(s.between(H + 2, H + 4).hours.tolist(), [H + 2, H + 3, H + 4])


class ResampleTests(SimpleTestCase):
    def test_constant_minutes_average_to_one_hour(self):
        seconds = H * 3600 + 60 * np.arange(60)
        s = resample_hourly(RawReadings('S', seconds, np.full(60, 40.0)))
        self.assertEqual(s.hours.tolist(), [H])
        self.assertEqual(s.values.tolist(), [40.0])

    def test_arithmetic_mean_and_gaps(self):
        base = H * 3600
        seconds = [base, base + 1200, base + 3599, base + 2 * 3600]
        s = resample_hourly(RawReadings('S', seconds, [10.0, 20.0, 30.0, 7.0]))
        self.assertEqual(s.hours.tolist(), [H, H + 2])
        self.assertEqual(s.values.tolist(), [20.0, 7.0])

    def test_empty_input(self):
        self.assertEqual(len(resample_hourly(RawReadings('S', [], []))), 0)

    def test_idempotent_on_hourly_series(self):
        s = hourly('S', [H, H + 1, H + 5], np.array([1.5, 2.5, 3.5]))
        again = resample_hourly(RawReadings('S', s.hours * 3600, s.values))
        np.testing.assert_array_equal(again.hours, s.hours)
        np.testing.assert_array_equal(again.values, s.values)


class WindowTests(SimpleTestCase):
    def test_full_window(self):
        s = hourly('S', range(H - 71, H + 1))
        w = window(s, H, 72)
        self.assertEqual(w.samples.size, 72)
        self.assertEqual(w.completeness, 1.0)
        self.assertEqual((w.start, w.end, w.t_d), (H - 72, H, 72))

    def test_half_window(self):
        s = hourly('S', range(H - 71, H + 1, 2))
        self.assertEqual(window(s, H, 72).completeness, 0.5)

    def test_window_excludes_start_includes_end(self):
        s = hourly('S', range(H - 80, H + 5))
        w = window(s, H, 72)
        self.assertEqual(w.samples[0], s.value_at(H - 71))
        self.assertEqual(w.samples[-1], s.value_at(H))

    def test_series_before_window(self):
        s = hourly('S', range(H - 200, H - 100))
        w = window(s, H, 72)
        self.assertEqual(w.samples.size, 0)
        self.assertEqual(w.completeness, 0.0)
        self.assertFalse(w.is_sufficient(0.0))

    def test_nonpositive_length(self):
        with self.assertRaises(ValueError):
            window(hourly('S', [H]), H, 0)


class AlignTests(SimpleTestCase):
    def test_disjoint(self):
        self.assertEqual(align(hourly('A', [1, 2]), hourly('B', [3, 4])).shape, (0, 2))

    def test_intersection(self):
        a = hourly('A', [1, 2, 3], np.array([10.0, 20.0, 30.0]))
        b = hourly('B', [2, 3, 4], np.array([200.0, 300.0, 400.0]))
        self.assertEqual(align(a, b).tolist(), [[20.0, 200.0], [30.0, 300.0]])

    def test_self_alignment_and_range(self):
        a = hourly('A', range(10))
        pairs = align(a, a)
        np.testing.assert_array_equal(pairs[:, 0], a.values)
        np.testing.assert_array_equal(pairs[:, 1], a.values)
        self.assertEqual(align(a, a, 3, 5).shape, (3, 2))
