import numpy as np
from django.test import SimpleTestCase

from ozone_network.exceptions import InsufficientData
from distribution.ks import ecdf, kolmogorov_q, ks_pvalue, ks_statistic, ks_test
from timeseries.series import TimeSeries, window


def brute_force_d(a, b):
    """sup |F_a - F_b| by direct counting at every pooled point, its right limit and midpoints."""
    a, b = list(a), list(b)
    pooled = sorted(set(a) | set(b))
    probes = list(pooled)
    probes += [(x + y) / 2.0 for x, y in zip(pooled, pooled[1:])]
    probes += [pooled[0] - 1.0, pooled[-1] + 1.0]
    best = 0.0
    for x in probes:
        fa = sum(v < x for v in a) / (len(a) + 1)
        fb = sum(v < x for v in b) / (len(b) + 1)
        best = max(best, abs(fa - fb))
    for x in pooled:
        fa = sum(v <= x for v in a) / (len(a) + 1)
        fb = sum(v <= x for v in b) / (len(b) + 1)
        best = max(best, abs(fa - fb))
    return best


class EcdfTests(SimpleTestCase):
    def test_strict_inequality_and_normalization(self):
        f = ecdf([5.0])
        self.assertEqual(f(6.0), 0.5)
        self.assertEqual(f(5.0), 0.0)

    def test_counts_below(self):
        f = ecdf([1.0, 2.0, 3.0])
        self.assertEqual(f(2.5), 0.5)
        self.assertEqual(f(100.0), 0.75)
        self.assertEqual(f(-100.0), 0.0)
        self.assertEqual(f.normalization, 0.25)

    def test_empty_sample(self):
        with self.assertRaises(InsufficientData):
            ecdf([])


class KsStatisticTests(SimpleTestCase):
    def test_identical_samples(self):
        self.assertEqual(ks_statistic([1, 2, 3], [1, 2, 3]), 0.0)
        self.assertEqual(ks_statistic([1, 2], [2, 1]), 0.0)

    def test_separated_samples_use_n_plus_one(self):
        self.assertEqual(ks_statistic([1, 2, 3], [4, 5, 6]), 0.75)
        self.assertNotEqual(ks_statistic([1, 2, 3], [4, 5, 6]), 1.0)

    def test_empty_sample(self):
        with self.assertRaises(InsufficientData):
            ks_statistic([], [1.0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(20240101)
        for _ in range(1000):
            m, n = rng.integers(2, 21, size=2)
            # Rounded values produce ties within and across samples.
            a = np.round(rng.uniform(0, 100, size=m), int(rng.integers(0, 3)))
            b = np.round(rng.uniform(0, 100, size=n), int(rng.integers(0, 3)))
            self.assertEqual(ks_statistic(a, b), brute_force_d(a, b))

    def test_symmetric_and_transform_invariant(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b = rng.normal(size=15), rng.normal(0.5, size=12)
            d = ks_statistic(a, b)
            self.assertEqual(d, ks_statistic(b, a))
            self.assertAlmostEqual(d, ks_statistic(np.exp(a), np.exp(b)), places=12)


class KsPvalueTests(SimpleTestCase):
    def test_zero_statistic(self):
        self.assertEqual(ks_pvalue(0.0, 72, 72), 1.0)

    def test_maximal_separation(self):
        self.assertLess(ks_pvalue(1.0, 72, 72), 1e-12)

    def test_monotone_in_d(self):
        ps = [ks_pvalue(d, 72, 72) for d in np.linspace(0, 1, 101)]
        self.assertTrue(all(x >= y for x, y in zip(ps, ps[1:])))
        self.assertTrue(all(0.0 <= p <= 1.0 for p in ps))

    def test_known_value(self):
        # Q_KS(1.36) is the textbook 5% point.
        self.assertAlmostEqual(kolmogorov_q(1.36), 0.0494, places=3)

    def test_small_statistics_stay_at_one(self):
        self.assertEqual(kolmogorov_q(0.001), 1.0)
        ps = [ks_pvalue(d, 72, 72) for d in (0.0, 0.01, 0.02, 0.03, 0.05)]
        self.assertTrue(all(x >= y for x, y in zip(ps, ps[1:])))
        self.assertEqual(ps[1], 1.0)

    def test_false_alarm_rate_on_identical_distributions(self):
        rng = np.random.default_rng(72)
        draws = 10_000
        alarms = 0
        for _ in range(draws):
            a, b = rng.normal(40, 10, size=72), rng.normal(40, 10, size=72)
            alarms += ks_pvalue(ks_statistic(a, b), 72, 72) < 0.05
        rate = alarms / draws
        self.assertGreaterEqual(rate, 0.03)
        self.assertLessEqual(rate, 0.07)


class KsTestTests(SimpleTestCase):
    def series(self, values, site_id='S', start=1000):
        return TimeSeries(site_id, np.arange(start, start + len(values)), values)

    def test_window_against_itself(self):
        s = self.series(np.sin(np.arange(72) / 4.0) * 10 + 30)
        w = window(s, s.end, 72)
        result = ks_test(w, w)
        self.assertEqual((result.d, result.p_value, result.m, result.n), (0.0, 1.0, 72, 72))

    def test_offset_windows_reject(self):
        rng = np.random.default_rng(9)
        a = self.series(rng.normal(30, 5, 72))
        b = self.series(rng.normal(50, 5, 72), 'T')
        self.assertLess(ks_test(window(a, a.end, 72), window(b, b.end, 72)).p_value, 0.05)

    def test_incomplete_window(self):
        full = self.series(np.ones(72) * 30)
        sparse = TimeSeries('T', np.arange(1000, 1072, 2)[:29], np.ones(29) * 30)
        with self.assertRaises(InsufficientData):
            ks_test(window(full, 1071, 72), window(sparse, 1071, 72))
