import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, override_settings

from ozone_network.exceptions import InsufficientData
from alarms.engine import monitor
from alarms.thresholds import Thresholds
from proxies.evaluation import ProxyScore
from reporting.charts import control_chart_svg, heatmap_svg, proxy_scores_svg
from reporting.grid import BoundingBox, cell_centres, grid_frame, idw_grid
from reporting.metrics import buddy_check, distribution_summary, monthly_mab, pair_metrics, running_mab
from timeseries.series import TimeSeries

H = 480_000


def series(site_id, values, start=H):
    values = np.asarray(values, dtype=float)
    return TimeSeries(site_id, np.arange(start, start + values.size), values)


class PairMetricsTests(SimpleTestCase):
    def test_example(self):
        m = pair_metrics(series('A', [1, 2, 3, 4]), series('B', [2, 3, 4, 5]))
        self.assertEqual((m.n_pairs, m.mab, m.rmsd, m.mean_error), (4, 1.0, 1.0, 1.0))
        self.assertAlmostEqual(m.r2, 1.0)

    def test_symmetric_mab(self):
        rng = np.random.default_rng(1)
        a, b = series('A', rng.normal(30, 5, 100)), series('B', rng.normal(32, 5, 100))
        self.assertAlmostEqual(pair_metrics(a, b).mab, pair_metrics(b, a).mab, places=12)
        self.assertAlmostEqual(pair_metrics(a, b).r2, pair_metrics(b, a).r2, places=12)

    def test_constant_side_has_no_r2(self):
        self.assertIsNone(pair_metrics(series('A', [5, 5, 5]), series('B', [1, 2, 3])).r2)

    def test_only_shared_hours(self):
        a = series('A', [1, 1, 1, 1])
        b = series('B', [100, 2, 2], start=H + 1)
        m = pair_metrics(a, b, start=H + 2)
        self.assertEqual((m.n_pairs, m.mab), (2, 1.0))

    def test_too_few_pairs(self):
        with self.assertRaises(InsufficientData):
            pair_metrics(series('A', [1]), series('B', [1]))


class BuddyCheckTests(SimpleTestCase):
    def test_identical_passes(self):
        a = series('A', np.linspace(20, 60, 100))
        result = buddy_check(a, a.with_values(a.values))
        self.assertTrue(result.passed)
        self.assertEqual(result.within_fraction, 1.0)
        self.assertTrue(np.all(result.diff.values == 0.0))

    def test_offset_fails(self):
        a = series('A', np.linspace(20, 60, 100))
        self.assertFalse(buddy_check(a, series('L', a.values + 12)).passed)

    def test_pass_fraction_boundary(self):
        a = series('A', np.full(100, 40.0))
        local = a.values.copy()
        local[:4] += 20
        result = buddy_check(a, series('L', local))
        self.assertAlmostEqual(result.within_fraction, 0.96)
        self.assertTrue(result.passed)
        local[4] += 20
        self.assertTrue(buddy_check(a, series('L', local)).passed)
        local[5] += 20
        self.assertFalse(buddy_check(a, series('L', local)).passed)

    def test_short_colocation(self):
        with self.assertRaises(InsufficientData):
            buddy_check(series('A', np.ones(47)), series('L', np.ones(47)))


class RunningMetricsTests(SimpleTestCase):
    def test_running_mab(self):
        a = series('A', np.zeros(10))
        b = series('B', [0, 0, 0, 4, 4, 4, 4, 4, 4, 4])
        mab = running_mab(a, b, window_hours=3)
        self.assertEqual(mab.values.tolist(), [0, 0, 0, 4 / 3, 8 / 3, 4, 4, 4, 4, 4])

    def test_monthly_mab(self):
        a = series('A', np.zeros(1440))
        b = series('B', np.concatenate([np.ones(720), np.full(720, 3.0)]))
        months = monthly_mab(a, b)
        self.assertEqual(sorted(months), [1, 2])
        self.assertEqual((months[1].mab, months[2].mab), (1.0, 3.0))
        self.assertEqual(monthly_mab(a, series('B', [1.0], start=0)), {})

    def test_distribution_summary(self):
        summary = distribution_summary([1, 2, 3, 4, 5])
        self.assertEqual(summary, {'n': 5, 'min': 1.0, 'q1': 2.0, 'median': 3.0, 'q3': 4.0, 'max': 5.0})
        with self.assertRaises(InsufficientData):
            distribution_summary([])


class GridTests(SimpleTestCase):
    unit = BoundingBox(-0.5, 0.5, -0.5, 0.5)

    def test_bbox_parse(self):
        self.assertEqual(BoundingBox.parse('33.5,34.5,-118,-117'), BoundingBox(33.5, 34.5, -118.0, -117.0))
        for bad in ('1,2,3', '2,1,0,1', 'a,b,c,d'):
            with self.assertRaises(ValueError):
                BoundingBox.parse(bad)

    def test_cell_centres(self):
        lats, lons = cell_centres(BoundingBox(0, 1, 0, 2), 0.5)
        self.assertEqual(lats.tolist(), [0.25, 0.75])
        self.assertEqual(lons.tolist(), [0.25, 0.75, 1.25, 1.75])

    def test_single_site_is_constant(self):
        grid = idw_grid([(0.2, 0.1, 42.0)], BoundingBox(0, 1, 0, 1), 0.1)
        self.assertEqual(grid.values.shape, (10, 10))
        self.assertTrue(np.all(grid.values == 42.0))

    def test_equidistant_sites_average(self):
        grid = idw_grid([(0.0, -1.0, 20.0), (0.0, 1.0, 40.0)], self.unit, 1.0)
        self.assertAlmostEqual(float(grid.values[0, 0]), 30.0, places=9)

    def test_exact_hit_takes_site_value(self):
        grid = idw_grid([(0.0, 0.0, 17.0), (0.3, 0.3, 60.0)], self.unit, 1.0)
        self.assertEqual(float(grid.values[0, 0]), 17.0)

    def test_bounded_by_site_values(self):
        rng = np.random.default_rng(12)
        sites = [(lat, lon, val) for lat, lon, val in
                 zip(rng.uniform(-1, 1, 8), rng.uniform(-1, 1, 8), rng.uniform(10, 70, 8))]
        grid = idw_grid(sites, BoundingBox(-1, 1, -1, 1), 0.05, power=3)
        values = [s[2] for s in sites]
        self.assertGreaterEqual(grid.values.min(), min(values))
        self.assertLessEqual(grid.values.max(), max(values))

    def test_no_sites(self):
        with self.assertRaises(InsufficientData):
            idw_grid([], self.unit, 0.1)

    def test_grid_frame_is_latitude_major(self):
        grid = idw_grid([(0.0, 0.0, 5.0)], BoundingBox(0, 1, 0, 2), 1.0)
        frame = grid_frame(grid)
        self.assertEqual(list(frame.columns), ['lat', 'lon', 'value'])
        self.assertEqual(frame[['lat', 'lon']].values.tolist(), [[0.5, 0.5], [0.5, 1.5]])
        self.assertEqual(list(grid.cells()), [(0.5, 0.5, 5.0), (0.5, 1.5, 5.0)])


@override_settings(OZONE_CHART_HASH_SALT='tests')
class ChartTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def test_control_chart_is_deterministic(self):
        rng = np.random.default_rng(5)
        proxy = series('P', 40 + 15 * np.sin(np.arange(300) * 2 * np.pi / 24) + rng.normal(0, 3, 300))
        sensor = series('S', proxy.values - 15)
        th = Thresholds()
        rows = monitor(sensor, proxy, th).ledger.history
        first = control_chart_svg('S', rows, th, self.dir / 'a' / 'S.svg')
        second = control_chart_svg('S', rows, th, self.dir / 'b' / 'S.svg')
        self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertIn(b'<svg', first.read_bytes())

    def test_proxy_scores_skip_unavailable(self):
        scores = [
            ProxyScore('R1', 'nearest', 'R2', {'ks': 0.1, 'a0': 0.0, 'a1': 0.2}, 1.5, 0.9),
            ProxyScore.unavailable('R1', 'similar_aadt', 'no AADT'),
        ]
        path = proxy_scores_svg(scores, self.dir / 'scores.svg')
        text = path.read_text()
        self.assertIn('1.5 ppb', text)
        self.assertNotIn('similar_aadt', text)

    def test_heatmap(self):
        bbox = BoundingBox(0, 1, 0, 1)
        sites = [(0.2, 0.2, 30.0), (0.8, 0.7, 50.0)]
        panels = [('reference only', idw_grid(sites[:1], bbox, 0.1), sites[:1]),
                  ('full network', idw_grid(sites, bbox, 0.1), sites)]
        path = heatmap_svg(panels, self.dir / 'maps' / 'map.svg')
        self.assertTrue(path.exists())
        self.assertIn('full network', path.read_text())
