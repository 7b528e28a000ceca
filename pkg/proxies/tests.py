import numpy as np
from django.test import SimpleTestCase

from ozone_network.exceptions import ConfigError, InsufficientData, ProxySelectionError
from alarms.thresholds import Thresholds
from proxies.evaluation import MIN_OVERLAP_HOURS, evaluate_network, evaluate_proxy, proxy_series
from proxies.forms import ProxySettingsForm, parse_site
from proxies.selection import (
    EVALUATED_STRATEGIES, EXPLICIT, MEDIAN_SITE_ID, NEAREST, NETWORK_MEDIAN, SIMILAR_AADT,
    ProxyAssignment, median_assignment, nearest_reference, network_median, network_median_series,
    select_proxy, similar_aadt,
)
from proxies.sites import LOW_COST, REFERENCE, SiteRecord, haversine_km
from simulator.generators import run_scenario
from simulator.networks import terrain_network
from timeseries.series import TimeSeries

H = 480_000


def site(site_id, lat=0.0, lon=0.0, role=REFERENCE, aadt=None):
    return SiteRecord(site_id, site_id, role, lat, lon, aadt_5km=aadt)


def flat(site_id, value, n=10, start=H):
    return TimeSeries(site_id, np.arange(start, start + n), np.full(n, float(value)))


class DistanceTests(SimpleTestCase):
    def test_one_degree_of_latitude(self):
        self.assertAlmostEqual(float(haversine_km(0, 0, 1, 0)), 111.195, places=2)

    def test_zero_and_symmetric(self):
        self.assertEqual(float(haversine_km(34, -117, 34, -117)), 0.0)
        self.assertEqual(float(haversine_km(34, -117, 35, -118)), float(haversine_km(35, -118, 34, -117)))


class NearestReferenceTests(SimpleTestCase):
    def test_picks_closest_reference(self):
        test = site('LC', role=LOW_COST)
        network = [test, site('FAR', 0, 2), site('NEAR', 0, 1), site('LC2', 0, 0.1, role=LOW_COST)]
        assignment = nearest_reference(test, network)
        self.assertEqual((assignment.strategy, assignment.proxy_site_id), (NEAREST, 'NEAR'))

    def test_ties_go_to_smallest_site_id(self):
        test = site('LC', role=LOW_COST)
        network = [site('WEST', 0, -1), site('EAST', 0, 1)]
        self.assertEqual(nearest_reference(test, network).proxy_site_id, 'EAST')

    def test_permutation_invariant(self):
        rng = np.random.default_rng(4)
        test = site('LC', role=LOW_COST)
        network = [site(f'R{i}', *rng.uniform(-1, 1, 2)) for i in range(12)]
        expected = nearest_reference(test, network).proxy_site_id
        for _ in range(20):
            shuffled = [network[i] for i in rng.permutation(len(network))]
            self.assertEqual(nearest_reference(test, shuffled).proxy_site_id, expected)

    def test_reference_never_chooses_itself(self):
        ref = site('R1')
        self.assertEqual(nearest_reference(ref, [ref, site('R2', 0, 1)]).proxy_site_id, 'R2')

    def test_no_reference(self):
        test = site('LC', role=LOW_COST)
        with self.assertRaises(ProxySelectionError):
            nearest_reference(test, [test, site('LC2', role=LOW_COST)])


class SimilarAadtTests(SimpleTestCase):
    def test_closest_traffic_count(self):
        test = site('LC', role=LOW_COST, aadt=50_000)
        network = [site('A', 0, 0.1, aadt=10_000), site('B', 0, 5, aadt=60_000), site('C', 0, 0.2)]
        self.assertEqual(similar_aadt(test, network).proxy_site_id, 'B')

    def test_missing_aadt(self):
        with self.assertRaises(ProxySelectionError):
            similar_aadt(site('LC', role=LOW_COST), [site('A', aadt=1.0)])
        with self.assertRaises(ProxySelectionError):
            similar_aadt(site('LC', role=LOW_COST, aadt=1.0), [site('A')])


class SelectProxyTests(SimpleTestCase):
    network = [site('LC', role=LOW_COST, aadt=100.0), site('R1', 0, 1, aadt=90.0), site('R2', 0, 2, aadt=100.0)]

    def test_strategies(self):
        test = self.network[0]
        self.assertEqual(select_proxy(test, self.network, NEAREST).proxy_site_id, 'R1')
        self.assertEqual(select_proxy(test, self.network, SIMILAR_AADT).proxy_site_id, 'R2')
        self.assertIsNone(select_proxy(test, self.network, NETWORK_MEDIAN).proxy_site_id)

    def test_override_wins(self):
        assignment = select_proxy(self.network[0], self.network, NEAREST, {'LC': 'R2'})
        self.assertEqual((assignment.strategy, assignment.proxy_site_id), (EXPLICIT, 'R2'))

    def test_unknown_override_and_bare_explicit(self):
        with self.assertRaises(ProxySelectionError):
            select_proxy(self.network[0], self.network, NEAREST, {'LC': 'NOPE'})
        with self.assertRaises(ProxySelectionError):
            select_proxy(self.network[0], self.network, EXPLICIT)

    def test_assignment_validation(self):
        with self.assertRaises(ValueError):
            ProxyAssignment('LC', NEAREST, 'LC')
        with self.assertRaises(ValueError):
            ProxyAssignment('LC', 'closest', 'R1')


class NetworkMedianTests(SimpleTestCase):
    def test_odd_and_even_counts(self):
        odd = network_median_series([flat('A', 10), flat('B', 20), flat('C', 90)])
        self.assertTrue(np.all(odd.values == 20.0))
        even = network_median_series([flat('A', 10), flat('B', 20), flat('C', 30), flat('D', 40)])
        self.assertTrue(np.all(even.values == 25.0))
        self.assertEqual(even.site_id, MEDIAN_SITE_ID)

    def test_bounded_by_reporters(self):
        rng = np.random.default_rng(9)
        members = [TimeSeries(f'S{i}', np.arange(H, H + 50), rng.normal(40, 10, 50)) for i in range(7)]
        median = network_median_series(members)
        stacked = np.vstack([m.values for m in members])
        self.assertTrue(np.all(median.values >= stacked.min(axis=0)))
        self.assertTrue(np.all(median.values <= stacked.max(axis=0)))

    def test_hours_with_too_few_reporters_are_gaps(self):
        members = [flat('A', 10, n=10), flat('B', 20, n=10), flat('C', 30, n=5)]
        self.assertEqual(network_median_series(members).hours.tolist(), list(range(H, H + 5)))

    def test_exclude(self):
        members = [flat('A', 10), flat('B', 20), flat('C', 30), flat('D', 1000)]
        self.assertTrue(np.all(network_median_series(members, exclude='D').values == 20.0))

    def test_window(self):
        members = [flat('A', 10, 100), flat('B', 20, 100), flat('C', 30, 100)]
        w = network_median(members, H + 99, 72)
        self.assertEqual(w.completeness, 1.0)
        with self.assertRaises(InsufficientData):
            network_median(members[:2], H + 99, 72)

    def test_proxy_series_for_median(self):
        series = {s.site_id: s for s in (flat('A', 10), flat('B', 20), flat('C', 30), flat('LC', 500))}
        assignment = median_assignment(site('LC', role=LOW_COST))
        self.assertTrue(np.all(proxy_series(assignment, series, exclude_self_from_median=True).values == 20.0))
        self.assertTrue(np.all(proxy_series(assignment, series, exclude_self_from_median=False).values == 25.0))


def diurnal(site_id, n=MIN_OVERLAP_HOURS, shift=0.0, seed=0):
    rng = np.random.default_rng(seed)
    values = 40 + 15 * np.sin(np.arange(n) * 2 * np.pi / 24) + rng.normal(0, 3, n)
    return TimeSeries(site_id, np.arange(H, H + n), values + shift)


class EvaluateProxyTests(SimpleTestCase):
    def test_identical_proxy(self):
        test = diurnal('R1')
        score = evaluate_proxy(test, test.with_values(test.values), Thresholds(), NEAREST)
        self.assertLess(score.mab, 1e-9)
        self.assertEqual(score.alarm_fraction, {'ks': 0.0, 'a0': 0.0, 'a1': 0.0})
        self.assertAlmostEqual(score.r2, 1.0)

    def test_shifted_proxy_raises_offset_alarm(self):
        test = diurnal('R1')
        proxy = TimeSeries('R2', test.hours, test.values + 15.0)
        score = evaluate_proxy(test, proxy, Thresholds(), NEAREST)
        self.assertGreater(score.alarm_fraction['a0'], 0.5)
        # Correcting towards a biased proxy makes the output worse than the raw data.
        self.assertGreater(score.mab, 5.0)

    def test_short_overlap(self):
        test = diurnal('R1')
        with self.assertRaises(InsufficientData):
            evaluate_proxy(test, test.between(H, H + MIN_OVERLAP_HOURS - 2), Thresholds())


class EvaluateNetworkTests(SimpleTestCase):
    def test_one_row_per_reference_and_strategy(self):
        sites = [site('A', 0, 0, aadt=1.0), site('B', 0, 1), site('C', 1, 0), site('LC', role=LOW_COST)]
        series = {s.site_id: diurnal(s.site_id, seed=i) for i, s in enumerate(sites)}
        scores = evaluate_network(sites, series, Thresholds())
        self.assertEqual(len(scores), 3 * len(EVALUATED_STRATEGIES))
        self.assertEqual([s.site_id for s in scores[:3]], ['A', 'A', 'A'])
        unavailable = [s for s in scores if not s.available]
        # Only A has an AADT value, so no reference can be paired by traffic.
        self.assertEqual({(s.site_id, s.strategy) for s in unavailable},
                         {(k, SIMILAR_AADT) for k in 'ABC'})
        self.assertTrue(all(np.isnan(s.mab) for s in unavailable))

    def test_nearest_ranks_first_on_smooth_terrain(self):
        scenario = terrain_network()
        output = run_scenario(scenario)
        sites = [spec.record for spec in scenario.sites]
        scores = evaluate_network(sites, output.reference, Thresholds())
        mean_mab = {
            strategy: np.mean([s.mab for s in scores if s.strategy == strategy and s.available])
            for strategy in EVALUATED_STRATEGIES
        }
        for strategy in (NETWORK_MEDIAN, SIMILAR_AADT):
            self.assertLessEqual(mean_mab[NEAREST], mean_mab[strategy])


class SiteFormTests(SimpleTestCase):
    def test_parse_site(self):
        record = parse_site({'site_id': 'RIVR', 'role': 'reference', 'latitude': 33.99, 'longitude': -117.42,
                             'aadt_5km': 120000})
        self.assertEqual((record.site_id, record.name, record.aadt_5km), ('RIVR', 'RIVR', 120000.0))
        self.assertTrue(record.is_reference)
        self.assertIsNone(record.land_use)

    def test_invalid_site(self):
        with self.assertRaisesMessage(ConfigError, 'latitude'):
            parse_site({'site_id': 'X', 'role': 'reference', 'latitude': 95, 'longitude': 0})
        with self.assertRaisesMessage(ConfigError, 'role'):
            parse_site({'site_id': 'X', 'role': 'satellite', 'latitude': 0, 'longitude': 0})

    def test_proxy_settings_default(self):
        form = ProxySettingsForm({})
        self.assertTrue(form.is_valid())
        self.assertEqual(form.cleaned_data['strategy'], NEAREST)
        self.assertFalse(form.cleaned_data['exclude_self_from_median'])
