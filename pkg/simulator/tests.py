import json

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase

from ozone_network.exceptions import ConfigError, DegenerateWindow
from alarms.engine import monitor
from alarms.thresholds import Thresholds
from calibration.moments import apply_correction, mv_estimate
from proxies.selection import nearest_reference
from reporting.metrics import pair_metrics
from simulator.generators import (
    apply_sensor_model, effective_parameters, generate_related_truth, generate_truth, reflect,
    regional_component, run_scenario,
)
from simulator.networks import drift_network, null_network
from simulator.scenario import (
    FLATLINE, GAIN_RAMP, OFFSET_RAMP, DriftSegment, SensorModel, TruthModel, config_hash, months,
    scenario_from_dict, scenario_to_dict,
)
from timeseries.series import window


def load_sample():
    with open(settings.BASE_DIR / 'sample_configs' / 'scenario.json') as fh:
        return json.load(fh)


def monitor_network(scenario):
    """Monitor every low-cost site against its nearest reference."""
    output = run_scenario(scenario)
    records = [spec.record for spec in scenario.sites]
    results = {}
    for site_id, sensor in sorted(output.sensor.items()):
        proxy_id = nearest_reference(scenario.spec(site_id).record, records).proxy_site_id
        results[site_id] = monitor(sensor, output.reference[proxy_id], Thresholds())
    return output, results


class TruthTests(SimpleTestCase):
    def test_zero_amplitude_is_constant(self):
        model = TruthModel(baseline=30, amplitude=0, noise=0, regional_weight=0)
        truth = generate_truth(model, 100, seed=1)
        self.assertTrue(np.all(truth.values == 30.0))

    def test_daily_range(self):
        model = TruthModel(baseline=30, amplitude=20, noise=0, regional_weight=0)
        day = generate_truth(model, 24, seed=1).values
        self.assertAlmostEqual(day.max() - day.min(), 40.0, places=9)
        self.assertEqual(int(np.argmax(day)), 15)

    def test_never_negative(self):
        truth = generate_truth(TruthModel(baseline=5, amplitude=20), 24 * 30, seed=3)
        self.assertGreaterEqual(truth.values.min(), 0.0)
        self.assertTrue(np.any(truth.values == 0.0))

    def test_regional_component_stays_in_bounds(self):
        walk = regional_component(24 * 365, seed=9, step=2.0, bound=15.0)
        self.assertEqual(walk[0], 0.0)
        self.assertLessEqual(np.abs(walk).max(), 15.0)
        np.testing.assert_allclose(reflect(np.array([0.0, 14.0, 16.0, -17.0, 61.0]), 15.0),
                                   [0.0, 14.0, 14.0, -13.0, 1.0])

    def test_related_truth(self):
        source = generate_truth(TruthModel(), 200, seed=4)
        related = generate_related_truth(source, 12.0, 1.0, 0.0, seed=4)
        np.testing.assert_allclose(related.values, source.values + 12.0)
        self.assertEqual(related.hours.tolist(), source.hours.tolist())


class SensorModelTests(SimpleTestCase):
    truth = generate_truth(TruthModel(), 24 * 20, seed=2)

    def test_identity_sensor(self):
        sensor = apply_sensor_model(self.truth, SensorModel(), seed=2)
        np.testing.assert_array_equal(sensor.values, self.truth.values)

    def test_affine_recovery(self):
        sensor = apply_sensor_model(self.truth, SensorModel(a0=10.0, a1=2.0), seed=2, site_id='S')
        t = self.truth.end
        est = mv_estimate(window(sensor, t, 72), window(self.truth, t, 72))
        self.assertAlmostEqual(est.a0_hat, 10.0, delta=1e-9)
        self.assertAlmostEqual(est.a1_hat, 2.0, delta=1e-9)
        recovered = apply_correction(est, sensor.values)
        np.testing.assert_allclose(recovered, self.truth.values, rtol=0, atol=1e-9)

    def test_flatline_is_degenerate(self):
        model = SensorModel(noise=1.0, drift=(DriftSegment(start=100, mode=FLATLINE),))
        sensor = apply_sensor_model(self.truth, model, seed=2, site_id='S')
        self.assertTrue(np.all(sensor.values[100:] == sensor.values[99]))
        with self.assertRaises(DegenerateWindow):
            mv_estimate(window(sensor, self.truth.end, 72), window(self.truth, self.truth.end, 72))

    def test_gain_ramp_targets_response_gain(self):
        ramp = DriftSegment(start=100, end=200, mode=GAIN_RAMP, target=0.5)
        a0, a1, flat = effective_parameters(SensorModel(drift=(ramp,)), 300)
        self.assertEqual(a1[100], 1.0)
        self.assertAlmostEqual(a1[150], 1 / 0.75)
        self.assertAlmostEqual(a1[200], 2.0)
        self.assertAlmostEqual(a1[299], 2.0)
        self.assertFalse(flat.any())
        self.assertTrue(np.all(a0 == 0.0))

    def test_offset_ramp(self):
        ramp = DriftSegment(start=0, end=10, mode=OFFSET_RAMP, target=5.0)
        a0, _, _ = effective_parameters(SensorModel(drift=(ramp,)), 20)
        self.assertEqual((a0[0], a0[5], a0[10], a0[19]), (0.0, 2.5, 5.0, 5.0))

    def test_invalid_models(self):
        with self.assertRaises(ConfigError):
            SensorModel(a1=0)
        with self.assertRaises(ConfigError):
            DriftSegment(start=10, end=5, mode=GAIN_RAMP, target=0.5)
        with self.assertRaises(ConfigError):
            DriftSegment(start=0, mode='melt')


class ScenarioTests(SimpleTestCase):
    def test_sample_scenario(self):
        data = load_sample()
        scenario = scenario_from_dict(data)
        self.assertEqual(scenario.config_hash, config_hash(data))
        output = run_scenario(scenario)
        self.assertEqual(sorted(output.sensor), ['LC01', 'LC02', 'LC03', 'LC04'])
        self.assertEqual(sorted(output.reference), ['FONT', 'RIVR', 'SNBO'])
        # 48 hours of outage at LC03.
        self.assertEqual(len(output.sensor['LC03']), 2880 - 48)
        self.assertEqual(output.manifest['seed'], 2024)
        self.assertEqual(output.manifest['start'], '2024-01-01T00:00:00Z')
        lc04 = output.truth['LC04'].values - output.truth['SNBO'].values
        self.assertAlmostEqual(float(np.mean(lc04)), 12.0, delta=0.5)

    def test_deterministic(self):
        first = run_scenario(scenario_from_dict(load_sample()))
        second = run_scenario(scenario_from_dict(load_sample()))
        for site_id, series in first.observed.items():
            np.testing.assert_array_equal(series.values, second.observed[site_id].values)
        data = load_sample()
        data['seed'] = 2025
        other = run_scenario(scenario_from_dict(data))
        self.assertFalse(np.array_equal(other.observed['LC01'].values, first.observed['LC01'].values))

    def test_hash_tracks_config(self):
        data = load_sample()
        base = scenario_from_dict(data).config_hash
        self.assertEqual(scenario_from_dict(load_sample()).config_hash, base)
        data['sites'][3]['sensor']['noise'] = 2.0
        self.assertNotEqual(scenario_from_dict(data).config_hash, base)

    def test_to_dict_round_trip(self):
        scenario = scenario_from_dict(load_sample())
        again = scenario_from_dict(scenario_to_dict(scenario))
        self.assertEqual(again, scenario)

    def test_invalid_scenarios(self):
        data = load_sample()
        del data['seed']
        with self.assertRaises(ConfigError):
            scenario_from_dict(data)
        data = load_sample()
        data['sites'][6]['truth']['derived_from'] = 'NOPE'
        with self.assertRaises(ConfigError):
            scenario_from_dict(data)
        data = load_sample()
        data['sites'][0]['truth']['wind'] = 3
        with self.assertRaises(ConfigError):
            scenario_from_dict(data)
        data = load_sample()
        data['sites'][1]['site_id'] = 'RIVR'
        with self.assertRaises(ConfigError):
            scenario_from_dict(data)

    def test_derived_cycle(self):
        data = load_sample()
        data['sites'][0]['truth'] = {'derived_from': 'SNBO'}
        data['sites'][1]['truth'] = {'derived_from': 'RIVR'}
        with self.assertRaises(ConfigError):
            run_scenario(scenario_from_dict(data))


class NetworkScenarioTests(SimpleTestCase):
    def test_healthy_network_passes_through(self):
        output, results = monitor_network(null_network())
        self.assertEqual(len(results), 20)
        for site_id, result in results.items():
            self.assertEqual(result.summary.correction_pct, 0.0, site_id)
            self.assertEqual(result.ledger.latched_count, 0, site_id)
            np.testing.assert_array_equal(result.output.values, output.sensor[site_id].values)

    def test_drift_is_corrected(self):
        th = Thresholds()
        scenario = drift_network()
        output, results = monitor_network(scenario)
        for site_id, result in results.items():
            truth = output.truth[site_id]
            corrected = pair_metrics(result.output, truth).mab
            raw = pair_metrics(output.sensor[site_id], truth).mab
            index = int(site_id[2:]) - 1
            if index in (0, 1, 2, 3, 4):
                self.assertTrue(result.corrected.any(), site_id)
                self.assertLess(corrected, raw, site_id)

                _, a1, _ = effective_parameters(scenario.spec(site_id).sensor, scenario.duration)
                leaves_bounds = int(np.argmax((a1 > th.a1_high) | (a1 < th.a1_low)))
                latched = [row.timestamp for row in result.ledger.history if row.alarm_sum]
                self.assertLessEqual(latched[0] - truth.start, leaves_bounds + th.t_f + 2 * th.t_d, site_id)

                first = int(result.output.hours[np.argmax(result.corrected)])
                after = pair_metrics(result.output, truth, start=first).mab
                before = pair_metrics(output.sensor[site_id], truth, start=first).mab
                self.assertLess(after, before, site_id)
            self.assertLessEqual(corrected, 8.0, site_id)

    def test_long_flatline_latches_gain_alarm(self):
        th = Thresholds()
        start = months(3)
        scenario = drift_network(n_sensors=6, duration=months(5), gain_drift=(), flatlined=(5,),
                                 flatline_start=start)
        output, results = monitor_network(scenario)
        flat = results['LC06']
        origin = output.truth['LC06'].start
        self.assertTrue(np.all(output.sensor['LC06'].values[start:] == output.sensor['LC06'].values[start - 1]))
        alarms = [row.timestamp - origin for row in flat.ledger.history if row.alarm_a1]
        self.assertTrue(alarms)
        self.assertLessEqual(alarms[0], start + th.t_d + th.t_f + 1)
        latched_from = int(np.searchsorted(flat.output.hours, alarms[0] + origin))
        self.assertTrue(flat.corrected[latched_from:].all())
        for site_id in ('LC01', 'LC02', 'LC03', 'LC04', 'LC05'):
            self.assertFalse(results[site_id].corrected.any(), site_id)
