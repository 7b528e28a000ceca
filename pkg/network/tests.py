import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from ozone_network.exceptions import ConfigError, SeriesFormatError
from alarms.thresholds import Thresholds
from network.config import config_from_dict, config_to_dict, load_network_config
from network.series_io import read_corrected, read_series, write_corrected, write_series
from simulator.scenario import config_hash
from timeseries.series import TimeSeries, parse_timestamp

SITES = [
    {'site_id': 'R1', 'role': 'reference', 'latitude': 34.0, 'longitude': -117.5},
    {'site_id': 'R2', 'role': 'reference', 'latitude': 34.1, 'longitude': -117.4},
    {'site_id': 'LC1', 'role': 'low-cost', 'latitude': 34.05, 'longitude': -117.45},
]


class TempDirMixin:
    def setUp(self):
        super().setUp()
        tmp = tempfile.TemporaryDirectory()
        self.addCleanup(tmp.cleanup)
        self.dir = Path(tmp.name)

    def write(self, name, text):
        path = self.dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        return path

    def write_config(self, name='network.json', **data):
        data.setdefault('sites', SITES)
        return self.write(name, json.dumps(data))


@override_settings(OZONE_OUTPUT_DIR='')
class NetworkConfigTests(TempDirMixin, SimpleTestCase):
    def test_sample_config(self):
        config = load_network_config(settings.BASE_DIR / 'sample_configs' / 'network.json')
        self.assertEqual(len(config.sites), 7)
        self.assertEqual(config.overrides, {'LC04': 'RIVR'})
        self.assertEqual(config.thresholds, Thresholds())
        self.assertEqual(config.series_paths, (settings.BASE_DIR / 'sample_configs' / 'sim' / 'observed.csv',))

    def test_relative_paths_and_defaults(self):
        config = load_network_config(self.write_config(series=['data/a.csv'], output_dir='results'))
        self.assertEqual(config.series_paths, (self.dir / 'data' / 'a.csv',))
        self.assertEqual(config.output_dir, self.dir / 'results')
        self.assertEqual(config.strategy, 'nearest')
        self.assertFalse(config.exclude_self_from_median)

    def test_round_trip(self):
        data = {'sites': SITES, 'series': ['a.csv'], 'output_dir': 'out',
                'proxy': {'strategy': 'network_median', 'overrides': {'LC1': 'R2'}},
                'thresholds': {'t_d': 48}}
        config = config_from_dict(data, self.dir)
        self.assertEqual(config_from_dict(config_to_dict(config, self.dir), self.dir), config)

    def test_threshold_overrides(self):
        config = config_from_dict({'sites': SITES}).with_thresholds(t_f=24, t_d=None)
        self.assertEqual((config.thresholds.t_f, config.thresholds.t_d), (24, 72))

    def test_output_dir_setting_wins(self):
        with override_settings(OZONE_OUTPUT_DIR=str(self.dir / 'elsewhere')):
            config = load_network_config(self.write_config(output_dir='results'))
        self.assertEqual(config.output_dir, self.dir / 'elsewhere')

    def test_unreadable_and_malformed(self):
        with self.assertRaisesMessage(ConfigError, 'cannot read config'):
            load_network_config(self.dir / 'missing.json')
        with self.assertRaisesMessage(ConfigError, 'line 2'):
            load_network_config(self.write('bad.json', '{\n  "sites": [,]\n}'))

    def test_invalid_contents(self):
        cases = [
            ({'sites': SITES, 'colour': 'red'}, 'unknown config keys'),
            ({'sites': []}, 'no sites'),
            ({'sites': SITES + [SITES[0]]}, 'duplicate site ids: R1'),
            ({'sites': SITES, 'proxy': {'overrides': {'LC1': 'R9'}}}, 'unknown proxy site'),
            ({'sites': SITES, 'proxy': {'overrides': {'LC9': 'R1'}}}, 'unknown site'),
            ({'sites': SITES, 'proxy': {'overrides': {'LC1': 'LC1'}}}, 'its own proxy'),
            ({'sites': SITES, 'proxy': {'strategy': 'random'}}, 'strategy'),
            ({'sites': SITES, 'thresholds': {'t_f': -1}}, 't_f'),
            ({'sites': [dict(SITES[0], latitude=120)]}, 'latitude'),
        ]
        for data, message in cases:
            with self.subTest(message=message):
                with self.assertRaisesMessage(ConfigError, message):
                    config_from_dict(data, self.dir)


class SeriesFileTests(TempDirMixin, SimpleTestCase):
    header = 'timestamp,site_id,value_ppb\n'

    def read_error(self, *texts):
        paths = [self.write(f'f{i}.csv', self.header + text) for i, text in enumerate(texts)]
        with self.assertRaises(SeriesFormatError) as ctx:
            read_series(paths)
        return ctx.exception

    def test_reads_and_averages_sub_hourly(self):
        path = self.write('a.csv', self.header + (
            '2024-01-01T01:00:00Z,S,7\n'
            '2024-01-01T00:30:00Z,S,30\n'
            '2024-01-01T00:00:00Z,S,10\n'
            '2024-01-01T00:00:00Z,T,40.5\n'
        ))
        series = read_series([path])
        h = parse_timestamp('2024-01-01T00:00:00Z')
        self.assertEqual(sorted(series), ['S', 'T'])
        self.assertEqual(series['S'].hours.tolist(), [h, h + 1])
        self.assertEqual(series['S'].values.tolist(), [20.0, 7.0])
        self.assertEqual(series['T'].values.tolist(), [40.5])

    def test_duplicate_in_one_file_names_both_lines(self):
        err = self.read_error('2024-01-01T00:00:00Z,S,1\n2024-01-01T01:00:00Z,S,1\n2024-01-01T00:00:00Z,S,2\n')
        self.assertEqual((err.line, err.other_line), (2, 4))
        self.assertIn('duplicate reading for S', str(err))

    def test_duplicate_across_files(self):
        err = self.read_error('2024-01-01T00:00:00Z,S,1\n', '2024-01-01T00:00:00Z,S,2\n')
        self.assertIn('f1.csv line 2', str(err))

    def test_non_utc_timestamp(self):
        err = self.read_error('2024-01-01T00:00:00Z,S,1\n2024-01-01T01:00:00+02:00,S,1\n')
        self.assertEqual((err.line, err.column), (3, 'timestamp'))
        self.assertIn('not UTC', str(err))

    def test_malformed_and_impossible_dates(self):
        self.assertIn('malformed timestamp', str(self.read_error('yesterday,S,1\n')))
        self.assertIn('invalid date', str(self.read_error('2024-02-30T00:00:00Z,S,1\n')))

    def test_bad_values(self):
        err = self.read_error('2024-01-01T00:00:00Z,S,1\n2024-01-01T01:00:00Z,S,high\n')
        self.assertEqual((err.line, err.column), (3, 'value_ppb'))
        err = self.read_error('2024-01-01T00:00:00Z,S,600\n')
        self.assertIn('outside', str(err))
        err = self.read_error('2024-01-01T00:00:00Z,,1\n')
        self.assertEqual(err.column, 'site_id')

    def test_bad_header(self):
        path = self.write('h.csv', 'time,site,value\n2024-01-01T00:00:00Z,S,1\n')
        with self.assertRaises(SeriesFormatError) as ctx:
            read_series([path])
        self.assertEqual(ctx.exception.line, 1)

    def test_ragged_row_reports_line(self):
        err = self.read_error('2024-01-01T00:00:00Z,R1,1\n2024-01-01T01:00:00Z,R1,2,9\n')
        self.assertEqual(err.line, 3)
        self.assertIn('f0.csv', str(err))

    def test_undecodable_and_unreadable_files(self):
        path = self.dir / 'latin.csv'
        path.write_bytes(self.header.encode() + b'2024-01-01T00:00:00Z,R\xff1,1\n')
        with self.assertRaisesMessage(SeriesFormatError, 'not valid UTF-8'):
            read_series([path])
        folder = self.dir / 'folder.csv'
        folder.mkdir()
        with self.assertRaisesMessage(SeriesFormatError, str(folder)):
            read_series([folder])

    def test_write_series_is_sorted_and_fixed_precision(self):
        h = parse_timestamp('2024-01-01T00:00:00Z')
        path = self.dir / 'out' / 'series.csv'
        write_series(path, [TimeSeries('B', [h + 1, h + 2], [2.0, 1 / 3]), TimeSeries('A', [h], [5.0])])
        self.assertEqual(path.read_text(), self.header + (
            '2024-01-01T00:00:00Z,A,5.000000\n'
            '2024-01-01T01:00:00Z,B,2.000000\n'
            '2024-01-01T02:00:00Z,B,0.333333\n'
        ))
        self.assertEqual(read_series([path])['B'].values.tolist(), [2.0, 0.333333])

    def test_corrected_file(self):
        h = parse_timestamp('2024-01-01T00:00:00Z')
        path = self.dir / 'corrected' / 'S.csv'
        write_corrected(path, [h, h + 1], [10.0, 11.0], [10.0, 22.5], [False, True])
        frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns), ['timestamp', 'raw', 'output', 'corrected_flag'])
        self.assertEqual(frame['corrected_flag'].tolist(), [0, 1])
        self.assertEqual(read_corrected(path, 'S').values.tolist(), [10.0, 22.5])


@override_settings(OZONE_OUTPUT_DIR='')
class CommandTests(TempDirMixin, SimpleTestCase):
    def call(self, name, *args, **options):
        out = StringIO()
        call_command(name, *[str(a) for a in args], stdout=out, stderr=StringIO(), **options)
        return out.getvalue()

    def simulate(self, target):
        scenario = settings.BASE_DIR / 'sample_configs' / 'scenario.json'
        self.call('simulate', scenario, output_dir=str(target))
        return target / 'network.json'

    def assertExitCode(self, code, name, *args, **options):
        with self.assertRaises(CommandError) as ctx:
            self.call(name, *args, **options)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception

    def test_simulate_writes_inputs_and_manifest(self):
        network = self.simulate(self.dir / 'sim')
        for name in ('observed.csv', 'truth.csv', 'manifest.json', 'network.json'):
            self.assertTrue((self.dir / 'sim' / name).exists(), name)
        manifest = json.loads((self.dir / 'sim' / 'manifest.json').read_text())
        with open(settings.BASE_DIR / 'sample_configs' / 'scenario.json') as fh:
            self.assertEqual(manifest['config_hash'], config_hash(json.load(fh)))
        self.assertEqual(manifest['seed'], 2024)
        config = load_network_config(network)
        self.assertEqual(config.output_dir, self.dir / 'sim' / 'out')
        self.assertEqual(sorted(read_series(config.series_paths)), sorted(config.site_ids))

    def test_simulate_bad_scenario(self):
        self.assertExitCode(1, 'simulate', self.dir / 'missing.json', output_dir=str(self.dir))
        bad = self.write('scenario.json', json.dumps({'seed': 1, 'sites': []}))
        self.assertExitCode(1, 'simulate', bad, output_dir=str(self.dir))

    def test_validate(self):
        network = self.simulate(self.dir / 'sim')
        out = self.call('validate', network)
        self.assertIn('7 sites configured, 7 sites with data', out)
        self.assertIn('LC03', out)
        self.assertIn('Inputs are valid', out)

    def test_validate_reports_input_errors(self):
        self.assertExitCode(1, 'validate', self.dir / 'missing.json')
        bad = self.write('bad.csv', 'timestamp,site_id,value_ppb\n2024-01-01T00:00:00Z,R1,1\n2024-01-01 01:00,R1,2\n')
        err = self.assertExitCode(1, 'validate', self.write_config(), series=[str(bad)])
        self.assertIn('line 3', str(err))
        self.assertExitCode(1, 'validate', self.write_config())
        latin = self.dir / 'latin.csv'
        latin.write_bytes(b'timestamp,site_id,value_ppb\n2024-01-01T00:00:00Z,R\xff1,1\n')
        err = self.assertExitCode(1, 'validate', self.write_config(), series=[str(latin)])
        self.assertIn('latin.csv', str(err))

    def test_validate_warns_about_unmatched_sites(self):
        data = self.write('a.csv', 'timestamp,site_id,value_ppb\n2024-01-01T00:00:00Z,R1,1\n'
                                   '2024-01-01T00:00:00Z,X9,1\n')
        out = self.call('validate', self.write_config(series=['a.csv']))
        self.assertIn('X9: series present but site not in config', out)
        self.assertIn('LC1: configured but no series data', out)
        self.assertTrue(data.exists())

    def test_run_end_to_end(self):
        network = self.simulate(self.dir / 'sim')
        target = self.dir / 'run'
        out = self.call('run', network, output_dir=str(target), charts=True)
        self.assertIn('Processed 4 of 4 sites', out)
        summary = pd.read_csv(target / 'summary.csv', keep_default_na=False)
        self.assertEqual(summary['site'].tolist(), ['LC01', 'LC02', 'LC03', 'LC04'])
        self.assertEqual(summary.set_index('site').loc['LC04', 'proxy'], 'SNBO')
        self.assertTrue((summary['status'] == 'ok').all())
        self.assertGreater(summary.set_index('site').loc['LC02', 'correction_pct'], 0.0)
        for site_id in summary['site']:
            self.assertTrue((target / 'corrected' / f'{site_id}.csv').exists())
            self.assertTrue((target / 'charts' / f'{site_id}.csv').exists())
            self.assertTrue((target / 'charts' / f'{site_id}.svg').exists())
        chart = pd.read_csv(target / 'charts' / 'LC01.csv')
        corrected = pd.read_csv(target / 'corrected' / 'LC01.csv')
        self.assertEqual(len(chart), len(corrected))
        self.assertTrue(set(chart['alarm_a1'].unique()) <= {0, 1})

    def test_run_honours_proxy_override(self):
        network = self.simulate(self.dir / 'sim')
        data = json.loads(network.read_text())
        data['proxy']['overrides'] = {'LC04': 'RIVR'}
        network.write_text(json.dumps(data))
        target = self.dir / 'run'
        self.call('run', network, output_dir=str(target))
        summary = pd.read_csv(target / 'summary.csv', keep_default_na=False).set_index('site')
        self.assertEqual(summary.loc['LC04', 'proxy'], 'RIVR')
        self.assertEqual(summary.loc['LC04', 'status'], 'ok')

    def test_run_is_deterministic(self):
        outputs = []
        for name in ('a', 'b'):
            network = self.simulate(self.dir / name)
            self.call('run', network, charts=True)
            root = self.dir / name
            outputs.append({p.relative_to(root): p.read_bytes() for p in sorted(root.rglob('*')) if p.is_file()})
        self.assertEqual(sorted(outputs[0]), sorted(outputs[1]))
        self.assertIn(Path('out') / 'summary.csv', outputs[0])
        for path, content in outputs[0].items():
            self.assertEqual(content, outputs[1][path], str(path))

    def test_workers_do_not_change_results(self):
        network = self.simulate(self.dir / 'sim')
        self.call('run', network, output_dir=str(self.dir / 'serial'), workers=1)
        self.call('run', network, output_dir=str(self.dir / 'threads'), workers=4)
        for name in ('summary.csv', 'corrected/LC02.csv', 'charts/LC03.csv'):
            self.assertEqual((self.dir / 'serial' / name).read_bytes(),
                             (self.dir / 'threads' / name).read_bytes(), name)

    def test_run_threshold_flags(self):
        network = self.simulate(self.dir / 'sim')
        self.call('run', network, output_dir=str(self.dir / 'strict'), tf_hours=24)
        self.call('run', network, output_dir=str(self.dir / 'default'))
        strict = pd.read_csv(self.dir / 'strict' / 'summary.csv').set_index('site')
        default = pd.read_csv(self.dir / 'default' / 'summary.csv').set_index('site')
        self.assertGreaterEqual(strict.loc['LC02', 'correction_pct'], default.loc['LC02', 'correction_pct'])

    def test_run_fails_when_no_site_can_be_processed(self):
        self.write('refs.csv', 'timestamp,site_id,value_ppb\n2024-01-01T00:00:00Z,R1,30\n'
                               '2024-01-01T00:00:00Z,R2,31\n')
        err = self.assertExitCode(2, 'run', self.write_config(series=['refs.csv']),
                                  output_dir=str(self.dir / 'out'))
        self.assertIn('no site could be processed', str(err))
        summary = pd.read_csv(self.dir / 'out' / 'summary.csv')
        self.assertTrue(summary['status'].str.startswith('failed').all())

    def test_proxy_eval(self):
        network = self.simulate(self.dir / 'sim')
        target = self.dir / 'eval'
        out = self.call('proxy_eval', network, output_dir=str(target))
        scores = pd.read_csv(target / 'proxy_scores.csv')
        self.assertEqual(len(scores), 9)
        self.assertEqual(sorted(scores['strategy'].unique()), ['nearest', 'network_median', 'similar_aadt'])
        self.assertTrue((target / 'proxy_scores.svg').exists())
        self.assertIn('mean MAB nearest', out)

    def test_proxy_eval_drops_inapplicable_strategies(self):
        network = self.simulate(self.dir / 'sim')
        data = json.loads(network.read_text())
        for site in data['sites']:
            if site['site_id'] == 'RIVR':
                site.pop('aadt_5km', None)
        network.write_text(json.dumps(data))
        target = self.dir / 'eval'
        out = self.call('proxy_eval', network, output_dir=str(target))
        scores = pd.read_csv(target / 'proxy_scores.csv')
        self.assertEqual(len(scores), 8)
        self.assertFalse(((scores['site'] == 'RIVR') & (scores['strategy'] == 'similar_aadt')).any())
        self.assertFalse(scores['mab'].isna().any())
        self.assertIn('RIVR/similar_aadt', out)

    def test_proxy_eval_needs_two_references(self):
        sites = [SITES[0], SITES[2]]
        self.write('a.csv', 'timestamp,site_id,value_ppb\n2024-01-01T00:00:00Z,R1,30\n')
        self.assertExitCode(1, 'proxy_eval', self.write_config(sites=sites, series=['a.csv']))

    def test_map(self):
        network = self.simulate(self.dir / 'sim')
        target = self.dir / 'map'
        self.call('run', network, output_dir=str(target))
        out = self.call('map', network, output_dir=str(target), hour='2024-02-15T12:00:00Z',
                        bbox='33.9,34.2,-117.6,-117.2', cell=0.05, compare=True)
        self.assertIn('7 sites reporting', out)
        maps = target / 'maps'
        self.assertTrue((maps / '20240215T120000Z.svg').exists())
        grid = pd.read_csv(maps / '20240215T120000Z_full_network.csv')
        self.assertEqual(list(grid.columns), ['lat', 'lon', 'value'])
        self.assertEqual(len(grid), 6 * 8)
        self.assertTrue((maps / '20240215T120000Z_reference_only.csv').exists())

    def test_map_without_previous_run(self):
        network = self.simulate(self.dir / 'sim')
        target = self.dir / 'fresh'
        self.call('map', network, output_dir=str(target), hour='2024-01-10T06:00:00Z',
                  bbox='33.9,34.2,-117.6,-117.2', cell=0.1)
        grid = pd.read_csv(target / 'maps' / '20240110T060000Z_full_network.csv')
        self.assertTrue(np.isfinite(grid['value']).all())

    def test_map_input_errors(self):
        network = self.simulate(self.dir / 'sim')
        common = {'bbox': '33.9,34.2,-117.6,-117.2', 'cell': 0.05}
        self.assertExitCode(1, 'map', network, hour='2030-01-01T00:00:00Z', **common)
        self.assertExitCode(1, 'map', network, hour='2024-01-10T06:30:00Z', **common)
        self.assertExitCode(1, 'map', network, hour='2024-01-10T06:00:00Z', bbox='34,33,0,1', cell=0.05)
        self.assertExitCode(1, 'map', network, hour='2024-01-10T06:00:00Z', bbox=common['bbox'], cell=0)
