"""
End-to-end processing of a configured network.

Every low-cost site is monitored against its proxy and gets its own
corrected series and control-chart file; the summary table is written once
after all sites finish. A site that cannot be processed (no series, no
usable proxy) is recorded as failed and the others carry on.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
import pandas as pd
from django.conf import settings

from ozone_network.exceptions import InsufficientData, OzoneNetworkError
from alarms.engine import MonitorResult, SiteSummary, monitor
from network.series_io import read_corrected, write_chart, write_corrected, write_table
from proxies.evaluation import proxy_series
from proxies.selection import ProxyAssignment, select_proxy

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    'site', 'proxy', 'hours', 'alarm_ks_pct', 'alarm_a0_pct', 'alarm_a1_pct',
    'correction_pct', 'unverified_pct', 'status',
]


@dataclass
class SiteRun:
    site_id: str
    summary: SiteSummary
    assignment: ProxyAssignment = None
    result: MonitorResult = None

    @property
    def ok(self):
        return self.summary.failure is None

    def as_row(self):
        s = self.summary
        proxy = ''
        if self.assignment is not None:
            proxy = self.assignment.proxy_site_id or self.assignment.strategy
        return {
            'site': self.site_id,
            'proxy': proxy,
            'hours': s.hours,
            'alarm_ks_pct': s.alarm_pct['ks'],
            'alarm_a0_pct': s.alarm_pct['a0'],
            'alarm_a1_pct': s.alarm_pct['a1'],
            'correction_pct': s.correction_pct,
            'unverified_pct': s.unverified_pct,
            'status': 'ok' if self.ok else f'failed: {s.failure}',
        }


def corrected_path(output_dir, site_id):
    return Path(output_dir) / 'corrected' / f'{site_id}.csv'


def chart_path(output_dir, site_id, suffix='csv'):
    return Path(output_dir) / 'charts' / f'{site_id}.{suffix}'


def resolve_proxy(site, config, series):
    assignment = select_proxy(site, config.sites, config.strategy, config.overrides)
    proxy = proxy_series(assignment, series, config.exclude_self_from_median)
    return assignment, proxy


def run_site(site, config, series, output_dir):
    sensor = series.get(site.site_id)
    if sensor is None or not len(sensor):
        logger.warning('%s: no series data', site.site_id)
        return SiteRun(site.site_id, SiteSummary.failed(site.site_id, 'no series data'))

    # Pick the proxy and monitor the whole sensor span
    th = config.thresholds
    assignment = None
    try:
        assignment, proxy = resolve_proxy(site, config, series)
        if not len(proxy.between(sensor.start - th.t_d + 1, sensor.end)):
            raise InsufficientData(f'insufficient data: proxy {proxy.site_id} has no data over the sensor span')
        result = monitor(sensor, proxy, th)
    except OzoneNetworkError as exc:
        logger.warning('%s: not processed: %s', site.site_id, exc)
        return SiteRun(site.site_id, SiteSummary.failed(site.site_id, str(exc)), assignment)

    # Save corrected output and control chart
    write_corrected(corrected_path(output_dir, site.site_id), result.output.hours,
                    sensor.values, result.output.values, result.corrected)
    write_chart(chart_path(output_dir, site.site_id), result.ledger.history)
    return SiteRun(site.site_id, result.summary, assignment, result)


def summary_frame(runs):
    return pd.DataFrame([run.as_row() for run in runs], columns=SUMMARY_COLUMNS)


def run_network(config, series, output_dir=None, max_workers=None):
    """Monitor every low-cost site; results come back in site_id order."""
    output_dir = Path(output_dir or config.output_dir)
    workers = max(1, max_workers or settings.OZONE_MAX_WORKERS)
    sensors = sorted((s for s in config.sites if not s.is_reference), key=lambda s: s.site_id)
    logger.info('running %d sites with %d worker(s) into %s', len(sensors), workers, output_dir)

    if workers == 1:
        runs = [run_site(site, config, series, output_dir) for site in sensors]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(lambda site: run_site(site, config, series, output_dir), sensors))

    write_table(Path(output_dir) / 'summary.csv', summary_frame(runs))
    failed = [run.site_id for run in runs if not run.ok]
    if failed:
        logger.warning('%d site(s) failed: %s', len(failed), ', '.join(failed))
    return runs


def site_values_at(config, series, hour, output_dir):
    """Value reported by each site at ``hour``: reference data, or the corrected output.

    Low-cost output comes from ``corrected/<site>.csv`` when a previous run left
    one; otherwise the site is monitored up to ``hour`` in memory.
    """
    values = {}
    for site in config.sites:
        sensor = series.get(site.site_id)
        if sensor is None or sensor.value_at(hour) is None:
            continue
        if site.is_reference:
            values[site.site_id] = sensor.value_at(hour)
            continue
        path = corrected_path(output_dir, site.site_id)
        if path.exists():
            value = read_corrected(path, site.site_id).value_at(hour)
        else:
            try:
                _, proxy = resolve_proxy(site, config, series)
            except OzoneNetworkError as exc:
                logger.warning('%s: left off the map: %s', site.site_id, exc)
                continue
            value = monitor(sensor, proxy, config.thresholds, end=hour).output.value_at(hour)
        if value is not None:
            values[site.site_id] = value
    if not values:
        raise InsufficientData('no site reports a value at that hour')
    return values
