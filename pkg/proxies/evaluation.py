"""
Proxy quality evaluation on reference sites.

A reference site's own series is treated as if it were a low-cost sensor and
run through the alarm engine against a candidate proxy. Because the site's
true concentration is known, the alarm time and the error of the
framework-corrected output measure how good the proxy is.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from ozone_network.exceptions import InsufficientData, OzoneNetworkError
from alarms.engine import monitor
from alarms.ledger import TESTS
from alarms.thresholds import Thresholds
from proxies.selection import (
    EVALUATED_STRATEGIES, NETWORK_MEDIAN, ProxyAssignment, network_median_series, select_proxy,
)
from proxies.sites import SiteRecord
from reporting.metrics import pair_metrics
from timeseries.series import TimeSeries, align_indices

logger = logging.getLogger(__name__)

MIN_OVERLAP_HOURS = 30 * 24

SCORE_COLUMNS = ['site', 'strategy', 'proxy', 'alarm_ks', 'alarm_a0', 'alarm_a1', 'mab', 'r2']


@dataclass(frozen=True)
class ProxyScore:
    site_id: str
    strategy: str
    proxy_site_id: Optional[str]
    alarm_fraction: Dict[str, float]
    mab: float
    r2: Optional[float]
    available: bool = True
    note: str = ''

    @classmethod
    def unavailable(cls, site_id: str, strategy: str, note: str) -> 'ProxyScore':
        return cls(site_id, strategy, None, {t: float('nan') for t in TESTS},
                   float('nan'), None, available=False, note=note)


def evaluate_proxy(test: TimeSeries, proxy: TimeSeries, th: Thresholds,
                   strategy: str = '', proxy_site_id: Optional[str] = None) -> ProxyScore:
    """Alarm fractions, MAB and R^2 of the corrected reference series against itself."""
    shared, _, _ = align_indices(test, proxy)
    if shared.size < MIN_OVERLAP_HOURS:
        raise InsufficientData(
            f'insufficient data: {test.site_id} and {proxy.site_id} overlap for '
            f'{shared.size} h, need {MIN_OVERLAP_HOURS} h'
        )
    result = monitor(test, proxy, th)
    rows = result.ledger.history
    hours = len(rows)
    alarm_fraction = {
        'ks': sum(r.alarm_ks for r in rows) / hours,
        'a0': sum(r.alarm_a0 for r in rows) / hours,
        'a1': sum(r.alarm_a1 for r in rows) / hours,
    }
    metrics = pair_metrics(result.output, test)
    return ProxyScore(
        site_id=test.site_id,
        strategy=strategy,
        proxy_site_id=proxy_site_id if proxy_site_id is not None else proxy.site_id,
        alarm_fraction=alarm_fraction,
        mab=metrics.mab,
        r2=metrics.r2,
    )


def proxy_series(assignment: ProxyAssignment, series: Dict[str, TimeSeries],
                 exclude_self_from_median: bool = True) -> TimeSeries:
    if assignment.strategy == NETWORK_MEDIAN:
        exclude = assignment.test_site_id if exclude_self_from_median else None
        return network_median_series(list(series.values()), exclude=exclude)
    try:
        return series[assignment.proxy_site_id]
    except KeyError:
        raise InsufficientData(f'insufficient data: no series for proxy {assignment.proxy_site_id}')


def evaluate_network(sites: Sequence[SiteRecord], series: Dict[str, TimeSeries], th: Thresholds,
                     strategies: Sequence[str] = EVALUATED_STRATEGIES) -> List[ProxyScore]:
    """Every strategy at every reference site, leaving the site itself out of its proxy."""
    scores = []
    references = sorted((s for s in sites if s.is_reference), key=lambda s: s.site_id)
    for site in references:
        test = series.get(site.site_id)
        for strategy in strategies:
            if test is None:
                scores.append(ProxyScore.unavailable(site.site_id, strategy, 'no series'))
                continue
            try:
                assignment = select_proxy(site, sites, strategy)
                proxy = proxy_series(assignment, series, exclude_self_from_median=True)
                scores.append(evaluate_proxy(test, proxy, th, strategy, assignment.proxy_site_id))
            except OzoneNetworkError as exc:
                logger.warning('%s/%s not evaluated: %s', site.site_id, strategy, exc)
                scores.append(ProxyScore.unavailable(site.site_id, strategy, str(exc)))
    return scores
