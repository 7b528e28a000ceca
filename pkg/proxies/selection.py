"""
Proxy selection strategies.

  nearest         closest reference site by great-circle distance
  similar_aadt    reference with the nearest traffic count within 5 km
  network_median  hourly median across the whole network
  explicit        proxy named in the configuration

Ties are broken by the lexicographically smallest site_id.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from ozone_network.exceptions import InsufficientData, ProxySelectionError
from proxies.sites import SiteRecord, distance_km
from timeseries.series import TimeSeries, WindowSlice, window

logger = logging.getLogger(__name__)

NEAREST = 'nearest'
NETWORK_MEDIAN = 'network_median'
SIMILAR_AADT = 'similar_aadt'
EXPLICIT = 'explicit'
STRATEGIES = (NEAREST, NETWORK_MEDIAN, SIMILAR_AADT, EXPLICIT)
EVALUATED_STRATEGIES = (NEAREST, NETWORK_MEDIAN, SIMILAR_AADT)

MEDIAN_SITE_ID = 'network-median'
MIN_REPORTERS = 3
# Distances equal to this many km are treated as ties.
DISTANCE_DECIMALS = 9


@dataclass(frozen=True)
class ProxyAssignment:
    test_site_id: str
    strategy: str
    proxy_site_id: Optional[str]
    rationale: str = ''

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f'unknown proxy strategy {self.strategy!r}')
        if self.proxy_site_id is not None and self.proxy_site_id == self.test_site_id:
            raise ValueError(f'{self.test_site_id} cannot be its own proxy')


def _eligible_references(site: SiteRecord, network: Iterable[SiteRecord]) -> List[SiteRecord]:
    return [s for s in network if s.is_reference and s.site_id != site.site_id]


def nearest_reference(site: SiteRecord, network: Sequence[SiteRecord]) -> ProxyAssignment:
    candidates = _eligible_references(site, network)
    if not candidates:
        raise ProxySelectionError(f'{site.site_id}: no reference site available as proxy')
    best = min(candidates, key=lambda ref: (round(distance_km(site, ref), DISTANCE_DECIMALS), ref.site_id))
    return ProxyAssignment(
        test_site_id=site.site_id,
        strategy=NEAREST,
        proxy_site_id=best.site_id,
        rationale=f'closest reference at {distance_km(site, best):.2f} km',
    )


def similar_aadt(site: SiteRecord, network: Sequence[SiteRecord]) -> ProxyAssignment:
    if site.aadt_5km is None:
        raise ProxySelectionError(f'{site.site_id}: no AADT recorded for the test site')
    candidates = [ref for ref in _eligible_references(site, network) if ref.aadt_5km is not None]
    if not candidates:
        raise ProxySelectionError(f'{site.site_id}: no reference site with an AADT value')
    best = min(candidates, key=lambda ref: (abs(site.aadt_5km - ref.aadt_5km), ref.site_id))
    return ProxyAssignment(
        test_site_id=site.site_id,
        strategy=SIMILAR_AADT,
        proxy_site_id=best.site_id,
        rationale=f'AADT {best.aadt_5km:g} vs {site.aadt_5km:g}',
    )


def explicit_proxy(site: SiteRecord, proxy_site_id: str, network: Sequence[SiteRecord]) -> ProxyAssignment:
    known = {s.site_id for s in network}
    if proxy_site_id not in known:
        raise ProxySelectionError(f'{site.site_id}: explicit proxy {proxy_site_id!r} is not a known site')
    return ProxyAssignment(site.site_id, EXPLICIT, proxy_site_id, rationale='configured override')


def median_assignment(site: SiteRecord) -> ProxyAssignment:
    return ProxyAssignment(site.site_id, NETWORK_MEDIAN, None, rationale='median of network')


def select_proxy(site: SiteRecord, network: Sequence[SiteRecord], strategy: str,
                 overrides: Optional[dict] = None) -> ProxyAssignment:
    overrides = overrides or {}
    if site.site_id in overrides:
        return explicit_proxy(site, overrides[site.site_id], network)
    if strategy == NEAREST:
        return nearest_reference(site, network)
    if strategy == SIMILAR_AADT:
        return similar_aadt(site, network)
    if strategy == NETWORK_MEDIAN:
        return median_assignment(site)
    raise ProxySelectionError(f'{site.site_id}: strategy {strategy!r} needs an explicit override')


def network_median_series(series: Sequence[TimeSeries], start: Optional[int] = None,
                          end: Optional[int] = None, exclude: Optional[str] = None,
                          min_reporters: int = MIN_REPORTERS) -> TimeSeries:
    """Hourly median across sites; hours with fewer than ``min_reporters`` values are gaps."""
    members = [s.between(start, end) for s in series if s.site_id != exclude]
    members = [s for s in members if len(s)]
    if not members:
        return TimeSeries.empty(MEDIAN_SITE_ID)
    hours = np.unique(np.concatenate([s.hours for s in members]))
    grid = np.full((len(members), hours.size), np.nan)
    for row, s in enumerate(members):
        grid[row, np.searchsorted(hours, s.hours)] = s.values
    reporters = np.sum(~np.isnan(grid), axis=0)
    keep = reporters >= min_reporters
    if not keep.any():
        return TimeSeries.empty(MEDIAN_SITE_ID)
    medians = np.nanmedian(grid[:, keep], axis=0)
    return TimeSeries(MEDIAN_SITE_ID, hours[keep], medians)


def network_median(series: Sequence[TimeSeries], t: int, t_d: int,
                   exclude: Optional[str] = None) -> WindowSlice:
    """Synthetic proxy window (t - t_d, t] built from the network median."""
    median = network_median_series(series, t - t_d + 1, t, exclude=exclude)
    if not len(median):
        raise InsufficientData(
            f'insufficient data: fewer than {MIN_REPORTERS} sites reporting in ({t - t_d}, {t}]'
        )
    return window(median, t, t_d)
