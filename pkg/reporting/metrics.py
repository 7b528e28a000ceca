"""Agreement metrics between two series and the co-location buddy check."""

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ozone_network.exceptions import InsufficientData
from timeseries.series import TimeSeries, align, align_indices, month_index

BUDDY_TOLERANCE_PPB = 10.0
BUDDY_PASS_FRACTION = 0.95
BUDDY_MIN_HOURS = 48


@dataclass(frozen=True)
class PairMetrics:
    n_pairs: int
    mab: float
    rmsd: float
    # None when either side has zero variance.
    r2: Optional[float]
    mean_error: float = 0.0


def _metrics(a: np.ndarray, b: np.ndarray) -> PairMetrics:
    diff = b - a
    mab = float(np.mean(np.abs(diff)))
    rmsd = float(math.sqrt(np.mean(diff * diff)))
    r2 = None
    if a.size >= 2 and np.ptp(a) > 0 and np.ptp(b) > 0:
        r = float(np.corrcoef(a, b)[0, 1])
        if math.isfinite(r):
            r2 = min(r * r, 1.0)
    return PairMetrics(n_pairs=int(a.size), mab=mab, rmsd=rmsd, r2=r2, mean_error=float(np.mean(diff)))


def pair_metrics(a: TimeSeries, b: TimeSeries, start: Optional[int] = None,
                 end: Optional[int] = None) -> PairMetrics:
    """MAB, RMSD and squared Pearson correlation over co-timed hours."""
    pairs = align(a, b, start, end)
    if pairs.shape[0] < 2:
        raise InsufficientData(f'insufficient data: {pairs.shape[0]} aligned hours for {a.site_id}/{b.site_id}')
    return _metrics(pairs[:, 0], pairs[:, 1])


@dataclass(frozen=True)
class BuddyResult:
    diff: TimeSeries
    within_fraction: float
    passed: bool


def buddy_check(buddy: TimeSeries, local: TimeSeries, tolerance: float = BUDDY_TOLERANCE_PPB,
                pass_fraction: float = BUDDY_PASS_FRACTION) -> BuddyResult:
    """Passes when at least 95% of co-located hours agree within the tolerance."""
    hours, ib, il = align_indices(buddy, local)
    if hours.size < BUDDY_MIN_HOURS:
        raise InsufficientData(
            f'insufficient data: {hours.size} co-located hours, need {BUDDY_MIN_HOURS}'
        )
    diff = local.values[il] - buddy.values[ib]
    within = float(np.mean(np.abs(diff) <= tolerance))
    return BuddyResult(
        diff=TimeSeries(f'{local.site_id}-{buddy.site_id}', hours, diff),
        within_fraction=within,
        passed=within >= pass_fraction,
    )


def running_mab(a: TimeSeries, b: TimeSeries, window_hours: int = 72) -> TimeSeries:
    """MAB over the trailing (t - window, t] at every co-timed hour."""
    hours, ia, ib = align_indices(a, b)
    abs_diff = np.abs(b.values[ib] - a.values[ia])
    cum = np.concatenate([[0.0], np.cumsum(abs_diff)])
    lo = np.searchsorted(hours, hours - window_hours, side='right')
    hi = np.arange(1, hours.size + 1)
    values = (cum[hi] - cum[lo]) / (hi - lo)
    return TimeSeries(f'{a.site_id}:mab{window_hours}h', hours, values)


def monthly_mab(a: TimeSeries, b: TimeSeries, origin: Optional[int] = None) -> Dict[int, PairMetrics]:
    """Metrics per 30-day deployment month counted from ``origin`` (default: first shared hour)."""
    hours, ia, ib = align_indices(a, b)
    if not hours.size:
        return {}
    origin = int(hours[0]) if origin is None else origin
    months = np.array([month_index(h, origin) for h in hours.tolist()])
    out = {}
    for month in np.unique(months).tolist():
        mask = months == month
        out[month] = _metrics(a.values[ia][mask], b.values[ib][mask])
    return out


def distribution_summary(values) -> Dict[str, float]:
    """Box-plot statistics of a pooled sample."""
    x = np.asarray(values, dtype=np.float64)
    if not x.size:
        raise InsufficientData('insufficient data: empty sample')
    q1, median, q3 = np.percentile(x, [25, 50, 75])
    return {
        'n': int(x.size),
        'min': float(x.min()),
        'q1': float(q1),
        'median': float(median),
        'q3': float(q3),
        'max': float(x.max()),
    }
