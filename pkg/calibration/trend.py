"""
Long-term trend of the moment-matching estimates.

The trend at hour t is the ordinary least-squares quadratic through every raw
estimate from commencement (time zero) to t, fitted separately for a0_hat and
a1_hat and evaluated at t. The fit is an expanding window, refit as estimates
arrive; running power sums make each refit O(1).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ozone_network.exceptions import InsufficientData
from calibration.moments import RAW, TREND, CalibrationEstimate

logger = logging.getLogger(__name__)

MIN_TREND_POINTS = 3
# Elapsed time is fitted in 30-day units to keep the normal equations well conditioned.
TAU_SCALE_HOURS = 720.0


def _power_sums(tau: np.ndarray, a0: np.ndarray, a1: np.ndarray) -> np.ndarray:
    """Rows: sum tau^k (k=0..4), sum tau^k a0 (k=0..2), sum tau^k a1 (k=0..2)."""
    powers = np.vstack([tau ** k for k in range(5)])
    return np.concatenate([
        powers.sum(axis=1),
        (powers[:3] * a0).sum(axis=1),
        (powers[:3] * a1).sum(axis=1),
    ])


def _solve(sums: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    s = sums[:5]
    normal = np.array([
        [s[0], s[1], s[2]],
        [s[1], s[2], s[3]],
        [s[2], s[3], s[4]],
    ])
    try:
        coeffs = np.linalg.solve(normal, np.column_stack([sums[5:8], sums[8:11]]))
    except np.linalg.LinAlgError:
        return None
    return coeffs[:, 0], coeffs[:, 1]


def _evaluate(coeffs: np.ndarray, tau: float) -> float:
    return float(coeffs[0] + coeffs[1] * tau + coeffs[2] * tau * tau)


@dataclass
class EstimateHistory:
    """Raw estimates of one site, in time order, plus the latest trend fit.

    Single writer: only the site's monitor appends.
    """

    site_id: str
    commencement: Optional[int] = None
    estimates: List[CalibrationEstimate] = field(default_factory=list)
    _sums: np.ndarray = field(default_factory=lambda: np.zeros(11), repr=False)
    _fit: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)
    _fit_hour: Optional[int] = field(default=None, repr=False)
    _fit_count: int = field(default=0, repr=False)

    def __len__(self):
        return len(self.estimates)

    def tau(self, hour) -> float:
        return (hour - self.commencement) / TAU_SCALE_HOURS

    def append(self, est: CalibrationEstimate):
        if est.source != RAW:
            raise ValueError('only raw estimates are recorded in the history')
        if self.estimates and est.timestamp <= self.estimates[-1].timestamp:
            raise ValueError(f'{self.site_id}: estimates must be appended in time order')
        if self.commencement is None:
            self.commencement = est.timestamp
        if est.timestamp < self.commencement:
            raise ValueError(f'{self.site_id}: estimate precedes commencement')
        tau = np.array([self.tau(est.timestamp)])
        self._sums += _power_sums(tau, np.array([est.a0_hat]), np.array([est.a1_hat]))
        self.estimates.append(est)

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([e.timestamp for e in self.estimates], dtype=np.int64)

    @property
    def a0_values(self) -> np.ndarray:
        return np.array([e.a0_hat for e in self.estimates], dtype=np.float64)

    @property
    def a1_values(self) -> np.ndarray:
        return np.array([e.a1_hat for e in self.estimates], dtype=np.float64)

    def current_trend(self, t: int, refit_hours: int = 1) -> CalibrationEstimate:
        """Trend estimate at t, refitting when ``refit_hours`` have passed since the last fit."""
        stale = (
            self._fit is None
            or self._fit_count < MIN_TREND_POINTS
            or t - self._fit_hour >= refit_hours
        )
        if stale:
            self._fit = _solve(self._sums) if len(self) >= MIN_TREND_POINTS else None
            self._fit_hour = t
            self._fit_count = len(self)
        return _trend_estimate(self, t, self._fit)


def _fallback(history: EstimateHistory, t: int) -> CalibrationEstimate:
    usable = [e for e in history.estimates if e.timestamp <= t]
    if not usable:
        raise InsufficientData(f'insufficient data: no calibration estimates for {history.site_id}')
    latest = usable[-1]
    return CalibrationEstimate(t, latest.a0_hat, latest.a1_hat, source=RAW, fallback=True)


def _trend_estimate(history: EstimateHistory, t: int, fit) -> CalibrationEstimate:
    if fit is None:
        return _fallback(history, t)
    tau = history.tau(t)
    a0 = _evaluate(fit[0], tau)
    a1 = _evaluate(fit[1], tau)
    if not (math.isfinite(a0) and math.isfinite(a1) and a1 > 0):
        logger.debug('%s: trend at %s is not a valid calibration, using latest raw', history.site_id, t)
        return _fallback(history, t)
    return CalibrationEstimate(t, a0, a1, source=TREND)


def quadratic_trend(history: EstimateHistory, t: int) -> CalibrationEstimate:
    """Quadratic least-squares trend over raw estimates in [commencement, t], evaluated at t."""
    if not history.estimates:
        raise InsufficientData(f'insufficient data: no calibration estimates for {history.site_id}')
    stamps = history.timestamps
    count = int(np.searchsorted(stamps, t, side='right'))
    if count < MIN_TREND_POINTS:
        return _fallback(history, t)
    if count == len(history):
        sums = history._sums
    else:
        sums = _power_sums(
            history.tau(stamps[:count]),
            history.a0_values[:count],
            history.a1_values[:count],
        )
    return _trend_estimate(history, t, _solve(sums))


@dataclass(frozen=True)
class Decomposition:
    timestamps: np.ndarray
    a0_trend: np.ndarray
    a1_trend: np.ndarray
    a0_residual: np.ndarray
    a1_residual: np.ndarray


def decompose(history: EstimateHistory) -> Decomposition:
    """Split raw estimates into the expanding quadratic trend and residual fluctuations.

    The trend at each estimate uses only estimates up to and including it;
    the first two estimates are their own trend.
    """
    if not history.estimates:
        raise InsufficientData(f'insufficient data: no calibration estimates for {history.site_id}')
    stamps = history.timestamps
    a0 = history.a0_values
    a1 = history.a1_values
    tau = history.tau(stamps)
    powers = np.vstack([tau ** k for k in range(5)])
    cum = np.cumsum(powers, axis=1)
    cum_a0 = np.cumsum(powers[:3] * a0, axis=1)
    cum_a1 = np.cumsum(powers[:3] * a1, axis=1)

    a0_trend = a0.copy()
    a1_trend = a1.copy()
    if stamps.size >= MIN_TREND_POINTS:
        idx = np.arange(MIN_TREND_POINTS - 1, stamps.size)
        normal = np.stack([
            np.stack([cum[0, idx], cum[1, idx], cum[2, idx]], axis=-1),
            np.stack([cum[1, idx], cum[2, idx], cum[3, idx]], axis=-1),
            np.stack([cum[2, idx], cum[3, idx], cum[4, idx]], axis=-1),
        ], axis=1)
        c_a0 = np.linalg.solve(normal, cum_a0[:, idx].T[..., None])[..., 0]
        c_a1 = np.linalg.solve(normal, cum_a1[:, idx].T[..., None])[..., 0]
        t = tau[idx]
        a0_trend[idx] = c_a0[:, 0] + c_a0[:, 1] * t + c_a0[:, 2] * t * t
        a1_trend[idx] = c_a1[:, 0] + c_a1[:, 1] * t + c_a1[:, 2] * t * t
    return Decomposition(
        timestamps=stamps,
        a0_trend=a0_trend,
        a1_trend=a1_trend,
        a0_residual=a0 - a0_trend,
        a1_residual=a1 - a1_trend,
    )


def fluctuation_timescale(residuals, max_lag: int) -> Optional[int]:
    """First lag at which the residual autocorrelation drops below 1/e, or None."""
    x = np.asarray(residuals, dtype=np.float64)
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom == 0.0:
        return 0
    threshold = math.exp(-1.0)
    for lag in range(1, min(max_lag, x.size - 1) + 1):
        r = float(np.dot(x[:-lag], x[lag:])) / denom
        if r < threshold:
            return lag
    return None
