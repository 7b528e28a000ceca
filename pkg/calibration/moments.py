"""
Mean-variance moment matching of a sensor window against a proxy window.

The sensor result Y is assumed linear in the true concentration X,
X = a0 + a1 * Y, so matching the first two moments of Y to those of the
proxy Z gives the semi-blind estimates

    a1_hat = sqrt(var(Z) / var(Y)),    a0_hat = mean(Z) - a1_hat * mean(Y)

and the corrected value x_hat = a0_hat + a1_hat * y.
"""

import math
from dataclasses import dataclass

import numpy as np

from ozone_network.exceptions import DegenerateWindow, InsufficientData
from timeseries.series import WindowSlice

RAW = 'raw'
TREND = 'trend'
FLAT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class CalibrationEstimate:
    timestamp: int
    a0_hat: float
    a1_hat: float
    source: str = RAW
    # Set when a trend was requested but fewer than three raw estimates existed.
    fallback: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.a1_hat) and self.a1_hat > 0):
            raise ValueError(f'a1_hat must be positive and finite, got {self.a1_hat}')
        if not math.isfinite(self.a0_hat):
            raise ValueError(f'a0_hat must be finite, got {self.a0_hat}')

    @classmethod
    def identity(cls, timestamp: int) -> 'CalibrationEstimate':
        return cls(timestamp, 0.0, 1.0)


def _check(slice_: WindowSlice, completeness_min: float):
    if not slice_.is_sufficient(completeness_min):
        raise InsufficientData(
            f'insufficient data: {slice_.site_id} window ending {slice_.end} '
            f'is {slice_.completeness:.0%} complete'
        )


def mv_estimate(y: WindowSlice, z: WindowSlice, completeness_min: float = 0.75) -> CalibrationEstimate:
    _check(y, completeness_min)
    _check(z, completeness_min)
    if y.samples.size < 2 or z.samples.size < 2:
        raise InsufficientData('insufficient data: variance needs at least two samples')
    var_y = float(np.var(y.samples, ddof=1))
    mean_y = float(np.mean(y.samples))
    # Rounding in the mean leaves ~1e-30 variance on a constant window.
    if var_y <= FLAT_TOLERANCE * max(1.0, mean_y * mean_y):
        raise DegenerateWindow(f'degenerate sensor window: {y.site_id} is flat over ({y.start}, {y.end}]')
    var_z = float(np.var(z.samples, ddof=1))
    a1_hat = math.sqrt(var_z / var_y)
    if a1_hat <= 0.0:
        # A flat proxy cannot calibrate anything.
        raise InsufficientData(f'insufficient data: proxy {z.site_id} is flat over ({z.start}, {z.end}]')
    a0_hat = float(np.mean(z.samples)) - a1_hat * mean_y
    return CalibrationEstimate(timestamp=y.end, a0_hat=a0_hat, a1_hat=a1_hat, source=RAW)


def apply_correction(est: CalibrationEstimate, y_t):
    """x_hat = a0_hat + a1_hat * y; works on scalars and arrays."""
    return est.a0_hat + est.a1_hat * y_t
