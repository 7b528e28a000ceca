"""
Empirical distributions and the two-sample Kolmogorov-Smirnov test.

The ECDF uses the 1/(n+1) normalization with a strict inequality::

    F(x) = #{x_i < x} / (n + 1)

so F never reaches 1; the upper plateau is n/(n+1). The KS statistic is the
supremum of |F_a - F_b|, found by evaluating both step functions at every
pooled sample value and just to the right of it.

Hourly ozone is autocorrelated while the test assumes independent samples;
no correction is made for this, so p-values are best read as a consistent
alarm score rather than an exact significance level.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ozone_network.exceptions import InsufficientData
from timeseries.series import WindowSlice


@dataclass(frozen=True)
class Ecdf:
    values: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def normalization(self) -> float:
        return 1.0 / (self.n + 1)

    def __call__(self, x):
        counts = np.searchsorted(self.values, x, side='left')
        return counts / (self.n + 1)

    def right_limit(self, x):
        """lim F(y) as y -> x from above, i.e. #{x_i <= x} / (n + 1)."""
        counts = np.searchsorted(self.values, x, side='right')
        return counts / (self.n + 1)


@dataclass(frozen=True)
class KsResult:
    d: float
    p_value: float
    m: int
    n: int


def _as_sample(sample) -> np.ndarray:
    values = np.asarray(sample, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise InsufficientData('insufficient data: empty sample')
    return values


def ecdf(sample) -> Ecdf:
    values = np.sort(_as_sample(sample))
    values.setflags(write=False)
    return Ecdf(values)


def ks_statistic(a, b) -> float:
    fa, fb = ecdf(a), ecdf(b)
    pooled = np.union1d(fa.values, fb.values)
    at_points = np.abs(fa(pooled) - fb(pooled))
    right_of_points = np.abs(fa.right_limit(pooled) - fb.right_limit(pooled))
    return float(max(at_points.max(), right_of_points.max()))


def kolmogorov_q(lam: float) -> float:
    """Kolmogorov survival function Q_KS(lambda), clamped to [0, 1]."""
    if lam <= 0.0:
        return 1.0
    return min(max(float(special.kolmogorov(lam)), 0.0), 1.0)


def ks_pvalue(d: float, m: int, n: int) -> float:
    """Asymptotic two-sided p-value with the Stephens small-sample correction."""
    if m < 1 or n < 1:
        raise InsufficientData('insufficient data: sample sizes must be at least 1')
    if not 0.0 <= d <= 1.0:
        raise ValueError(f'KS statistic {d} outside [0, 1]')
    n_e = m * n / (m + n)
    root = math.sqrt(n_e)
    lam = (root + 0.12 + 0.11 / root) * d
    return kolmogorov_q(lam)


def ks_test(a: WindowSlice, b: WindowSlice, completeness_min: float = 0.75) -> KsResult:
    for slice_ in (a, b):
        if not slice_.is_sufficient(completeness_min):
            raise InsufficientData(
                f'insufficient data: {slice_.site_id} window ending {slice_.end} '
                f'is {slice_.completeness:.0%} complete'
            )
    d = ks_statistic(a.samples, b.samples)
    m, n = a.samples.size, b.samples.size
    return KsResult(d=d, p_value=ks_pvalue(d, m, n), m=int(m), n=int(n))
