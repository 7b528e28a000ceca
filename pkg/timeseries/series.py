"""
Hourly site series, rolling windows and pairwise alignment.

Timestamps are integer hour stamps: whole hours since 1970-01-01T00:00Z.
An hour H holds every raw reading whose timestamp falls in [H, H + 1h).
"""

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterator, NamedTuple, Optional, Tuple

import numpy as np

SECONDS_PER_HOUR = 3600
HOURS_PER_MONTH = 30 * 24
EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

# Plausible ozone range for hourly values (ppb); small negatives are instrument noise.
VALUE_MIN = -10.0
VALUE_MAX = 500.0


def to_hour(moment: datetime) -> int:
    """Hour stamp of an aware UTC datetime. Raises if it is not on a whole hour."""
    if moment.tzinfo is None:
        raise ValueError('timestamps must be timezone-aware UTC')
    seconds = (moment - EPOCH) // timedelta(seconds=1)
    if seconds % SECONDS_PER_HOUR:
        raise ValueError(f'{moment.isoformat()} is not aligned to a whole hour')
    return seconds // SECONDS_PER_HOUR


def from_hour(hour: int) -> datetime:
    return EPOCH + timedelta(hours=int(hour))


def format_hour(hour: int) -> str:
    return from_hour(hour).strftime('%Y-%m-%dT%H:00:00Z')


HOUR_STAMP = re.compile(r'\d{4}-\d{2}-\d{2}T\d{2}:00:00Z')


def parse_timestamp(text: str) -> int:
    """Hour stamp of ``YYYY-MM-DDTHH:00:00Z``; any other form is rejected."""
    if not HOUR_STAMP.fullmatch(text):
        raise ValueError(f'{text!r} is not an hour-aligned UTC timestamp (YYYY-MM-DDTHH:00:00Z)')
    moment = datetime.strptime(text, '%Y-%m-%dT%H:%M:%SZ').replace(tzinfo=timezone.utc)
    return to_hour(moment)


def month_index(hour: int, origin: int) -> int:
    """1-based deployment month (30-day buckets) of ``hour`` counted from ``origin``."""
    return int((hour - origin) // HOURS_PER_MONTH) + 1


class Observation(NamedTuple):
    timestamp: datetime
    value: float


def _frozen(array, dtype):
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeSeries:
    """Ordered hourly observations for one site; gaps are simply absent hours."""

    site_id: str
    hours: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    units: str = 'ppb'

    def __post_init__(self):
        hours = _frozen(self.hours, np.int64).reshape(-1)
        values = _frozen(self.values, np.float64).reshape(-1)
        if hours.shape != values.shape:
            raise ValueError('hours and values must have the same length')
        if hours.size > 1 and np.any(np.diff(hours) <= 0):
            raise ValueError(f'{self.site_id}: timestamps must be strictly increasing')
        if not np.all(np.isfinite(values)):
            raise ValueError(f'{self.site_id}: values must be finite')
        object.__setattr__(self, 'hours', hours)
        object.__setattr__(self, 'values', values)

    @classmethod
    def empty(cls, site_id: str) -> 'TimeSeries':
        return cls(site_id, np.empty(0, np.int64), np.empty(0, np.float64))

    @classmethod
    def from_observations(cls, site_id: str, observations) -> 'TimeSeries':
        observations = list(observations)
        return cls(
            site_id,
            [to_hour(obs.timestamp) for obs in observations],
            [obs.value for obs in observations],
        )

    def __len__(self):
        return int(self.hours.size)

    def __iter__(self) -> Iterator[Observation]:
        return self.observations()

    def observations(self) -> Iterator[Observation]:
        for hour, value in zip(self.hours.tolist(), self.values.tolist()):
            yield Observation(from_hour(hour), value)

    @property
    def start(self) -> Optional[int]:
        return int(self.hours[0]) if self.hours.size else None

    @property
    def end(self) -> Optional[int]:
        return int(self.hours[-1]) if self.hours.size else None

    def value_at(self, hour: int) -> Optional[float]:
        idx = np.searchsorted(self.hours, hour)
        if idx < self.hours.size and self.hours[idx] == hour:
            return float(self.values[idx])
        return None

    def between(self, start: Optional[int] = None, end: Optional[int] = None) -> 'TimeSeries':
        """Sub-series with hours in the closed range [start, end]."""
        lo = 0 if start is None else np.searchsorted(self.hours, start, side='left')
        hi = self.hours.size if end is None else np.searchsorted(self.hours, end, side='right')
        return TimeSeries(self.site_id, self.hours[lo:hi], self.values[lo:hi], self.units)

    def with_values(self, values) -> 'TimeSeries':
        return TimeSeries(self.site_id, self.hours, values, self.units)


@dataclass(frozen=True)
class RawReadings:
    """Sensor readings at arbitrary cadence; ``seconds`` are UTC epoch seconds."""

    site_id: str
    seconds: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        seconds = _frozen(self.seconds, np.int64).reshape(-1)
        values = _frozen(self.values, np.float64).reshape(-1)
        if seconds.shape != values.shape:
            raise ValueError('seconds and values must have the same length')
        if seconds.size > 1 and np.any(np.diff(seconds) < 0):
            raise ValueError(f'{self.site_id}: raw timestamps must be increasing')
        object.__setattr__(self, 'seconds', seconds)
        object.__setattr__(self, 'values', values)


@dataclass(frozen=True)
class WindowSlice:
    site_id: str
    start: int
    end: int
    samples: np.ndarray = field(repr=False)
    completeness: float

    @property
    def t_d(self) -> int:
        return self.end - self.start

    def is_sufficient(self, completeness_min: float) -> bool:
        return self.samples.size > 0 and self.completeness >= completeness_min


def resample_hourly(raw: RawReadings) -> TimeSeries:
    """Hourly arithmetic means; hours without readings stay absent."""
    if raw.seconds.size == 0:
        return TimeSeries.empty(raw.site_id)
    buckets = np.floor_divide(raw.seconds, SECONDS_PER_HOUR)
    hours, inverse, counts = np.unique(buckets, return_inverse=True, return_counts=True)
    sums = np.bincount(inverse, weights=raw.values, minlength=hours.size)
    return TimeSeries(raw.site_id, hours, sums / counts)


def window(series: TimeSeries, end: int, t_d: int) -> WindowSlice:
    """Observations in (end - t_d, end] and the fraction of expected hours present."""
    if t_d <= 0:
        raise ValueError('t_d must be a positive number of hours')
    lo = np.searchsorted(series.hours, end - t_d, side='right')
    hi = np.searchsorted(series.hours, end, side='right')
    samples = series.values[lo:hi]
    return WindowSlice(
        site_id=series.site_id,
        start=int(end - t_d),
        end=int(end),
        samples=samples,
        completeness=samples.size / t_d,
    )


def align_indices(a: TimeSeries, b: TimeSeries, start: Optional[int] = None,
                  end: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Common hours of ``a`` and ``b`` within [start, end] and their positions in each."""
    hours, ia, ib = np.intersect1d(a.hours, b.hours, assume_unique=True, return_indices=True)
    keep = np.ones(hours.size, dtype=bool)
    if start is not None:
        keep &= hours >= start
    if end is not None:
        keep &= hours <= end
    return hours[keep], ia[keep], ib[keep]


def align(a: TimeSeries, b: TimeSeries, start: Optional[int] = None,
          end: Optional[int] = None) -> np.ndarray:
    """(value_a, value_b) pairs at hours present in both series, in time order.

    Returns an array of shape (n, 2).
    """
    _, ia, ib = align_indices(a, b, start, end)
    return np.column_stack([a.values[ia], b.values[ib]]) if ia.size else np.empty((0, 2))
