"""
Breach evaluation and the persistence rule that turns breaches into alarms.

Each of the three tests (KS, a1, a0) keeps a clock counting consecutive
breach hours. An hour without a breach resets the clock and clears the
alarm; an hour without enough data freezes it. The alarm latches once the
clock exceeds t_f hours.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional

from ozone_network.exceptions import OutOfOrderUpdate
from alarms.thresholds import Thresholds
from calibration.moments import CalibrationEstimate

logger = logging.getLogger(__name__)

TESTS = ('ks', 'a0', 'a1')

CHART_COLUMNS = [
    'timestamp', 'p_ks', 'a0_raw', 'a1_raw', 'a0_trend', 'a1_trend',
    'breach_ks', 'breach_a0', 'breach_a1', 'alarm_ks', 'alarm_a0', 'alarm_a1',
    'corrected_flag', 'raw_value', 'output_value',
]


class Breaches(NamedTuple):
    ks: bool
    a1: bool
    a0: bool

    def as_dict(self) -> Dict[str, bool]:
        return {'ks': self.ks, 'a0': self.a0, 'a1': self.a1}


def evaluate_breaches(p_ks: float, est: CalibrationEstimate, th: Thresholds) -> Breaches:
    """Boundary values are breaches; only the open interior passes."""
    for value in (p_ks, est.a0_hat, est.a1_hat):
        if not math.isfinite(value):
            raise ValueError('breach evaluation needs finite inputs')
    return Breaches(
        ks=p_ks <= th.p_ks_min,
        a1=not (th.a1_low < est.a1_hat < th.a1_high),
        a0=not (th.a0_low < est.a0_hat < th.a0_high),
    )


@dataclass
class BreachClock:
    breach_start: Optional[int] = None
    breach_hours: int = 0
    latched: bool = False


@dataclass(frozen=True)
class ChartRow:
    timestamp: int
    p_ks: float
    a0_raw: float
    a1_raw: float
    a0_trend: float
    a1_trend: float
    breach_ks: bool
    breach_a0: bool
    breach_a1: bool
    alarm_ks: bool
    alarm_a0: bool
    alarm_a1: bool
    corrected_flag: bool
    raw_value: float
    output_value: float
    verified: bool = True

    @property
    def alarm_sum(self) -> int:
        return int(self.alarm_ks) + int(self.alarm_a0) + int(self.alarm_a1)

    def as_row(self) -> list:
        return [getattr(self, column) for column in CHART_COLUMNS]


@dataclass
class AlarmLedger:
    """Per-site breach clocks, latched alarms and the append-only chart history."""

    site_id: str
    clocks: Dict[str, BreachClock] = field(default_factory=lambda: {name: BreachClock() for name in TESTS})
    history: List[ChartRow] = field(default_factory=list)
    last_hour: Optional[int] = None

    @property
    def latched(self) -> Dict[str, bool]:
        return {name: clock.latched for name, clock in self.clocks.items()}

    @property
    def latched_count(self) -> int:
        return sum(clock.latched for clock in self.clocks.values())

    def _advance(self, t: int):
        if self.last_hour is not None and t <= self.last_hour:
            raise OutOfOrderUpdate(
                f'{self.site_id}: update at hour {t} is not after the last entry at {self.last_hour}'
            )
        self.last_hour = t

    def update_persistence(self, t: int, flags: Breaches, th: Thresholds) -> 'AlarmLedger':
        self._advance(t)
        for name, breached in flags.as_dict().items():
            clock = self.clocks[name]
            if breached:
                if clock.breach_start is None:
                    clock.breach_start = t
                    clock.breach_hours = 0
                clock.breach_hours += 1
                if not clock.latched and clock.breach_hours > th.t_f:
                    clock.latched = True
                    logger.info('%s: %s alarm latched at hour %s (breach since %s)',
                                self.site_id, name, t, clock.breach_start)
            else:
                if clock.latched:
                    logger.info('%s: %s alarm cleared at hour %s', self.site_id, name, t)
                self.clocks[name] = BreachClock()
        return self

    def freeze(self, t: int) -> 'AlarmLedger':
        """An hour without enough data: clocks neither advance nor reset."""
        self._advance(t)
        logger.debug('%s: clocks frozen at hour %s (insufficient data)', self.site_id, t)
        return self

    def record(self, row: ChartRow):
        if self.history and row.timestamp <= self.history[-1].timestamp:
            raise OutOfOrderUpdate(f'{self.site_id}: chart rows must be strictly increasing in time')
        self.history.append(row)


def update_persistence(ledger: AlarmLedger, t: int, flags: Breaches, th: Thresholds) -> AlarmLedger:
    return ledger.update_persistence(t, flags, th)


def decide_correction(ledger: AlarmLedger, th: Thresholds) -> bool:
    return ledger.latched_count >= th.correction_alarm_count
