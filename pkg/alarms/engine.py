"""
Per-hour driver of the management framework for one site.

At each hour t the sensor and proxy windows (t - t_d, t] are compared with
the KS test and the mean-variance estimators, the persistence clocks are
updated, and the output is either the raw sensor value or its correction
through the trend-smoothed calibration. The tests always run on the raw
sensor stream, never on corrected output.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ozone_network.exceptions import DegenerateWindow, InsufficientData
from alarms.ledger import AlarmLedger, Breaches, ChartRow, decide_correction, evaluate_breaches
from alarms.thresholds import Thresholds
from calibration.moments import apply_correction, mv_estimate
from calibration.trend import EstimateHistory
from distribution.ks import ks_test
from timeseries.series import TimeSeries, window

logger = logging.getLogger(__name__)

NAN = float('nan')


@dataclass
class SiteState:
    site_id: str
    history: EstimateHistory
    ledger: AlarmLedger
    correcting: bool = False

    @classmethod
    def start(cls, site_id: str) -> 'SiteState':
        return cls(site_id, EstimateHistory(site_id), AlarmLedger(site_id))


@dataclass(frozen=True)
class StepOutput:
    timestamp: int
    raw_value: Optional[float]
    output_value: Optional[float]
    corrected: bool
    verified: bool


def _unverified(state: SiteState, t: int, raw: Optional[float], reason: str) -> StepOutput:
    state.ledger.freeze(t)
    latched = state.ledger.latched
    value = NAN if raw is None else raw
    state.ledger.record(ChartRow(
        timestamp=t, p_ks=NAN, a0_raw=NAN, a1_raw=NAN, a0_trend=NAN, a1_trend=NAN,
        breach_ks=False, breach_a0=False, breach_a1=False,
        alarm_ks=latched['ks'], alarm_a0=latched['a0'], alarm_a1=latched['a1'],
        corrected_flag=False, raw_value=value, output_value=value, verified=False,
    ))
    logger.debug('%s: hour %s unverified (%s)', state.site_id, t, reason)
    return StepOutput(t, raw, raw, corrected=False, verified=False)


def step(state: SiteState, t: int, sensor: TimeSeries, proxy: TimeSeries,
         th: Thresholds) -> Tuple[StepOutput, SiteState]:
    raw = sensor.value_at(t)
    y = window(sensor, t, th.t_d)
    z = window(proxy, t, th.t_d)
    if not (y.is_sufficient(th.completeness_min) and z.is_sufficient(th.completeness_min)):
        return _unverified(state, t, raw, 'incomplete window'), state

    try:
        est = mv_estimate(y, z, th.completeness_min)
    except DegenerateWindow:
        # A flat sensor counts as a1 out of bounds.
        est = None
    except InsufficientData as exc:
        return _unverified(state, t, raw, str(exc)), state
    p_ks = ks_test(y, z, th.completeness_min).p_value

    if est is not None:
        state.history.append(est)
        flags = evaluate_breaches(p_ks, est, th)
    else:
        flags = Breaches(ks=p_ks <= th.p_ks_min, a1=True, a0=False)
    trend = state.history.current_trend(t, th.trend_refit_hours) if len(state.history) else None

    state.ledger.update_persistence(t, flags, th)
    correct = decide_correction(state.ledger, th) and trend is not None and raw is not None
    if correct != state.correcting:
        logger.info('%s: correction %s at hour %s', state.site_id, 'started' if correct else 'stopped', t)
        state.correcting = correct
    output = float(apply_correction(trend, raw)) if correct else raw

    latched = state.ledger.latched
    state.ledger.record(ChartRow(
        timestamp=t,
        p_ks=p_ks,
        a0_raw=est.a0_hat if est is not None else NAN,
        a1_raw=est.a1_hat if est is not None else NAN,
        a0_trend=trend.a0_hat if trend is not None else NAN,
        a1_trend=trend.a1_hat if trend is not None else NAN,
        breach_ks=flags.ks, breach_a0=flags.a0, breach_a1=flags.a1,
        alarm_ks=latched['ks'], alarm_a0=latched['a0'], alarm_a1=latched['a1'],
        corrected_flag=correct,
        raw_value=NAN if raw is None else raw,
        output_value=NAN if output is None else output,
    ))
    return StepOutput(t, raw, output, corrected=correct, verified=True), state


@dataclass(frozen=True)
class SiteSummary:
    site_id: str
    hours: int
    alarm_pct: dict
    correction_pct: float
    unverified_pct: float
    failure: Optional[str] = None

    @classmethod
    def failed(cls, site_id: str, reason: str) -> 'SiteSummary':
        return cls(site_id, 0, {'ks': NAN, 'a0': NAN, 'a1': NAN}, NAN, NAN, failure=reason)

    @classmethod
    def from_ledger(cls, ledger: AlarmLedger) -> 'SiteSummary':
        rows = ledger.history
        hours = len(rows)
        if not hours:
            return cls(ledger.site_id, 0, {'ks': 0.0, 'a0': 0.0, 'a1': 0.0}, 0.0, 0.0)

        def pct(count):
            return 100.0 * count / hours

        return cls(
            site_id=ledger.site_id,
            hours=hours,
            alarm_pct={
                'ks': pct(sum(r.alarm_ks for r in rows)),
                'a0': pct(sum(r.alarm_a0 for r in rows)),
                'a1': pct(sum(r.alarm_a1 for r in rows)),
            },
            correction_pct=pct(sum(r.corrected_flag for r in rows)),
            unverified_pct=pct(sum(not r.verified for r in rows)),
        )


@dataclass
class MonitorResult:
    state: SiteState
    output: TimeSeries
    corrected: np.ndarray = field(repr=False)
    verified: np.ndarray = field(repr=False)

    @property
    def ledger(self) -> AlarmLedger:
        return self.state.ledger

    @property
    def summary(self) -> SiteSummary:
        return SiteSummary.from_ledger(self.state.ledger)


def monitor(sensor: TimeSeries, proxy: TimeSeries, th: Thresholds,
            start: Optional[int] = None, end: Optional[int] = None) -> MonitorResult:
    """Run ``step`` over every sensor hour in [start, end]."""
    state = SiteState.start(sensor.site_id)
    hours = sensor.between(start, end).hours
    outputs = np.empty(hours.size, dtype=np.float64)
    corrected = np.zeros(hours.size, dtype=bool)
    verified = np.zeros(hours.size, dtype=bool)
    for i, t in enumerate(hours.tolist()):
        out, state = step(state, t, sensor, proxy, th)
        outputs[i] = out.output_value
        corrected[i] = out.corrected
        verified[i] = out.verified
    if corrected.any():
        logger.info('%s: corrected %d of %d hours', sensor.site_id, int(corrected.sum()), hours.size)
    return MonitorResult(
        state=state,
        output=TimeSeries(sensor.site_id, hours, outputs),
        corrected=corrected,
        verified=verified,
    )