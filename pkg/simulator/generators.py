"""
Synthetic truth, sensor and reference series with known calibration.

Randomness comes from numpy's PCG64 bit generator seeded through
SeedSequence([seed, stream, site_index]); the same scenario always gives the
same numbers. Truth at each site is

    X_t = max(0, baseline + amplitude * sin(2 pi (hour_of_day - phase) / 24)
                 + weight * regional_t + noise_t)

where regional_t is a random walk shared by every site, reflected at
+/- regional_bound. A low-cost sensor reports Y_t = (X_t - a0 - eps_t) / a1 so
that X = a0 + a1 * Y + eps holds by construction.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ozone_network.exceptions import ConfigError
from proxies.sites import REFERENCE
from simulator.scenario import (
    FLATLINE, GAIN_RAMP, GENERATOR_NAME, Scenario, SensorModel, TruthModel,
)
from timeseries.series import TimeSeries, format_hour

logger = logging.getLogger(__name__)

REGIONAL_STREAM = 0
TRUTH_STREAM = 1
SENSOR_STREAM = 2
REFERENCE_STREAM = 3
RELATION_STREAM = 4


def rng(seed: int, stream: int, site_index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream, site_index])))


def reflect(x: np.ndarray, bound: float) -> np.ndarray:
    """Fold an unbounded walk into [-bound, bound] with mirror reflections."""
    if bound <= 0:
        return np.zeros_like(x)
    period = 4.0 * bound
    return np.abs(np.mod(x - bound, period) - 2.0 * bound) - bound


def regional_component(duration: int, seed: int, step: float = 0.5, bound: float = 15.0) -> np.ndarray:
    steps = rng(seed, REGIONAL_STREAM).normal(0.0, step, size=duration)
    steps[0] = 0.0
    return reflect(np.cumsum(steps), bound)


def _truth_values(model: TruthModel, hours: np.ndarray, regional: np.ndarray,
                  noise_rng: np.random.Generator) -> np.ndarray:
    hour_of_day = np.mod(hours, 24).astype(np.float64)
    diurnal = model.amplitude * np.sin(2.0 * np.pi * (hour_of_day - model.phase) / 24.0)
    noise = noise_rng.normal(0.0, model.noise, size=hours.size) if model.noise > 0 else 0.0
    return np.maximum(0.0, model.baseline + diurnal + model.regional_weight * regional + noise)


def generate_truth(model: TruthModel, duration: int, seed: int, site_index: int = 0,
                   start: int = 0, regional: Optional[np.ndarray] = None,
                   site_id: str = 'truth') -> TimeSeries:
    """Hourly true concentration X over ``duration`` hours from ``start``."""
    if regional is None:
        regional = regional_component(duration, seed)
    hours = start + np.arange(duration, dtype=np.int64)
    values = _truth_values(model, hours, regional, rng(seed, TRUTH_STREAM, site_index))
    return TimeSeries(site_id, hours, values)


def generate_related_truth(source: TimeSeries, b0: float, b1: float, sigma_e: float, seed: int,
                           site_index: int = 0, site_id: str = 'related') -> TimeSeries:
    """X_k = max(0, b0 + b1 * X_source + e) with e ~ N(0, sigma_e)."""
    if b1 <= 0:
        raise ConfigError('proxy relation b1 must be positive')
    e = rng(seed, RELATION_STREAM, site_index).normal(0.0, sigma_e, size=len(source)) if sigma_e > 0 else 0.0
    return TimeSeries(site_id, source.hours, np.maximum(0.0, b0 + b1 * source.values + e))


def effective_parameters(model: SensorModel, duration: int):
    """Per-hour (a0, a1, flat mask) after applying the drift schedule in start order."""
    elapsed = np.arange(duration, dtype=np.float64)
    a0 = np.full(duration, model.a0)
    gain = np.full(duration, 1.0 / model.a1)
    flat = np.zeros(duration, dtype=bool)
    for seg in sorted(model.drift, key=lambda s: s.start):
        if seg.start >= duration:
            continue
        end = duration - 1 if seg.end is None else min(seg.end, duration - 1)
        if seg.mode == FLATLINE:
            flat[seg.start:end + 1] = True
            continue
        target = seg.target
        series = gain if seg.mode == GAIN_RAMP else a0
        begin = series[seg.start]
        span = max(end - seg.start, 1)
        frac = np.clip((elapsed[seg.start:] - seg.start) / span, 0.0, 1.0)
        series[seg.start:] = begin + (target - begin) * frac
    return a0, 1.0 / gain, flat


def apply_sensor_model(truth: TimeSeries, model: SensorModel, seed: int, site_index: int = 0,
                       site_id: Optional[str] = None) -> TimeSeries:
    """Sensor output Y = (X - a0 - eps) / a1 with drifting effective parameters."""
    n = len(truth)
    a0, a1, flat = effective_parameters(model, n)
    eps = rng(seed, SENSOR_STREAM, site_index).normal(0.0, model.noise, size=n) if model.noise > 0 else 0.0
    y = (truth.values - a0 - eps) / a1
    if flat.any():
        # A blocked inlet holds the last reading taken before the blockage.
        idx = np.arange(n)
        last_live = np.maximum.accumulate(np.where(flat, -1, idx))
        held = np.where(last_live >= 0, y[np.maximum(last_live, 0)], y[0])
        y = np.where(flat, held, y)
    return TimeSeries(site_id or truth.site_id, truth.hours, y)


def _drop_outages(series: TimeSeries, outages, start: int) -> TimeSeries:
    if not outages:
        return series
    keep = np.ones(len(series), dtype=bool)
    rel = series.hours - start
    for a, b in outages:
        keep &= ~((rel >= a) & (rel <= b))
    return TimeSeries(series.site_id, series.hours[keep], series.values[keep])


@dataclass
class ScenarioOutput:
    truth: Dict[str, TimeSeries]
    sensor: Dict[str, TimeSeries]
    reference: Dict[str, TimeSeries]
    manifest: dict = field(default_factory=dict)

    @property
    def observed(self) -> Dict[str, TimeSeries]:
        """What the network reports: sensor output at low-cost sites, reference data elsewhere."""
        return {**self.reference, **self.sensor}


def run_scenario(scenario: Scenario) -> ScenarioOutput:
    regional = regional_component(scenario.duration, scenario.seed,
                                  scenario.regional_step, scenario.regional_bound)
    index = {spec.site_id: i for i, spec in enumerate(scenario.sites)}
    truth: Dict[str, TimeSeries] = {}

    pending = list(scenario.sites)
    while pending:
        progressed = False
        for spec in list(pending):
            model = spec.truth
            i = index[spec.site_id]
            if model.derived_from is None:
                truth[spec.site_id] = generate_truth(model, scenario.duration, scenario.seed, i,
                                                     scenario.start, regional, spec.site_id)
            elif model.derived_from in truth:
                truth[spec.site_id] = generate_related_truth(truth[model.derived_from], model.b0, model.b1,
                                                             model.sigma_e, scenario.seed, i, spec.site_id)
            else:
                continue
            pending.remove(spec)
            progressed = True
        if not progressed:
            raise ConfigError('derived_from relations form a cycle')

    sensor, reference = {}, {}
    for spec in scenario.sites:
        i = index[spec.site_id]
        x = truth[spec.site_id]
        if spec.record.role == REFERENCE:
            noise = rng(scenario.seed, REFERENCE_STREAM, i).normal(0.0, scenario.reference_noise, size=len(x)) \
                if scenario.reference_noise > 0 else 0.0
            observed = x.with_values(x.values + noise)
            reference[spec.site_id] = _drop_outages(observed, spec.outages, scenario.start)
        else:
            observed = apply_sensor_model(x, spec.sensor, scenario.seed, i)
            sensor[spec.site_id] = _drop_outages(observed, spec.outages, scenario.start)

    manifest = {
        'seed': scenario.seed,
        'config_hash': scenario.config_hash,
        'generator': GENERATOR_NAME,
        'start': format_hour(scenario.start),
        'duration_hours': scenario.duration,
        'sites': [
            {'site_id': spec.site_id, 'role': spec.record.role} for spec in scenario.sites
        ],
    }
    logger.info('simulated %d sites over %d hours (seed %d)', len(scenario.sites), scenario.duration, scenario.seed)
    return ScenarioOutput(truth=truth, sensor=sensor, reference=reference, manifest=manifest)
