"""Scenario description for the synthetic network: truth, sensor and site models."""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

from ozone_network.exceptions import ConfigError
from proxies.forms import parse_site
from proxies.sites import LOW_COST, SiteRecord
from timeseries.series import HOURS_PER_MONTH, format_hour, parse_timestamp

GAIN_RAMP = 'gain_ramp'
OFFSET_RAMP = 'offset_ramp'
FLATLINE = 'flatline'
DRIFT_MODES = (GAIN_RAMP, OFFSET_RAMP, FLATLINE)

GENERATOR_NAME = 'numpy.random.PCG64 seeded by SeedSequence([seed, stream, site_index])'


@dataclass(frozen=True)
class TruthModel:
    baseline: float = 30.0
    amplitude: float = 15.0
    phase: float = 9.0
    regional_weight: float = 1.0
    noise: float = 2.0
    # Proxy relation X = b0 + b1 * X_source + e, used when derived_from is set.
    derived_from: Optional[str] = None
    b0: float = 0.0
    b1: float = 1.0
    sigma_e: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0 or self.noise < 0 or self.sigma_e < 0:
            raise ConfigError('truth amplitude and noise levels must be non-negative')
        if self.b1 <= 0:
            raise ConfigError('proxy relation b1 must be positive')


@dataclass(frozen=True)
class DriftSegment:
    """Change in effective calibration over [start, end] hours from scenario start.

    gain_ramp moves the sensor response gain (1 / a1) linearly to ``target``;
    offset_ramp moves a0 linearly to ``target``; flatline holds the output at
    its last value for the whole segment (``end`` None means to the end).
    """

    start: int
    mode: str
    end: Optional[int] = None
    target: float = 0.0

    def __post_init__(self):
        if self.mode not in DRIFT_MODES:
            raise ConfigError(f'drift mode must be one of {DRIFT_MODES}')
        if self.start < 0 or (self.end is not None and self.end < self.start):
            raise ConfigError('drift segment must have 0 <= start <= end')
        if self.mode == GAIN_RAMP and self.target <= 0:
            raise ConfigError('gain_ramp target must be positive')


@dataclass(frozen=True)
class SensorModel:
    a0: float = 0.0
    a1: float = 1.0
    noise: float = 0.0
    drift: Tuple[DriftSegment, ...] = ()

    def __post_init__(self):
        if self.a1 <= 0:
            raise ConfigError('sensor a1 must be positive')
        if self.noise < 0:
            raise ConfigError('sensor noise must be non-negative')


@dataclass(frozen=True)
class SiteSpec:
    record: SiteRecord
    truth: TruthModel = field(default_factory=TruthModel)
    sensor: SensorModel = field(default_factory=SensorModel)
    outages: Tuple[Tuple[int, int], ...] = ()

    @property
    def site_id(self) -> str:
        return self.record.site_id


@dataclass(frozen=True)
class Scenario:
    seed: int
    duration: int
    sites: Tuple[SiteSpec, ...]
    start: int = 0
    reference_noise: float = 1.0
    regional_step: float = 0.5
    regional_bound: float = 15.0
    proxy_strategy: str = 'nearest'
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError('scenario duration must be positive')
        ids = [s.site_id for s in self.sites]
        if len(ids) != len(set(ids)):
            raise ConfigError('scenario site ids must be unique')
        known = set(ids)
        for spec in self.sites:
            src = spec.truth.derived_from
            if src is not None and (src not in known or src == spec.site_id):
                raise ConfigError(f'{spec.site_id}: derived_from {src!r} is not another scenario site')

    @property
    def config_hash(self) -> str:
        return config_hash(self.source or scenario_to_dict(self))

    def spec(self, site_id: str) -> SiteSpec:
        return next(s for s in self.sites if s.site_id == site_id)


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def _drift_from_dict(item: dict) -> DriftSegment:
    return DriftSegment(
        start=int(item['start_hour']),
        end=None if item.get('end_hour') is None else int(item['end_hour']),
        mode=item['mode'],
        target=float(item.get('target', 0.0)),
    )


def scenario_from_dict(data: dict) -> Scenario:
    """Build a Scenario from its JSON form; see sample_configs/scenario.json."""
    try:
        specs = []
        for item in data['sites']:
            truth = dict(item.get('truth', {}))
            sensor = dict(item.get('sensor', {}))
            drift = tuple(_drift_from_dict(d) for d in sensor.pop('drift', []))
            specs.append(SiteSpec(
                record=parse_site(item),
                truth=TruthModel(**truth),
                sensor=SensorModel(drift=drift, **sensor),
                outages=tuple((int(a), int(b)) for a, b in item.get('outages', [])),
            ))
        return Scenario(
            seed=int(data['seed']),
            duration=int(data['duration_hours']),
            sites=tuple(specs),
            start=parse_timestamp(data.get('start', '1970-01-01T00:00:00Z')),
            reference_noise=float(data.get('reference_noise_ppb', 1.0)),
            regional_step=float(data.get('regional_step_ppb', 0.5)),
            regional_bound=float(data.get('regional_bound_ppb', 15.0)),
            proxy_strategy=data.get('proxy_strategy', 'nearest'),
            source=data,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f'invalid scenario: {exc}') from exc


def scenario_to_dict(scenario: Scenario) -> dict:
    sites = []
    for spec in scenario.sites:
        r = spec.record
        site = {
            'site_id': r.site_id, 'name': r.name, 'role': r.role,
            'latitude': r.latitude, 'longitude': r.longitude,
            'truth': asdict(spec.truth),
            'outages': [list(o) for o in spec.outages],
        }
        for key in ('elevation', 'aadt_5km', 'land_use'):
            if getattr(r, key) is not None:
                site[key] = getattr(r, key)
        if r.role == LOW_COST:
            site['sensor'] = {
                'a0': spec.sensor.a0, 'a1': spec.sensor.a1, 'noise': spec.sensor.noise,
                'drift': [
                    {'start_hour': d.start, 'end_hour': d.end, 'mode': d.mode, 'target': d.target}
                    for d in spec.sensor.drift
                ],
            }
        sites.append(site)
    return {
        'seed': scenario.seed,
        'start': format_hour(scenario.start),
        'duration_hours': scenario.duration,
        'reference_noise_ppb': scenario.reference_noise,
        'regional_step_ppb': scenario.regional_step,
        'regional_bound_ppb': scenario.regional_bound,
        'proxy_strategy': scenario.proxy_strategy,
        'sites': sites,
    }


def months(n: float) -> int:
    return int(round(n * HOURS_PER_MONTH))
