"""Ready-made scenarios used by the oracle tests and the sample configs."""

from typing import List, Optional, Sequence

import numpy as np

from proxies.sites import LOW_COST, REFERENCE, SiteRecord
from simulator.scenario import (
    FLATLINE, GAIN_RAMP, DriftSegment, Scenario, SensorModel, SiteSpec, TruthModel, months,
)

ORIGIN_LAT = 34.0
ORIGIN_LON = -117.5


def _site(site_id: str, role: str, lat: float, lon: float, aadt: float = None) -> SiteRecord:
    return SiteRecord(site_id=site_id, name=site_id, role=role, latitude=lat, longitude=lon,
                      aadt_5km=aadt)


def _cluster(rng: np.random.Generator, count: int, spread: float) -> np.ndarray:
    return rng.uniform(-spread, spread, size=(count, 2))


def null_network(n_sensors: int = 20, n_references: int = 3, duration: int = months(7),
                 seed: int = 1, sensor_noise: float = 1.0) -> Scenario:
    """Healthy network: every site shares one climate and no sensor drifts."""
    layout = np.random.default_rng(seed)
    specs: List[SiteSpec] = []
    for i, (dlat, dlon) in enumerate(_cluster(layout, n_references, 0.05)):
        specs.append(SiteSpec(_site(f'REF{i + 1:02d}', REFERENCE, ORIGIN_LAT + dlat, ORIGIN_LON + dlon)))
    for i, (dlat, dlon) in enumerate(_cluster(layout, n_sensors, 0.1)):
        specs.append(SiteSpec(
            _site(f'LC{i + 1:02d}', LOW_COST, ORIGIN_LAT + dlat, ORIGIN_LON + dlon),
            sensor=SensorModel(noise=sensor_noise),
        ))
    return Scenario(seed=seed, duration=duration, sites=tuple(specs))


def drift_network(n_sensors: int = 20, n_references: int = 3, duration: int = months(7),
                  seed: int = 7, gain_drift: Sequence[int] = (0, 1, 2, 3, 4),
                  flatlined: Sequence[int] = (5, 6), final_gain: float = 0.5,
                  flatline_hours: int = 240, flatline_start: Optional[int] = None) -> Scenario:
    """Healthy network with some sensors losing gain and some with blocked inlets.

    Sensors listed in ``gain_drift`` lose response gain linearly to ``final_gain``
    between months 1.5 and 3.5; those in ``flatlined`` hold their output from
    ``flatline_start``, by default for the last ``flatline_hours`` of the scenario.

    A flat sensor carries no information, so its corrected output stays flat
    too. The short default blockage keeps those sites inside the network-wide
    MAB bound; pass ``flatline_start=months(3)`` for a long outage.
    """
    base = null_network(n_sensors, n_references, duration, seed)
    ramp = DriftSegment(start=months(1.5), end=months(3.5), mode=GAIN_RAMP, target=final_gain)
    if flatline_start is None:
        flatline_start = max(duration - flatline_hours, 0)
    blockage = DriftSegment(start=flatline_start, mode=FLATLINE)
    specs = []
    for spec in base.sites:
        if spec.record.role == LOW_COST:
            index = int(spec.site_id[2:]) - 1
            drift = ()
            if index in gain_drift:
                drift = (ramp,)
            elif index in flatlined:
                drift = (blockage,)
            spec = SiteSpec(spec.record, spec.truth,
                            SensorModel(spec.sensor.a0, spec.sensor.a1, spec.sensor.noise, drift))
        specs.append(spec)
    return Scenario(seed=seed, duration=duration, sites=tuple(specs))


def terrain_network(rows: int = 4, cols: int = 4, spacing: float = 0.25, duration: int = months(1),
                    seed: int = 11, baseline_gradient: float = 16.0,
                    amplitude_gradient: float = 4.0) -> Scenario:
    """Grid of reference sites over a smooth concentration field.

    Baseline rises ``baseline_gradient`` ppb per degree of latitude and the
    diurnal amplitude ``amplitude_gradient`` ppb per degree of longitude. AADT
    values are drawn independently of position.
    """
    layout = np.random.default_rng(seed)
    aadt = layout.integers(20_000, 250_000, size=rows * cols)
    specs = []
    for r in range(rows):
        for c in range(cols):
            dlat, dlon = r * spacing, c * spacing
            k = r * cols + c
            record = _site(f'R{r}{c}', REFERENCE, ORIGIN_LAT + dlat, ORIGIN_LON + dlon, float(aadt[k]))
            truth = TruthModel(baseline=30.0 + baseline_gradient * dlat,
                               amplitude=15.0 + amplitude_gradient * dlon)
            specs.append(SiteSpec(record, truth))
    return Scenario(seed=seed, duration=duration, sites=tuple(specs))
