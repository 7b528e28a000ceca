from dataclasses import dataclass
from typing import Optional

import numpy as np

REFERENCE = 'reference'
LOW_COST = 'low-cost'
ROLES = (REFERENCE, LOW_COST)

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class SiteRecord:
    site_id: str
    name: str
    role: str
    latitude: float
    longitude: float
    elevation: Optional[float] = None
    aadt_5km: Optional[float] = None
    land_use: Optional[str] = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f'{self.site_id}: role must be one of {ROLES}')
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f'{self.site_id}: latitude {self.latitude} out of range')
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f'{self.site_id}: longitude {self.longitude} out of range')
        if self.aadt_5km is not None and self.aadt_5km < 0:
            raise ValueError(f'{self.site_id}: AADT must be non-negative')

    @property
    def is_reference(self) -> bool:
        return self.role == REFERENCE


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance on a spherical Earth; broadcasts over arrays."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlmb = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def distance_km(a: SiteRecord, b: SiteRecord) -> float:
    return float(haversine_km(a.latitude, a.longitude, b.latitude, b.longitude))
