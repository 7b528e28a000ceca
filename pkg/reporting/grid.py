"""Inverse-distance-weighted gridding of site values onto a lat/lon grid."""

from dataclasses import dataclass, field
from typing import Iterable, List, Tuple

import numpy as np
import pandas as pd

from ozone_network.exceptions import InsufficientData
from proxies.sites import haversine_km

# Cells closer than this to a site take the site's value.
EXACT_HIT_KM = 0.001


@dataclass(frozen=True)
class BoundingBox:
    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self):
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise ValueError('bounding box must have positive extent')

    @classmethod
    def parse(cls, text: str) -> 'BoundingBox':
        """Parse ``lat_min,lat_max,lon_min,lon_max``."""
        parts = [float(p) for p in text.split(',')]
        if len(parts) != 4:
            raise ValueError('bounding box needs four comma-separated numbers')
        return cls(*parts)


@dataclass(frozen=True)
class GridField:
    bbox: BoundingBox
    cell_size: float
    lats: np.ndarray = field(repr=False)
    lons: np.ndarray = field(repr=False)
    # values[i, j] belongs to the cell centred on (lats[i], lons[j]).
    values: np.ndarray = field(repr=False)

    def cells(self) -> Iterable[Tuple[float, float, float]]:
        for i, lat in enumerate(self.lats.tolist()):
            for j, lon in enumerate(self.lons.tolist()):
                yield lat, lon, float(self.values[i, j])


def cell_centres(bbox: BoundingBox, cell_size: float) -> Tuple[np.ndarray, np.ndarray]:
    if cell_size <= 0:
        raise ValueError('cell size must be positive')
    n_lat = max(1, int(np.ceil((bbox.lat_max - bbox.lat_min) / cell_size - 1e-9)))
    n_lon = max(1, int(np.ceil((bbox.lon_max - bbox.lon_min) / cell_size - 1e-9)))
    lats = bbox.lat_min + (np.arange(n_lat) + 0.5) * cell_size
    lons = bbox.lon_min + (np.arange(n_lon) + 0.5) * cell_size
    return lats, lons


def idw_grid(sites: List[Tuple[float, float, float]], bbox: BoundingBox, cell_size: float,
             power: float = 2.0) -> GridField:
    """Weights are d^-power with haversine distance d; the result is a convex combination."""
    if not sites:
        raise InsufficientData('insufficient data: no site values to interpolate')
    site_lat, site_lon, site_val = (np.asarray(col, dtype=np.float64) for col in zip(*sites))
    lats, lons = cell_centres(bbox, cell_size)
    grid_lat, grid_lon = np.meshgrid(lats, lons, indexing='ij')

    dist = haversine_km(grid_lat[..., None], grid_lon[..., None], site_lat, site_lon)
    hit = dist < EXACT_HIT_KM
    with np.errstate(divide='ignore', invalid='ignore'):
        weights = np.where(hit, 0.0, dist ** -power)
        values = (weights * site_val).sum(axis=-1) / weights.sum(axis=-1)

    any_hit = hit.any(axis=-1)
    if any_hit.any():
        nearest = np.argmin(dist, axis=-1)
        values = np.where(any_hit, site_val[nearest], values)
    # Rounding can step past the convex hull by an ulp.
    values = np.clip(values, site_val.min(), site_val.max())
    return GridField(bbox=bbox, cell_size=cell_size, lats=lats, lons=lons, values=values)


def grid_frame(grid: GridField) -> pd.DataFrame:
    """Long-form (lat, lon, value) table, latitude-major."""
    lat, lon = np.meshgrid(grid.lats, grid.lons, indexing='ij')
    return pd.DataFrame({'lat': lat.ravel(), 'lon': lon.ravel(), 'value': grid.values.ravel()})
