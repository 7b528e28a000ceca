"""
Network configuration file.

A single JSON document; sample_configs/network.json shows every key:

    {
      "sites": [{"site_id": ..., "role": "reference" | "low-cost", "latitude": ..., ...}],
      "series": ["observed.csv", ...],
      "proxy": {"strategy": "nearest", "overrides": {"LC01": "REF02"},
                "exclude_self_from_median": false},
      "thresholds": {"t_d": 72, "t_f": 120, ...},
      "output_dir": "out"
    }

Relative paths are resolved against the directory holding the config file.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from django.conf import settings

from ozone_network.exceptions import ConfigError
from alarms.forms import parse_thresholds
from alarms.thresholds import Thresholds
from proxies.forms import ProxySettingsForm, form_errors, parse_site
from proxies.selection import NEAREST
from proxies.sites import SiteRecord

logger = logging.getLogger(__name__)

KNOWN_KEYS = {'sites', 'series', 'proxy', 'thresholds', 'output_dir'}


@dataclass(frozen=True)
class NetworkConfig:
    sites: Tuple[SiteRecord, ...]
    strategy: str = NEAREST
    overrides: Dict[str, str] = field(default_factory=dict)
    exclude_self_from_median: bool = False
    thresholds: Thresholds = field(default_factory=Thresholds)
    series_paths: Tuple[Path, ...] = ()
    output_dir: Path = Path('out')

    def __post_init__(self):
        ids = [s.site_id for s in self.sites]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise ConfigError(f'duplicate site ids: {", ".join(duplicates)}')
        known = set(ids)
        for site_id, proxy_id in self.overrides.items():
            if site_id not in known:
                raise ConfigError(f'proxy override for unknown site {site_id!r}')
            if proxy_id not in known:
                raise ConfigError(f'proxy override {site_id} -> {proxy_id!r}: unknown proxy site')
            if proxy_id == site_id:
                raise ConfigError(f'proxy override {site_id}: a site cannot be its own proxy')

    @property
    def site_ids(self) -> List[str]:
        return [s.site_id for s in self.sites]

    def site(self, site_id: str) -> SiteRecord:
        for s in self.sites:
            if s.site_id == site_id:
                return s
        raise KeyError(site_id)

    def with_thresholds(self, **overrides) -> 'NetworkConfig':
        return NetworkConfig(
            sites=self.sites, strategy=self.strategy, overrides=self.overrides,
            exclude_self_from_median=self.exclude_self_from_median,
            thresholds=self.thresholds.updated(**overrides),
            series_paths=self.series_paths, output_dir=self.output_dir,
        )


def resolve_output_dir(configured: Optional[Path]) -> Path:
    override = getattr(settings, 'OZONE_OUTPUT_DIR', '')
    if override:
        return Path(override)
    return configured if configured is not None else Path('out')


def config_from_dict(data: dict, base_dir: Path = Path('.')) -> NetworkConfig:
    if not isinstance(data, dict):
        raise ConfigError('network config must be a JSON object')
    unknown = set(data) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f'unknown config keys: {", ".join(sorted(unknown))}')
    if not data.get('sites'):
        raise ConfigError('network config lists no sites')

    sites = tuple(parse_site(item) for item in data['sites'])

    proxy = dict(data.get('proxy') or {})
    overrides = proxy.pop('overrides', None) or {}
    if not isinstance(overrides, dict):
        raise ConfigError('proxy.overrides must map site ids to proxy site ids')
    form = ProxySettingsForm(proxy)
    if not form.is_valid():
        raise ConfigError(f'proxy: {form_errors(form)}')

    thresholds = parse_thresholds(data.get('thresholds') or {})
    series_paths = tuple(base_dir / p for p in data.get('series') or ())
    output_dir = data.get('output_dir')

    return NetworkConfig(
        sites=sites,
        strategy=form.cleaned_data['strategy'],
        overrides={str(k): str(v) for k, v in overrides.items()},
        exclude_self_from_median=form.cleaned_data['exclude_self_from_median'],
        thresholds=thresholds,
        series_paths=series_paths,
        output_dir=resolve_output_dir(base_dir / output_dir if output_dir else None),
    )


def load_network_config(path) -> NetworkConfig:
    path = Path(path)
    try:
        with open(path, encoding='utf-8') as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f'cannot read config {path}: {exc.strerror}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f'{path}, line {exc.lineno}, column {exc.colno}: {exc.msg}') from exc
    config = config_from_dict(data, path.parent)
    logger.info('loaded %s: %d sites, strategy %s', path, len(config.sites), config.strategy)
    return config


def config_to_dict(config: NetworkConfig, base_dir: Path = None) -> dict:
    """JSON form of ``config``; paths are written relative to ``base_dir`` when possible."""

    def rel(p: Path) -> str:
        if base_dir is not None:
            try:
                return Path(p).relative_to(base_dir).as_posix()
            except ValueError:
                pass
        return Path(p).as_posix()

    sites = []
    for s in config.sites:
        item = {'site_id': s.site_id, 'name': s.name, 'role': s.role,
                'latitude': s.latitude, 'longitude': s.longitude}
        for key in ('elevation', 'aadt_5km', 'land_use'):
            if getattr(s, key) is not None:
                item[key] = getattr(s, key)
        sites.append(item)
    return {
        'sites': sites,
        'series': [rel(p) for p in config.series_paths],
        'proxy': {
            'strategy': config.strategy,
            'overrides': dict(config.overrides),
            'exclude_self_from_median': config.exclude_self_from_median,
        },
        'thresholds': config.thresholds.as_dict(),
        'output_dir': rel(config.output_dir),
    }
