"""
SVG figures for reports: control charts, proxy score bars and IDW heat maps.

Output is byte-stable for identical input: the SVG hash salt is fixed from
settings and the date metadata is dropped.
"""

from pathlib import Path
from typing import List, Sequence, Tuple

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from django.conf import settings  # noqa: E402

from alarms.ledger import ChartRow  # noqa: E402
from alarms.thresholds import Thresholds  # noqa: E402
from reporting.grid import GridField  # noqa: E402

SVG_METADATA = {'Date': None}


def _save(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({'svg.hashsalt': settings.OZONE_CHART_HASH_SALT}):
        fig.savefig(path, format='svg', metadata=SVG_METADATA)
    plt.close(fig)
    return path


def control_chart_svg(site_id: str, rows: Sequence[ChartRow], th: Thresholds, path: Path) -> Path:
    """p_KS, a0 and a1 (raw and trend) with their limits, plus the alarm sum."""
    hours = np.array([r.timestamp for r in rows], dtype=np.float64)
    elapsed_days = (hours - hours[0]) / 24.0 if hours.size else hours
    col = {name: np.array([getattr(r, name) for r in rows], dtype=np.float64)
           for name in ('p_ks', 'a0_raw', 'a0_trend', 'a1_raw', 'a1_trend')}
    alarm_sum = np.array([r.alarm_sum for r in rows])

    fig, axes = plt.subplots(4, 1, figsize=(9, 9), sharex=True)
    axes[0].plot(elapsed_days, col['p_ks'], lw=0.6, color='tab:gray')
    axes[0].axhline(th.p_ks_min, color='tab:red', ls='--', lw=0.8)
    axes[0].set_yscale('log')
    axes[0].set_ylabel('p KS')

    for ax, name, low, high in ((axes[1], 'a0', th.a0_low, th.a0_high),
                                (axes[2], 'a1', th.a1_low, th.a1_high)):
        ax.plot(elapsed_days, col[f'{name}_raw'], lw=0.6, color='tab:gray', label='raw')
        ax.plot(elapsed_days, col[f'{name}_trend'], lw=1.2, color='tab:blue', label='trend')
        ax.axhline(low, color='tab:red', ls='--', lw=0.8)
        ax.axhline(high, color='tab:red', ls='--', lw=0.8)
        ax.set_ylabel(f'{name} hat')
    axes[1].legend(loc='upper right', fontsize='small')

    axes[3].step(elapsed_days, alarm_sum, where='post', color='black', lw=0.8)
    axes[3].set_ylim(-0.2, 3.2)
    axes[3].set_ylabel('alarms')
    axes[3].set_xlabel('days since commencement')
    fig.suptitle(f'Control chart: {site_id}')
    return _save(fig, path)


def proxy_scores_svg(scores, path: Path) -> Path:
    """Grouped bars of alarm % per test for each (site, strategy), MAB annotated."""
    available = [s for s in scores if s.available]
    labels = [f'{s.site_id}\n{s.strategy}' for s in available]
    x = np.arange(len(available))
    width = 0.27

    fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(available) + 2), 4.5))
    for offset, (test, color) in zip((-width, 0.0, width),
                                     (('ks', 'tab:purple'), ('a0', 'tab:orange'), ('a1', 'tab:green'))):
        heights = [100.0 * s.alarm_fraction[test] for s in available]
        ax.bar(x + offset, heights, width, label=f'{test} alarm %', color=color)
    for xi, score in zip(x, available):
        ax.annotate(f'{score.mab:.1f} ppb', (xi, 101), ha='center', fontsize='x-small')
    ax.set_xticks(x)
    ax.set_xticklabels(labels, fontsize='x-small')
    ax.set_ylim(0, 110)
    ax.set_ylabel('% of time in alarm')
    ax.legend(fontsize='small')
    fig.tight_layout()
    return _save(fig, path)


def heatmap_svg(panels: List[Tuple[str, GridField, Sequence[Tuple[float, float, float]]]],
                path: Path) -> Path:
    """One heat map per panel with the contributing sites overlaid."""
    vmin = min(float(p[1].values.min()) for p in panels)
    vmax = max(float(p[1].values.max()) for p in panels)
    if vmax <= vmin:
        vmax = vmin + 1.0
    fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4.5), squeeze=False)
    image = None
    for ax, (title, grid, sites) in zip(axes[0], panels):
        b = grid.bbox
        image = ax.imshow(grid.values, origin='lower', extent=(b.lon_min, b.lon_max, b.lat_min, b.lat_max),
                          vmin=vmin, vmax=vmax, cmap='viridis', aspect='auto')
        if sites:
            lat, lon, _ = zip(*sites)
            ax.scatter(lon, lat, s=12, c='white', edgecolors='black', linewidths=0.5)
        ax.set_title(title)
        ax.set_xlabel('longitude')
        ax.set_ylabel('latitude')
    fig.colorbar(image, ax=axes[0].tolist(), label='O3 / ppb')
    return _save(fig, path)
