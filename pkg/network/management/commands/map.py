from django.core.management.base import BaseCommand, CommandError

from ozone_network.exceptions import InsufficientData
from network.cli import (
    INPUT_ERROR, add_config_arguments, add_output_argument, add_threshold_arguments,
    command_errors, load_inputs, output_dir,
)
from network.pipeline import site_values_at
from network.series_io import write_table
from reporting.charts import heatmap_svg
from reporting.grid import BoundingBox, grid_frame, idw_grid
from timeseries.series import parse_timestamp


class Command(BaseCommand):
    help = 'Interpolate corrected site values at one hour onto a grid (IDW)'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        add_output_argument(parser)
        add_threshold_arguments(parser)
        parser.add_argument('--hour', required=True, help='hour to map, YYYY-MM-DDTHH:00:00Z')
        parser.add_argument('--bbox', required=True, help='lat_min,lat_max,lon_min,lon_max')
        parser.add_argument('--cell', type=float, required=True, help='cell size in degrees')
        parser.add_argument('--power', type=float, default=2.0, help='IDW distance power (default 2)')
        parser.add_argument('--compare', action='store_true',
                            help='also map reference sites alone, side by side with the full network')

    def panels(self, config, values, bbox, options):
        layers = [('full network', values)]
        if options['compare']:
            references = {k: v for k, v in values.items() if config.site(k).is_reference}
            layers.insert(0, ('reference only', references))
        panels = []
        for title, layer in layers:
            sites = [(config.site(k).latitude, config.site(k).longitude, v) for k, v in sorted(layer.items())]
            if not sites:
                raise InsufficientData(f'no {title} sites reporting')
            panels.append((title, idw_grid(sites, bbox, options['cell'], options['power']), sites))
        return panels

    def handle(self, *args, **options):
        try:
            hour = parse_timestamp(options['hour'])
            bbox = BoundingBox.parse(options['bbox'])
        except ValueError as exc:
            raise CommandError(str(exc), returncode=INPUT_ERROR)
        if options['cell'] <= 0:
            raise CommandError('cell size must be positive', returncode=INPUT_ERROR)

        with command_errors():
            config, series = load_inputs(options, with_thresholds=True)
            target = output_dir(options, config)
            try:
                values = site_values_at(config, series, hour, target)
                panels = self.panels(config, values, bbox, options)
            except InsufficientData as exc:
                raise CommandError(f'no data at {options["hour"]}: {exc}', returncode=INPUT_ERROR)

        stamp = options['hour'].replace('-', '').replace(':', '')
        for title, grid, _ in panels:
            write_table(target / 'maps' / f'{stamp}_{title.replace(" ", "_")}.csv', grid_frame(grid))
        heatmap_svg(panels, target / 'maps' / f'{stamp}.svg')
        self.stdout.write(f'{len(values)} sites reporting at {options["hour"]}')
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(panels)} map(s) into {target / "maps"}'))
