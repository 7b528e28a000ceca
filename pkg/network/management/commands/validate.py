from django.core.management.base import BaseCommand

from network.cli import add_config_arguments, command_errors, load_inputs
from network.series_io import coverage_table


class Command(BaseCommand):
    help = 'Check a network config and its series files; print per-site coverage'

    def add_arguments(self, parser):
        add_config_arguments(parser)

    def handle(self, *args, **options):
        with command_errors():
            config, series = load_inputs(options, with_thresholds=False)

        self.stdout.write(f'{len(config.sites)} sites configured, {len(series)} sites with data')
        self.stdout.write(coverage_table(series).to_string(index=False, float_format=lambda v: f'{v:.1f}'))

        known = set(config.site_ids)
        for site_id in sorted(set(series) - known):
            self.stdout.write(self.style.WARNING(f'{site_id}: series present but site not in config'))
        for site_id in sorted(known - set(series)):
            self.stdout.write(self.style.WARNING(f'{site_id}: configured but no series data'))
        self.stdout.write(self.style.SUCCESS('Inputs are valid'))
