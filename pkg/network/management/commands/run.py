from django.core.management.base import BaseCommand, CommandError

from network.cli import (
    RUNTIME_FAILURE, add_config_arguments, add_output_argument, add_threshold_arguments,
    command_errors, load_inputs, output_dir,
)
from network.pipeline import chart_path, run_network, summary_frame
from reporting.charts import control_chart_svg


class Command(BaseCommand):
    help = 'Monitor and correct every low-cost sensor against its proxy'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        add_output_argument(parser)
        add_threshold_arguments(parser)
        parser.add_argument('--charts', action='store_true', help='also draw an SVG control chart per site')
        parser.add_argument('--workers', type=int, help='sites processed in parallel (default OZONE_MAX_WORKERS)')

    def handle(self, *args, **options):
        with command_errors():
            config, series = load_inputs(options, with_thresholds=True)
            target = output_dir(options, config)
            runs = run_network(config, series, target, options.get('workers'))

        if options['charts']:
            # pyplot is not thread-safe; draw after the workers are done.
            for run in runs:
                if run.ok:
                    control_chart_svg(run.site_id, run.result.ledger.history, config.thresholds,
                                      chart_path(target, run.site_id, 'svg'))

        frame = summary_frame(runs)
        self.stdout.write(frame.to_string(index=False, float_format=lambda v: f'{v:.1f}'))
        failed = [run for run in runs if not run.ok]
        for run in failed:
            self.stdout.write(self.style.ERROR(f'{run.site_id}: {run.summary.failure}'))
        if runs and len(failed) == len(runs):
            raise CommandError('no site could be processed', returncode=RUNTIME_FAILURE)
        self.stdout.write(self.style.SUCCESS(
            f'Processed {len(runs) - len(failed)} of {len(runs)} sites into {target}'
        ))
