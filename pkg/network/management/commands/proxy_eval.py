import pandas as pd
from django.core.management.base import BaseCommand, CommandError

from network.cli import (
    INPUT_ERROR, add_config_arguments, add_output_argument, add_threshold_arguments,
    command_errors, load_inputs, output_dir,
)
from network.series_io import write_table
from proxies.evaluation import SCORE_COLUMNS, evaluate_network
from reporting.charts import proxy_scores_svg


def score_frame(scores):
    rows = [{
        'site': s.site_id,
        'strategy': s.strategy,
        'proxy': s.proxy_site_id or '',
        'alarm_ks': s.alarm_fraction['ks'],
        'alarm_a0': s.alarm_fraction['a0'],
        'alarm_a1': s.alarm_fraction['a1'],
        'mab': s.mab,
        'r2': s.r2,
    } for s in scores if s.available]
    return pd.DataFrame(rows, columns=SCORE_COLUMNS)


class Command(BaseCommand):
    help = 'Score the proxy strategies on every reference site (leave-self-out)'

    def add_arguments(self, parser):
        add_config_arguments(parser)
        add_output_argument(parser)
        add_threshold_arguments(parser)

    def handle(self, *args, **options):
        with command_errors():
            config, series = load_inputs(options, with_thresholds=True)
            references = [s for s in config.sites if s.is_reference]
            if len(references) < 2:
                raise CommandError('proxy evaluation needs at least two reference sites', returncode=INPUT_ERROR)
            scores = evaluate_network(config.sites, series, config.thresholds)

        target = output_dir(options, config)
        frame = score_frame(scores)
        write_table(target / 'proxy_scores.csv', frame)
        proxy_scores_svg(scores, target / 'proxy_scores.svg')

        self.stdout.write(frame.to_string(index=False, float_format=lambda v: f'{v:.3f}', na_rep='-'))
        for score in scores:
            if not score.available:
                self.stdout.write(self.style.WARNING(f'{score.site_id}/{score.strategy}: {score.note}'))
        means = frame.groupby('strategy', sort=True)['mab'].mean()
        for strategy, mab in means.items():
            self.stdout.write(f'mean MAB {strategy}: {mab:.2f} ppb')
        self.stdout.write(self.style.SUCCESS(f'Wrote {len(frame)} scores to {target}'))
