import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from ozone_network.exceptions import ConfigError
from network.cli import INPUT_ERROR, command_errors
from network.config import NetworkConfig, config_to_dict
from network.series_io import write_series
from simulator.generators import run_scenario
from simulator.scenario import scenario_from_dict


def write_json(path: Path, data: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write('\n')


class Command(BaseCommand):
    help = 'Generate a synthetic network with known truth from a scenario file'

    def add_arguments(self, parser):
        parser.add_argument('scenario', help='scenario config (JSON)')
        parser.add_argument('--output-dir', required=True, help='directory for the generated files')

    def handle(self, *args, **options):
        target = Path(options['output_dir'])
        with command_errors():
            try:
                with open(options['scenario'], encoding='utf-8') as fh:
                    data = json.load(fh)
            except OSError as exc:
                raise CommandError(f'cannot read scenario: {exc}', returncode=INPUT_ERROR)
            except json.JSONDecodeError as exc:
                raise ConfigError(f'{options["scenario"]}, line {exc.lineno}: {exc.msg}')
            scenario = scenario_from_dict(data)
            output = run_scenario(scenario)

        write_series(target / 'observed.csv', output.observed.values())
        write_series(target / 'truth.csv', output.truth.values())
        write_json(target / 'manifest.json', output.manifest)

        # A ready-to-run network config over the observed series.
        network = NetworkConfig(
            sites=tuple(spec.record for spec in scenario.sites),
            strategy=scenario.proxy_strategy,
            series_paths=(target / 'observed.csv',),
            output_dir=target / 'out',
        )
        write_json(target / 'network.json', config_to_dict(network, target))

        self.stdout.write(f'seed {scenario.seed}, config hash {output.manifest["config_hash"][:12]}')
        self.stdout.write(self.style.SUCCESS(
            f'Simulated {len(scenario.sites)} sites over {scenario.duration} hours into {target}'
        ))
