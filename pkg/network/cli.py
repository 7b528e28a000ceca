"""Argument and error handling shared by the management commands."""

import logging
from contextlib import contextmanager
from pathlib import Path

from django.core.management.base import CommandError

from ozone_network.exceptions import ConfigError, OzoneNetworkError, SeriesFormatError
from network.config import load_network_config
from network.series_io import read_series

logger = logging.getLogger(__name__)

INPUT_ERROR = 1
RUNTIME_FAILURE = 2

# CLI flag -> Thresholds field
THRESHOLD_FLAGS = {
    'td_hours': 't_d',
    'tf_hours': 't_f',
    'alarm_count': 'correction_alarm_count',
    'completeness_min': 'completeness_min',
}


def add_config_arguments(parser):
    parser.add_argument('config', help='network config (JSON)')
    parser.add_argument('--series', nargs='+', metavar='CSV',
                        help='series files; defaults to the files listed in the config')


def add_output_argument(parser):
    parser.add_argument('--output-dir', help='output directory (overrides the config and OZONE_OUTPUT_DIR)')


def add_threshold_arguments(parser):
    parser.add_argument('--td-hours', type=int, help='window length t_d in hours')
    parser.add_argument('--tf-hours', type=int, help='persistence t_f in hours')
    parser.add_argument('--alarm-count', type=int, help='latched alarms needed before correcting')
    parser.add_argument('--completeness-min', type=float, help='minimum window completeness (0-1)')


def threshold_overrides(options):
    return {field: options.get(flag) for flag, field in THRESHOLD_FLAGS.items() if options.get(flag) is not None}


@contextmanager
def command_errors():
    """Input problems exit 1; anything else the framework raises exits 2."""
    try:
        yield
    except (ConfigError, SeriesFormatError) as exc:
        raise CommandError(str(exc), returncode=INPUT_ERROR)
    except OzoneNetworkError as exc:
        logger.error('run failed: %s', exc)
        raise CommandError(str(exc), returncode=RUNTIME_FAILURE)


def load_inputs(options, with_thresholds=False):
    """Config (with any threshold flags applied) and its hourly series."""
    config = load_network_config(options['config'])
    if with_thresholds:
        config = config.with_thresholds(**threshold_overrides(options))
    paths = [Path(p) for p in options['series']] if options.get('series') else list(config.series_paths)
    if not paths:
        raise ConfigError('no series files given on the command line or in the config')
    return config, read_series(paths)


def output_dir(options, config):
    if options.get('output_dir'):
        return Path(options['output_dir'])
    return config.output_dir
