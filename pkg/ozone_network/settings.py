"""
Django settings for the ozone_network project.

The project has no web surface and no database: Django provides the app
registry, the management-command CLI, form validation for configuration
files and the test runner.

For more information on this file, see
https://docs.djangoproject.com/en/5.0/topics/settings/
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Management commands never serve requests; the key only satisfies Django's checks.
SECRET_KEY = config('SECRET_KEY', default='ozone-network-cli-only-not-secret')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'timeseries',
    'distribution',
    'calibration',
    'alarms',
    'proxies',
    'reporting',
    'simulator',
    'network',
]

# All state lives in CSV/JSON files.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Network processing

# Overrides the output_dir of a network config when set.
OZONE_OUTPUT_DIR = config('OZONE_OUTPUT_DIR', default='')

# Thread pool size for per-site pipelines; 1 runs sites serially.
OZONE_MAX_WORKERS = config('OZONE_MAX_WORKERS', default=1, cast=int)

# Fixed salt keeps matplotlib SVG element ids stable between runs.
OZONE_CHART_HASH_SALT = config('OZONE_CHART_HASH_SALT', default='ozone-network')

OZONE_LOG_LEVEL = config('OZONE_LOG_LEVEL', default='INFO')


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': OZONE_LOG_LEVEL,
            'propagate': False,
        }
        for app in INSTALLED_APPS
    },
}
