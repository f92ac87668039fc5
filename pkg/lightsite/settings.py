"""
Django settings for the lightsite project.

All envlight defaults live in the ``ENVLIGHT`` dict below. A ``.env`` file at
the project root (or the process environment) may override the seed, the log
level and the data directory.
"""
import os
from pathlib import Path

from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

load_dotenv(BASE_DIR / '.env')

SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'envlight-local-only-key')
DEBUG = os.environ.get('DJANGO_DEBUG', '0') == '1'
ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'envlight.apps.EnvlightConfig',
]


# Database

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

TIME_ZONE = 'UTC'
USE_TZ = True


# Envlight defaults

ENVLIGHT = {
    'SEED': int(os.environ.get('ENVLIGHT_SEED', '0')),
    'DATA_DIR': os.environ.get('ENVLIGHT_DATA_DIR', str(BASE_DIR / 'data')),
    'CROP': 384,
    'CUBE_FACE_RES': 8,
    'IRRADIANCE_RES': 32,
    'ENV_WIDTH': 256,
    'ENV_HEIGHT': 128,
    'TEMPORAL_ALPHA': 0.3,
    'SOLVER': {
        'lambda': 1e-3,
        'max_iter': 500,
        'tol': 1e-6,
        'nonneg': True,
    },
    'FUSION': {
        'spec_weight_at_full_count': 0.8,
        'count_saturation': 1,
        'gain_sigma_deg': 10.0,
        'splat_sigma_deg': 2.0,
        'gain_fit': True,
    },
    'RENDER': {
        'light_face_res': 16,
        'specular_samples': 64,
    },
    'BENCHMARK_BUDGET_MS': 2000.0,
}


# Logging

ENVLIGHT_LOG_LEVEL = os.environ.get('ENVLIGHT_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'envlight': {
            'handlers': ['console'],
            'level': ENVLIGHT_LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Celery Configuration
# Filesystem broker and backend, no external services needed
CELERY_BROKER_URL = 'filesystem://'
CELERY_RESULT_BACKEND = 'file:///tmp/envlight_celery/results'
CELERY_BROKER_TRANSPORT_OPTIONS = {
    'data_folder_in': '/tmp/envlight_celery/in',
    'data_folder_out': '/tmp/envlight_celery/out',
    'data_folder_processed': '/tmp/envlight_celery/processed',
}
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TASK_TRACK_STARTED = True
CELERY_TASK_TIME_LIMIT = 60 * 60  # 1 hour
