"""
Django settings for the serverlab project.

The only HTTP surface is the admin; Django provides configuration, logging, the ORM for
stored experiment records, management commands and the test runner.
"""

import os
from pathlib import Path
from decouple import config
import dj_database_url

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='django-insecure-serverlab-local-key')

DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1').split(',')


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',

    # Local apps
    'metrics.apps.MetricsConfig',
    'engine.apps.EngineConfig',
    'policies.apps.PoliciesConfig',
    'offline.apps.OfflineConfig',
    'adversaries.apps.AdversariesConfig',
    'reductions.apps.ReductionsConfig',
    'analysis.apps.AnalysisConfig',
    'lab.apps.LabConfig',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
]

ROOT_URLCONF = 'serverlab.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]


# Database

DATABASES = {
    'default': dj_database_url.config(
        default=config('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}"),
    )
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (admin assets)

STATIC_URL = 'static/'
STATIC_ROOT = os.path.join(BASE_DIR, 'staticfiles')

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Simulation lab

# Comparison tolerance for real coordinates
SERVERLAB_TOLERANCE = config('SERVERLAB_TOLERANCE', default=1e-9, cast=float)

# Oracle costs are scaled to integers by this factor
SERVERLAB_COST_SCALE = config('SERVERLAB_COST_SCALE', default=1_000_000_000, cast=int)

SERVERLAB_ORACLE_MAX_REQUESTS = config('SERVERLAB_ORACLE_MAX_REQUESTS', default=2000, cast=int)
SERVERLAB_FLOW_MAX_REQUESTS = config('SERVERLAB_FLOW_MAX_REQUESTS', default=2000, cast=int)
SERVERLAB_WFA_MAX_POINTS = config('SERVERLAB_WFA_MAX_POINTS', default=16, cast=int)

# Default request budget for engine runs
SERVERLAB_MAX_REQUESTS = config('SERVERLAB_MAX_REQUESTS', default=1_000_000, cast=int)

# "Request until covered" loops stop after CAP_FACTOR * k * N requests
SERVERLAB_CAP_FACTOR = config('SERVERLAB_CAP_FACTOR', default=10, cast=int)

SERVERLAB_VERIFY_WORKERS = config('SERVERLAB_VERIFY_WORKERS', default=4, cast=int)
SERVERLAB_OUTPUT_DIR = config('SERVERLAB_OUTPUT_DIR', default=str(BASE_DIR / 'output'))


# Logging configuration
LOG_DIR = os.path.join(BASE_DIR, 'logs')
os.makedirs(LOG_DIR, exist_ok=True)

LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
        'file': {
            'class': 'logging.FileHandler',
            'filename': os.path.join(LOG_DIR, 'serverlab.log'),
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console', 'file'],
            'level': 'INFO',
            'propagate': True,
        },
        **{
            app: {
                'handlers': ['console', 'file'],
                'level': LOG_LEVEL,
                'propagate': False,
            }
            for app in (
                'metrics', 'engine', 'policies', 'offline',
                'adversaries', 'reductions', 'analysis', 'lab',
            )
        },
    },
}
