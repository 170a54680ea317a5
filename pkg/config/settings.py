"""
Django settings for the decorrelated multimodal hashing toolkit.

Every DMH_* value can be overridden from the environment or a .env file.
"""

from pathlib import Path
from decouple import Csv, config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = config('SECRET_KEY', default='django-insecure-local-toolkit-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',

    # Third-party apps
    'rest_framework',

    # Local apps
    'core',
    'hashing',
    'training',
    'codes',
    'evaluation',
    'geometry',
    'multimodal',
    'experiments',
]

# Nothing is persisted through the ORM; the database only satisfies Django's checks.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Django REST Framework Configuration (serializers and the JSON renderer only)
REST_FRAMEWORK = {
    'DEFAULT_RENDERER_CLASSES': (
        'rest_framework.renderers.JSONRenderer',
    ),
    'COERCE_DECIMAL_TO_STRING': False,
}

# Model and optimizer defaults
DMH_CODE_LENGTH = config('DMH_CODE_LENGTH', default=32, cast=int)
DMH_REGULARIZER = config('DMH_REGULARIZER', default='simplified')
DMH_GAMMA = config('DMH_GAMMA', default=0.001, cast=float)
DMH_LABEL_ALPHA = config('DMH_LABEL_ALPHA', default=10.0, cast=float)
DMH_VIEW_ALPHA = config('DMH_VIEW_ALPHA', default=1.0, cast=float)
DMH_LABEL_BETA = config('DMH_LABEL_BETA', default=255.0, cast=float)
DMH_BETA_TARGET = config('DMH_BETA_TARGET', default=255.0, cast=float)
DMH_KS = config('DMH_KS', default=0.003, cast=float)
DMH_KE = config('DMH_KE', default=0.0015, cast=float)
DMH_MAX_ITER = config('DMH_MAX_ITER', default=400, cast=int)
DMH_CONVERGENCE_RTOL = config('DMH_CONVERGENCE_RTOL', default=1e-5, cast=float)
DMH_SEED = config('DMH_SEED', default=0, cast=int)
DMH_WORKERS = config('DMH_WORKERS', default=1, cast=int)

# Evaluation defaults
DMH_RADIUS = config('DMH_RADIUS', default=2, cast=int)
DMH_TEST_FRACTION = config('DMH_TEST_FRACTION', default=0.05, cast=float)

# Synthetic data defaults
DMH_SYNTH_PER_CLASS = config('DMH_SYNTH_PER_CLASS', default=50, cast=int)
DMH_SYNTH_CLASSES = config('DMH_SYNTH_CLASSES', default=4, cast=int)
DMH_SYNTH_DIMS = config('DMH_SYNTH_DIMS', default='10,12', cast=Csv(int))
DMH_SYNTH_NOISE = config('DMH_SYNTH_NOISE', default=0.1, cast=float)

# Output
DMH_OUTPUT_DIR = config('DMH_OUTPUT_DIR', default=str(BASE_DIR / 'runs'))

# Logging Configuration
DMH_LOG_LEVEL = config('DMH_LOG_LEVEL', default='INFO')
DMH_LOG_FILE = config('DMH_LOG_FILE', default='')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
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
        'level': DMH_LOG_LEVEL,
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
    },
}

if DMH_LOG_FILE:
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': DMH_LOG_FILE,
        'formatter': 'verbose',
    }
    LOGGING['root']['handlers'].append('file')
