from pathlib import Path
import os
from dotenv import load_dotenv
import dj_database_url
from decouple import config


BASE_DIR = Path(__file__).resolve().parent.parent
load_dotenv(BASE_DIR / '.env')

SECRET_KEY = config('SECRET_KEY', default='neurogenese-local-only')
DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'core',
]

if os.environ.get('DATABASE_URL'):
    DATABASES = {
        'default': dj_database_url.config(
            default=os.environ.get('DATABASE_URL'),
            conn_max_age=600,
        )
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / 'db.sqlite3',
        }
    }

LANGUAGE_CODE = 'pt-br'

TIME_ZONE = 'America/Sao_Paulo'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

NEUROGEN = {
    'DATA_DIR': config('NEUROGEN_DATA_DIR', default=''),
    'OUT_DIR': config('NEUROGEN_OUT_DIR', default=str(BASE_DIR / 'out')),
    'SEED': config('NEUROGEN_SEED', default=0, cast=int),
    'LEARNING_RATE': config('NEUROGEN_LEARNING_RATE', default=0.01, cast=float),
    'MAX_CYCLES': config('NEUROGEN_MAX_CYCLES', default=30, cast=int),
    'PATIENCE': config('NEUROGEN_PATIENCE', default=20, cast=int),
    'PRIMING_CYCLES': config('NEUROGEN_PRIMING_CYCLES', default=11, cast=int),
    'SCALING_FACTOR': config('NEUROGEN_SCALING_FACTOR', default=1.0, cast=float),
    'MAX_ANG_ITERATIONS': config('NEUROGEN_MAX_ANG_ITERATIONS', default=5, cast=int),
    'EVAL_CHUNK': config('NEUROGEN_EVAL_CHUNK', default=500, cast=int),
    'VALIDATION_COUNT': config('NEUROGEN_VALIDATION_COUNT', default=3000, cast=int),
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'console': {
            'format': '[%(levelname)s] %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'console',
        },
    },
    'loggers': {
        'core': {
            'handlers': ['console'],
            'level': config('NEUROGEN_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}
