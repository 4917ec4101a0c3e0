# uagc/settings.py
from pathlib import Path
from decouple import Csv, config
import dj_database_url

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-change-me')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'uagc.apps.core',
]

# Database
DATABASES = {
    'default': dj_database_url.config(
        default=config('DATABASE_URL', default=f"sqlite:///{BASE_DIR / 'uagc.sqlite3'}")
    )
}

# Internationalization
LANGUAGE_CODE = 'pt-br'
TIME_ZONE = 'America/Sao_Paulo'
USE_I18N = True
USE_TZ = True

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Logging
LOG_LEVEL = config('UAGC_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'default': {
            'format': '%(asctime)s - %(levelname)s - %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'default',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': LOG_LEVEL,
    },
}

# Pipeline defaults (flags of the management commands override these)
UAGC_SIGMA_MILES = config('UAGC_SIGMA_MILES', default=5.0, cast=float)
UAGC_KAPPA_MILES = config('UAGC_KAPPA_MILES', default=80.0, cast=float)
UAGC_CELL_MILES = config('UAGC_CELL_MILES', default=2.0, cast=float)
UAGC_PADDING_MILES = config('UAGC_PADDING_MILES', default=2.0, cast=float)
UAGC_FREEWAY_COEFFS = config('UAGC_FREEWAY_COEFFS', default='1.0,0.9,0.8', cast=Csv(float))
UAGC_REPETITIONS = config('UAGC_REPETITIONS', default=5, cast=int)
UAGC_SEED = config('UAGC_SEED', default=0, cast=int)
UAGC_THREADS = config('UAGC_THREADS', default=1, cast=int)

UAGC_ACTIVITY_SIGMA_BINS = config('UAGC_ACTIVITY_SIGMA_BINS', default=2.0, cast=float)

UAGC_HIDDEN_DIM = config('UAGC_HIDDEN_DIM', default=64, cast=int)
UAGC_HORIZON_P = config('UAGC_HORIZON_P', default=12, cast=int)
UAGC_HORIZON_Q = config('UAGC_HORIZON_Q', default=12, cast=int)
UAGC_BATCH_SIZE = config('UAGC_BATCH_SIZE', default=32, cast=int)
UAGC_LEARNING_RATE = config('UAGC_LEARNING_RATE', default=0.01, cast=float)
UAGC_PATIENCE = config('UAGC_PATIENCE', default=5, cast=int)
UAGC_LR_PATIENCE = config('UAGC_LR_PATIENCE', default=2, cast=int)
UAGC_LR_FACTOR = config('UAGC_LR_FACTOR', default=0.1, cast=float)
UAGC_MAX_EPOCHS = config('UAGC_MAX_EPOCHS', default=100, cast=int)
