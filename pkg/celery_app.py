# celery_app.py
from celery import Celery

celery_app = Celery('quantum_feedback')

# Configuration lives in celery_config.py
celery_app.config_from_object('celery_config')
