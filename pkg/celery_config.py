# celery_config.py
import os

from dotenv import load_dotenv

load_dotenv()

broker_url = os.getenv('CELERY_BROKER_URL', 'redis://127.0.0.1:6379/0')
result_backend = os.getenv('CELERY_RESULT_BACKEND', broker_url)

imports = (
    'quantum_feedback.tasks',
)

worker_log_file = 'celery_worker.log'
worker_log_level = os.getenv('QFB_LOG_LEVEL', 'INFO')
task_serializer = 'json'
result_serializer = 'json'
accept_content = ['json']

# Capacity searches are long and CPU bound
worker_prefetch_multiplier = 1
task_acks_late = True
