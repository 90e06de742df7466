# Entry point for the Celery worker: `celery -A worker.celery_app worker`.
#
# Task modules are not imported here; discovery goes through the `imports`
# tuple in celery_config.py.

from celery_app import celery_app
