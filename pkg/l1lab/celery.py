"""
Celery configuration for l1lab.

Workers run sweep jobs dispatched by the sweep and preset commands.
"""

import os

from celery import Celery

# Set the default Django settings module
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'l1lab.settings')

app = Celery('l1lab')

# Load configuration from Django settings with CELERY namespace
app.config_from_object('django.conf:settings', namespace='CELERY')

# Auto-discover tasks in all installed apps
app.autodiscover_tasks()
