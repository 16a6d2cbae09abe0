"""Configure Django before pytest collects the Django-based test modules."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'l1lab.settings')
django.setup()
