"""
Test suite. Run with ``python manage.py test tests``.

Acceptance suites run reduced case counts by default; set
``ENVLIGHT_FULL_ACCEPTANCE=1`` for the full counts.
"""
import os
import sys

import django

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lightsite.settings')
django.setup()
