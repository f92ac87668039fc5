import os

from celery import Celery
from celery.signals import before_task_publish, worker_init

# Set default Django settings module
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lightsite.settings')

app = Celery('lightsite')

# Load configuration from Django settings
app.config_from_object('django.conf:settings', namespace='CELERY')

# Auto-discover tasks in all installed apps
app.autodiscover_tasks()


@worker_init.connect
@before_task_publish.connect
def ensure_broker_folders(**kwargs):
    """Create the folders used by the filesystem broker and result backend."""
    from django.conf import settings

    for folder in settings.CELERY_BROKER_TRANSPORT_OPTIONS.values():
        os.makedirs(folder, exist_ok=True)
    os.makedirs(settings.CELERY_RESULT_BACKEND.replace('file://', ''), exist_ok=True)
