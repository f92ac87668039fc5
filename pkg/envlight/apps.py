import logging

from django.apps import AppConfig

logger = logging.getLogger(__name__)


class EnvlightConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'envlight'
    verbose_name = 'Environment light estimation'

    def ready(self):
        """
        Runs once Django has loaded the settings.
        Creates the data directory so commands can write outputs there by default.
        """
        import os

        from .config import envlight_setting

        data_dir = envlight_setting('DATA_DIR')
        if data_dir:
            try:
                os.makedirs(data_dir, exist_ok=True)
            except OSError as e:
                logger.warning(f"Cannot create data directory {data_dir}: {e}")
