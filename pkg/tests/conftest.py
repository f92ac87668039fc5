"""
pytest wiring: create Django's test database as ``manage.py test`` does.
"""
import pytest
from django.test.runner import DiscoverRunner


@pytest.fixture(scope='session', autouse=True)
def django_test_databases():
    runner = DiscoverRunner(verbosity=0, interactive=False)
    runner.setup_test_environment()
    old_config = runner.setup_databases()
    yield
    runner.teardown_databases(old_config)
    runner.teardown_test_environment()
