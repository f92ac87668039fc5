"""
Shared plumbing for the envlight management commands: error translation to
exit codes and the configuration options every estimating command accepts.
"""
import logging

from django.core.management.base import BaseCommand, CommandError
from pydantic import ValidationError

from ..config import load_run_config
from ..exceptions import EXIT_CODES_HELP, ContractViolation, EnvlightError, InputFileError
from ..formats import format_record

logger = logging.getLogger(__name__)


class EnvlightCommand(BaseCommand):
    """
    Base command whose failures become one ``error=<kind> exit=<code> message=...`` line.
    """
    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)
        parser.epilog = EXIT_CODES_HELP
        return parser

    def execute(self, *args, **options):
        try:
            return super().execute(*args, **options)
        except EnvlightError as e:
            raise CommandError(e.record(), returncode=e.exit_code) from e
        except ValidationError as e:
            error = ContractViolation(str(e).replace("\n", " "))
            raise CommandError(error.record(), returncode=error.exit_code) from e
        except OSError as e:
            error = InputFileError(str(e))
            raise CommandError(error.record(), returncode=error.exit_code) from e

    def add_config_arguments(self, parser):
        parser.add_argument('--config', help='RunConfig YAML file')
        parser.add_argument('--seed', type=int, help='Random seed (overrides the config)')
        parser.add_argument('--crop', type=int,
                            help='Central crop size in pixels (default: the configured crop, capped to the frame)')
        parser.add_argument('--mode', choices=['full', 'diffuse-only', 'specular-only', 'no-decomposition'],
                            help='Estimation path (overrides the config)')

    def run_config(self, options, **overrides):
        return load_run_config(options.get('config'), seed=options.get('seed'), crop=options.get('crop'),
                               mode=options.get('mode'), **overrides)

    def emit(self, record):
        """Write a metrics/status record as key=value lines."""
        self.stdout.write(format_record(record))
