"""
Command-line entry point with the hyphenated command names.

``python -m envlight gen-env --lights 1 --seed 7 --out env.pfm`` is the same
as ``python manage.py gen_env ...``; this module only maps the name, runs the
management command and turns failures into exit codes.
"""
import json
import logging
import os
import sys
from typing import List, Optional, TextIO

logger = logging.getLogger(__name__)

COMMANDS = {
    'gen-scene': 'gen_scene',
    'gen-env': 'gen_env',
    'render': 'render',
    'estimate': 'estimate',
    'estimate-seq': 'estimate_seq',
    'eval': 'eval',
    'benchmark': 'benchmark',
    'sweep': 'sweep',
}


def usage() -> str:
    from .exceptions import EXIT_CODES_HELP

    names = ', '.join(COMMANDS)
    return f"usage: envlight <command> [options]\ncommands: {names}\n{EXIT_CODES_HELP}\n"


def cli(argv: Optional[List[str]] = None, stdout: Optional[TextIO] = None, stderr: Optional[TextIO] = None) -> int:
    """
    Run one envlight command.

    Args:
        argv: command name followed by its options (defaults to ``sys.argv[1:]``)
        stdout: stream for records (defaults to ``sys.stdout``)
        stderr: stream for error lines (defaults to ``sys.stderr``)

    Returns:
        int: process exit code
    """
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lightsite.settings')
    import django
    from django.core.management import load_command_class
    from django.core.management.base import CommandError

    from .exceptions import EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE

    argv = list(sys.argv[1:] if argv is None else argv)
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    if not argv or argv[0] in ('-h', '--help', 'help'):
        (stdout if argv else stderr).write(usage())
        return EXIT_OK if argv else EXIT_USAGE
    name = COMMANDS.get(argv[0], argv[0] if argv[0] in COMMANDS.values() else None)
    if name is None:
        stderr.write(f"error=usage exit={EXIT_USAGE} message={json.dumps(f'unknown command {argv[0]}')}\n")
        stderr.write(usage())
        return EXIT_USAGE

    django.setup()
    command = load_command_class('envlight', name)
    command._called_from_command_line = True
    parser = command.create_parser('envlight', argv[0])
    try:
        options = vars(parser.parse_args(argv[1:]))
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 after --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    args = options.pop('args', ())
    options.update(stdout=stdout, stderr=stderr, skip_checks=True)
    try:
        command.execute(*args, **options)
    except CommandError as exc:
        stderr.write(f"{exc}\n")
        return exc.returncode
    except Exception as exc:
        logger.exception(f"Command {argv[0]} failed")
        message = json.dumps(f"{type(exc).__name__}: {exc}")
        stderr.write(f"error=unexpected exit={EXIT_UNEXPECTED} message={message}\n")
        return EXIT_UNEXPECTED
    return EXIT_OK
