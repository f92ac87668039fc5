#!/usr/bin/env python
"""
Entry point for the envlight toolkit.

Django's own commands (migrate, test, ...) and the envlight commands under
their Django names (gen_env) run through Django's dispatcher; the hyphenated
names (gen-env) go through envlight.cli so failures exit with the documented
codes.
"""
import os
import sys


def main():
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'lightsite.settings')
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError("Django is required: pip install -r requirements.txt") from exc

    from envlight.cli import COMMANDS, cli

    if len(sys.argv) > 1 and sys.argv[1] in COMMANDS:
        sys.exit(cli(sys.argv[1:]))
    execute_from_command_line(sys.argv)


if __name__ == '__main__':
    main()
