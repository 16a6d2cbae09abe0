"""
Shared plumbing for the lab management commands: the common flags, run
config loading and the mapping from domain errors to exit codes.
"""

import json
import logging
import os

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from common.formatting import dumps_json
from common.run_config import RunConfigError, load_run_config, resolve_base_seed

logger = logging.getLogger(__name__)

USAGE_EXIT = 2
RUNTIME_EXIT = 1


class LabCommand(BaseCommand):
    """
    Subclasses declare ``schema`` (key -> Param) and implement ``run``.
    Exit code 0 only when every artifact was written.
    """
    schema = {}
    usage_errors = ()

    def add_arguments(self, parser):
        parser.add_argument('--config', help='key=value run config file')
        parser.add_argument('--seed', type=int, help='Base seed (beats LRL1_SEED and the config file)')
        parser.add_argument('--out', help='Output path or directory')
        parser.add_argument('--jobs', type=int, help='Worker processes')
        parser.add_argument('--plot', action='store_true', help='Also write SVG plots')
        parser.add_argument('--format', choices=['csv', 'json'], default='json', help='Report format')
        parser.add_argument(
            '--set', action='append', default=[], metavar='KEY=VALUE',
            help='Override one config entry (repeatable)',
        )

    def load_config(self, options) -> dict:
        overrides = {}
        for item in options.get('set') or []:
            key, sep, value = item.partition('=')
            if not sep:
                raise RunConfigError(f"--set expects KEY=VALUE, got '{item}'", key=item)
            overrides[key.strip()] = value.strip()
        values = load_run_config(self.schema, options.get('config'), overrides, base=self.base_values(options))
        values['base_seed'] = resolve_base_seed(options.get('seed'), values.get('seed'))
        values['jobs'] = options.get('jobs') or settings.LAB_DEFAULT_JOBS
        return values

    def base_values(self, options) -> dict:
        """Values sitting between the schema defaults and the config file."""
        return {}

    def output_path(self, options, default_name: str) -> str:
        out = options.get('out')
        if out:
            return out
        return os.path.join(settings.LAB_OUTPUT_DIR, default_name)

    def emit(self, payload):
        self.stdout.write(dumps_json(payload))

    def handle(self, *args, **options):
        try:
            values = self.load_config(options)
            return self.run(values, options)
        except CommandError:
            raise
        except RunConfigError as e:
            raise CommandError(str(e), returncode=USAGE_EXIT)
        except self.usage_errors as e:
            raise CommandError(str(e), returncode=USAGE_EXIT)
        except (OSError, json.JSONDecodeError) as e:
            logger.error(f"{self.__module__} failed: {e}", exc_info=True)
            raise CommandError(str(e), returncode=RUNTIME_EXIT)

    def run(self, values: dict, options: dict):
        raise NotImplementedError
