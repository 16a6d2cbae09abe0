"""
Management command: python manage.py gen

Generate one instance and write it as an LRL1 file.

Usage:
    python manage.py gen --config ms_sym.env --seed 7 --out runs/inst.lrl1
    python manage.py gen --set problem=mc-asym --set d1=30 --set s=0.5
    python manage.py gen --preset fig2-sym --seed 3
"""

import logging

from common.commands import LabCommand
from common.rng import make_streams
from recovery.services.instance_io import dump_instance
from recovery.services.params import (
    INSTANCE_PRESETS,
    INSTANCE_SCHEMA,
    SEED_SCHEMA,
    instance_preset_values,
    instance_spec_from,
)
from recovery.services.problem import ProblemError, generate_instance

logger = logging.getLogger(__name__)


class Command(LabCommand):
    help = 'Generate a matrix sensing / completion instance (LRL1 file)'
    schema = {**INSTANCE_SCHEMA, **SEED_SCHEMA}
    usage_errors = (ProblemError,)

    def add_arguments(self, parser):
        parser.add_argument(
            '--preset', metavar='NAME',
            help=f"Start from a named instance ({', '.join(INSTANCE_PRESETS)}); --config and --set still apply",
        )
        super().add_arguments(parser)

    def base_values(self, options) -> dict:
        if not options.get('preset'):
            return {}
        return instance_preset_values(options['preset'])

    def run(self, values, options):
        spec = instance_spec_from(values)
        inst = generate_instance(spec, make_streams(values['base_seed']).instance)
        path = self.output_path(options, 'instance.lrl1')
        size = dump_instance(inst, path)

        self.emit({
            'path': path,
            'bytes': size,
            'problem': inst.kind,
            'd1': inst.d1,
            'd2': inst.d2,
            'r': inst.r,
            'k': inst.k,
            'm': inst.m,
            'S_size': int(inst.noise.S.size),
            'St_size': int(inst.noise.St.size),
            't0': inst.noise.t0,
            'seed': values['base_seed'],
            'preset': options.get('preset'),
        })
        self.stderr.write(self.style.SUCCESS(f'✓ Wrote {inst.kind} instance to {path}'))
