"""
Management command: python manage.py preset <name>

Run one of the canned experiment suites: fig1, fig2-sym, fig2-asym, table1.

Usage:
    python manage.py preset fig1 --out runs/fig1 --jobs 8 --plot
    python manage.py preset table1 --set trials=5
"""

import logging

from common.commands import LabCommand
from common.run_config import Param
from landscape.services.classify import ClassifyError
from landscape.services.presets import PRESETS, PresetError, get_preset, run_preset
from recovery.services.params import SEED_SCHEMA
from recovery.services.problem import ProblemError

logger = logging.getLogger(__name__)


class Command(LabCommand):
    help = 'Run a canned experiment suite'
    schema = {
        **SEED_SCHEMA,
        'trials': Param(int, None, 'Seeds per suite (preset default when unset)'),
    }
    usage_errors = (PresetError, ProblemError, ClassifyError)

    def add_arguments(self, parser):
        parser.add_argument('name', choices=sorted(PRESETS), help='Preset name')
        super().add_arguments(parser)

    def run(self, values, options):
        preset = get_preset(options['name'], trials=values['trials'])
        out = self.output_path(options, preset.name)
        summary = run_preset(preset, out, base_seed=values['base_seed'], jobs=values['jobs'], plot=options['plot'])

        self.emit({
            'preset': preset.name,
            'out': out,
            'solves': [
                {'label': s['label'], 'convergence_frequency': s['convergence_frequency']}
                for s in summary['solves']
            ],
            'sweeps': sorted(summary['sweeps']),
        })
        self.stderr.write(self.style.SUCCESS(f'✓ Preset {preset.name} written to {out}'))
