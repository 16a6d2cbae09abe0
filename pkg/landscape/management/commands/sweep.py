"""
Management command: python manage.py sweep

Phase sweep over a grid of sample sizes; restartable from its own output.

Usage:
    python manage.py sweep --config sweep.env --out runs/phase --jobs 8 --plot
    python manage.py sweep --set problem=ms-asym --set grid=20,150,3600 --set solution_kinds=balanced,imbalanced
"""

import logging

from common.commands import LabCommand
from landscape.services.classify import ClassifyError
from landscape.services.params import CLASSIFIER_SCHEMA, SWEEP_SCHEMA, classifier_settings_from
from landscape.services.sweep import SweepConfig, run_sweep
from recovery.models import SolutionKindEnum
from recovery.services.optimizer import InvalidConfigError
from recovery.services.params import INSTANCE_SCHEMA, SEED_SCHEMA, SOLVE_SCHEMA, instance_spec_from, solve_config_from
from recovery.services.problem import ProblemError

logger = logging.getLogger(__name__)


class Command(LabCommand):
    help = 'Classify true solutions over a grid of sample sizes'
    schema = {**INSTANCE_SCHEMA, **CLASSIFIER_SCHEMA, **SWEEP_SCHEMA, **SOLVE_SCHEMA, **SEED_SCHEMA}
    usage_errors = (ProblemError, ClassifyError, InvalidConfigError)

    def run(self, values, options):
        spec = instance_spec_from(values)
        if not values['grid']:
            raise ClassifyError("Sweep needs a grid (e.g. --set grid=30,120,3000)")
        kinds = values['solution_kinds'] or [
            SolutionKindEnum.ROTATED if spec.symmetric else SolutionKindEnum.BALANCED
        ]
        config = SweepConfig(
            spec=spec,
            grid=values['grid'],
            solution_kinds=kinds,
            trials=values['trials'],
            base_seed=values['base_seed'],
            gammas=values['gammas'],
            classifier=classifier_settings_from(values),
            global_min_samples=values['global_min_samples'],
            solve=solve_config_from(values),
        )
        out = self.output_path(options, 'phase')
        summary = run_sweep(config, out, workers=values['jobs'], plot=options['plot'])

        self.emit({
            'out': out,
            'cells': [
                {'cell': c['cell'], 'solution_kind': c['solution_kind'], 'modal': c['modal'],
                 'frequency': c['frequencies'].get(c['modal'], 0.0) if c['modal'] else 0.0}
                for c in summary['cells']
            ],
        })
        self.stderr.write(self.style.SUCCESS(f'✓ Sweep written to {out}'))
