"""
Management command: python manage.py probe <instance>

Construct a true solution of the instance (or read an explicit point with
--factors), run every applicable probe over the radius grid and write the
perturbation report.

Usage:
    python manage.py probe runs/inst.lrl1 --set solution_kind=imbalanced --out runs/report.json
    python manage.py probe runs/inst.lrl1 --set global_min_samples=20 --format csv
    python manage.py probe runs/inst.lrl1 --factors runs/point.json
"""

import logging

from django.core.management.base import CommandError

from common.commands import RUNTIME_EXIT, LabCommand
from common.formatting import write_csv, write_json
from common.rng import make_streams
from common.run_config import Param
from landscape.services.classify import (
    ClassifyError,
    global_min_check,
    local_lower_bound_check,
    lower_bound_reference,
    probe_scaling,
)
from landscape.services.params import CLASSIFIER_SCHEMA, classifier_settings_from
from landscape.services.probes import ProbeInapplicableError
from recovery.services.instance_io import InstanceFormatError, load_factors, load_instance
from recovery.services.optimizer import InvalidConfigError
from recovery.services.params import SEED_SCHEMA, SOLVE_SCHEMA, solve_config_from
from recovery.services.problem import ProblemError, construct_solution, default_solution_kind

logger = logging.getLogger(__name__)

PROBE_CSV_HEADER = ['name', 'gamma', 'delta_f', 'predicted', 'feasible', 'reason']
EXPLICIT_POINT = 'explicit'


class Command(LabCommand):
    help = 'Probe the landscape around a true solution and classify it'
    schema = {
        **CLASSIFIER_SCHEMA,
        **SOLVE_SCHEMA,
        **SEED_SCHEMA,
        'lower_bound_samples': Param(int, 0, 'Random samples for the local lower-bound check (0 skips it)'),
        'global_min_samples': Param(int, 0, 'Random candidates for the global-minimum check (0 skips it)'),
    }
    usage_errors = (ProblemError, ClassifyError, ProbeInapplicableError, InvalidConfigError)

    def add_arguments(self, parser):
        parser.add_argument('instance', help='LRL1 instance file')
        parser.add_argument('--factors', help='JSON file with the point to probe (W1, and W2 when asymmetric)')
        super().add_arguments(parser)

    def run(self, values, options):
        streams = make_streams(values['base_seed'])
        try:
            inst = load_instance(options['instance'])
            if options.get('factors'):
                kind = EXPLICIT_POINT
                W = load_factors(options['factors'], inst)
            else:
                kind = values['solution_kind'] or default_solution_kind(inst)
                W = construct_solution(inst, kind, streams.solution)
        except InstanceFormatError as e:
            raise CommandError(str(e), returncode=RUNTIME_EXIT)
        cfg = classifier_settings_from(values)
        report = probe_scaling(inst, W, values['gammas'], streams.probe, cfg)

        payload = {
            'problem': inst.kind,
            'solution_kind': kind,
            'seed': values['base_seed'],
            'report': report.to_dict(),
        }
        if values['lower_bound_samples'] > 0:
            gamma = report.gammas[-1]
            payload['lower_bound'] = {
                'gamma': gamma,
                'min_delta': local_lower_bound_check(inst, W, gamma, values['lower_bound_samples'],
                                                     streams.probe, cfg),
                'reference': lower_bound_reference(inst, gamma),
            }
        if values['global_min_samples'] > 0:
            check = global_min_check(inst, W, values['global_min_samples'], streams.solver,
                                     solve_config_from(values))
            payload['global_min'] = check.to_dict()

        out = self.output_path(options, f"report.{options['format']}")
        if options['format'] == 'csv':
            rows = [
                (p.name, p.gamma, p.delta_f, p.predicted, p.feasible, p.diag.get('reason', ''))
                for p in report.probes
            ]
            write_csv(out, PROBE_CSV_HEADER, rows)
        else:
            write_json(out, payload)

        self.emit({
            'classification': report.classification,
            'alpha': report.alpha,
            'first_order_min': report.first_order_min,
            'best_delta_at_gamma_max': report.best_delta_at_max,
            'path': out,
        })
        self.stderr.write(self.style.SUCCESS(f'✓ {inst.kind} {kind}: {report.classification}'))
