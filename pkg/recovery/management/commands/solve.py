"""
Management command: python manage.py solve <instance>

Run the sub-gradient method on an instance file and write the trajectory.

Usage:
    python manage.py solve runs/inst.lrl1 --out runs/traj.csv --plot
    python manage.py solve runs/inst.lrl1 --set init=near-truth --set trials=20 --jobs 4
"""

import logging
import os

from django.core.management.base import CommandError

from common.commands import RUNTIME_EXIT, LabCommand
from common.formatting import write_json
from common.rng import make_streams
from common.run_config import Param
from recovery.models import InitKindEnum, RunStatusEnum, Trajectory
from recovery.services import reports
from recovery.services.instance_io import InstanceFormatError, load_instance
from recovery.services.optimizer import (
    DivergedError,
    InvalidConfigError,
    perturbed_truth_init,
    run_subgradient,
    run_trials,
)
from recovery.services.params import SEED_SCHEMA, SOLVE_SCHEMA, solve_config_from
from recovery.services.problem import ProblemError, construct_solution, default_solution_kind

logger = logging.getLogger(__name__)


class Command(LabCommand):
    help = 'Run the sub-gradient method on an LRL1 instance'
    schema = {
        **SOLVE_SCHEMA,
        **SEED_SCHEMA,
        'trials': Param(int, 1, 'Independent runs (multi-seed bundle when > 1)'),
        'threshold': Param(float, 1e-2, 'rel_dist counted as converged'),
    }
    usage_errors = (ProblemError, InvalidConfigError)

    def add_arguments(self, parser):
        parser.add_argument('instance', help='LRL1 instance file')
        super().add_arguments(parser)

    def run(self, values, options):
        try:
            inst = load_instance(options['instance'])
        except InstanceFormatError as e:
            raise CommandError(str(e), returncode=RUNTIME_EXIT)

        streams = make_streams(values['base_seed'])
        cfg = solve_config_from(values)
        W_star = None
        if cfg.init == InitKindEnum.NEAR_TRUTH:
            W_star = construct_solution(inst, cfg.solution_kind or default_solution_kind(inst), streams.solution)

        out = self.output_path(options, f"trajectory.{options['format']}")
        stem = os.path.splitext(out)[0]
        if values['trials'] > 1:
            summary = self._bundle(inst, cfg, values, W_star, out, stem, options)
        else:
            summary = self._single(inst, cfg, streams, W_star, out, stem, options)

        write_json(f"{stem}.summary.json", summary)
        self.emit(summary)
        self.stderr.write(self.style.SUCCESS(f'✓ Trajectory written to {out}'))

    def _single(self, inst, cfg, streams, W_star, out, stem, options):
        W0 = None
        if W_star is not None:
            W0 = perturbed_truth_init(W_star, cfg.variance, streams.solver)
        try:
            trajectory = run_subgradient(inst, cfg, streams.solver, W0=W0)
            message = ''
        except DivergedError as e:
            trajectory = Trajectory(records=e.records, final=None, status=RunStatusEnum.DIVERGED)
            message = str(e)

        if options['format'] == 'json':
            write_json(out, {'status': trajectory.status, 'records': trajectory.rows()})
        else:
            reports.write_trajectory_csv(out, trajectory)
        if options['plot']:
            self._write_svg(f"{stem}.svg", reports.trajectory_plot_svg(trajectory, title=inst.kind))

        last = trajectory.records[-1]
        return {
            'status': trajectory.status,
            'message': message,
            'iterations': last.iter,
            'final_loss': last.loss,
            'final_rel_dist': last.rel_dist,
            'path': out,
        }

    def _bundle(self, inst, cfg, values, W_star, out, stem, options):
        outcomes = run_trials(inst, cfg, values['base_seed'], values['trials'], jobs=values['jobs'], W_star=W_star)
        reports.write_bundle_csv(out, outcomes)
        if options['plot']:
            self._write_svg(f"{stem}.svg", reports.bundle_plot_svg(outcomes, title=inst.kind))
        summary = reports.bundle_summary(outcomes, values['threshold'])
        summary['path'] = out
        return summary

    def _write_svg(self, path, svg):
        with open(path, 'w', encoding='utf-8') as fh:
            fh.write(svg)
