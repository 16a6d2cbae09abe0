"""
Management command: python manage.py rip [instance]

Extremes of the l1/l2 ratio (1/m)·Σ|⟨A_i, X⟩| over random unit-norm
rank-2r′ matrices, for a fresh Gaussian ensemble or an instance file.

Usage:
    python manage.py rip --set m=5000 --set d1=20 --set r_prime=1 --set n=500
    python manage.py rip runs/inst.lrl1 --set n=200
"""

import logging

import numpy as np
from django.core.management.base import CommandError

from common.commands import RUNTIME_EXIT, LabCommand
from common.formatting import write_json
from common.rng import make_streams
from common.run_config import Param
from landscape.services.classify import SQRT_2_OVER_PI, ClassifyError, RipSummary, rip_ratio
from landscape.services.probes import ProbeInapplicableError
from recovery.services.instance_io import InstanceFormatError, load_instance
from recovery.services.params import SEED_SCHEMA
from recovery.services.problem import ProblemError, sample_sensing

logger = logging.getLogger(__name__)


class Command(LabCommand):
    help = 'Measure the l1/l2 restricted isometry ratio of a sensing ensemble'
    schema = {
        **SEED_SCHEMA,
        'd1': Param(int, 20, 'Rows'),
        'd2': Param(int, None, 'Columns (defaults to d1)'),
        'm': Param(int, 5000, 'Measurements'),
        'r_prime': Param(int, 1, "Test matrices have rank 2r'"),
        'n': Param(int, 500, 'Random test matrices'),
    }
    usage_errors = (ProblemError, ClassifyError, ProbeInapplicableError)

    def add_arguments(self, parser):
        parser.add_argument('instance', nargs='?', help='LRL1 instance file (optional)')
        super().add_arguments(parser)

    def run(self, values, options):
        streams = make_streams(values['base_seed'])
        if options.get('instance'):
            try:
                ens = load_instance(options['instance']).ens
            except InstanceFormatError as e:
                raise CommandError(str(e), returncode=RUNTIME_EXIT)
        else:
            d2 = values['d2'] if values['d2'] is not None else values['d1']
            ens = sample_sensing(values['d1'], d2, values['m'], streams.instance)

        lo, hi = rip_ratio(ens, values['r_prime'], values['n'], streams.probe)
        summary = RipSummary(r_prime=values['r_prime'], n=values['n'], m=ens.m, min_ratio=lo, max_ratio=hi)
        payload = summary.to_dict()
        payload['implied_delta'] = float(np.max([SQRT_2_OVER_PI - lo, hi - SQRT_2_OVER_PI]))

        if options.get('out'):
            write_json(options['out'], payload)
        self.emit(payload)
