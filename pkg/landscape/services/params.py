"""
Run-config schemas for the probe, sweep and preset commands.
"""

from common.run_config import Param, float_list, str_list
from landscape.services.classify import ClassifierSettings
from recovery.models import SolutionKindEnum

CLASSIFIER_SCHEMA = {
    'gammas': Param(lambda v: float_list(v) or None, None, 'Radii grid (default: 8 log-spaced)'),
    'random_directions': Param(int, None, 'Random unit directions per radius'),
    'tau': Param(float, 0.0, 'Singular-value threshold for the kernel probes'),
    'zeta_safety': Param(float, None, 'Safety factor on the automatic zeta'),
}


def _solution_kinds(value):
    kinds = str_list(value)
    unknown = [kind for kind in kinds if kind not in SolutionKindEnum.values]
    if unknown:
        raise ValueError(f"unknown solution kinds: {', '.join(unknown)}")
    return kinds


SWEEP_SCHEMA = {
    'grid': Param(float_list, None, 'm values (sensing) or s values (completion)'),
    'solution_kinds': Param(_solution_kinds, None, 'Solution kinds, comma separated'),
    'trials': Param(int, 10, 'Seeds per cell'),
    'global_min_samples': Param(int, 0, 'Random candidates for the global-minimum check (0 skips it)'),
}


def classifier_settings_from(values: dict) -> ClassifierSettings:
    return ClassifierSettings.from_settings(
        random_directions=values['random_directions'],
        zeta_safety=values['zeta_safety'],
        tau=values['tau'],
    )
