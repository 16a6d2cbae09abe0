"""
Run-config schemas shared by the commands, and their conversion into
InstanceSpec / SolveConfig.
"""

from typing import Optional

from common.run_config import Param, RunConfigError, to_bool
from recovery.models import (
    GroundTruthKindEnum,
    InitKindEnum,
    InstanceSpec,
    NoiseKindEnum,
    NoiseModel,
    ProblemKindEnum,
    SolutionKindEnum,
    SolveConfig,
)


def _choice(enum_cls):
    def cast(value):
        value = str(value).strip()
        if value not in enum_cls.values:
            raise ValueError(f"expected one of {', '.join(enum_cls.values)}")
        return value
    return cast


def _optional(cast):
    def wrapped(value):
        if value is None or str(value).strip() in ('', 'none', 'None'):
            return None
        return cast(value)
    return wrapped


SEED_SCHEMA = {
    'seed': Param(_optional(int), None, 'Base seed'),
}

INSTANCE_SCHEMA = {
    'problem': Param(_choice(ProblemKindEnum), ProblemKindEnum.MS_SYM, 'ms-sym | ms-asym | mc-sym | mc-asym'),
    'd1': Param(int, 20, 'Rows of X*'),
    'd2': Param(_optional(int), None, 'Columns of X* (defaults to d1)'),
    'r': Param(int, 2, 'Rank of X*'),
    'k': Param(int, 4, 'Search rank'),
    'm': Param(int, 100, 'Number of sensing measurements'),
    's': Param(float, 0.8, 'Completion sampling rate'),
    'p': Param(float, 0.1, 'Corruption probability'),
    'noise': Param(_choice(NoiseKindEnum), NoiseKindEnum.SYMMETRIC_OUTLIER, 'Noise kind'),
    'noise_scale': Param(float, 1.0, 'Outlier magnitude or Gaussian sigma'),
    'noise_relative': Param(to_bool, False, 'Scale noise by sigma_1(X*)'),
    'gt_kind': Param(_optional(_choice(GroundTruthKindEnum)), None, 'generic | psd-symmetric | coherent'),
}

SOLVE_SCHEMA = {
    'eta0': Param(_optional(float), None, 'Initial step size'),
    'q': Param(_optional(float), None, 'Step decay factor'),
    'T': Param(_optional(int), None, 'Iterations'),
    'init': Param(_choice(InitKindEnum), InitKindEnum.SMALL, 'small | near-truth'),
    'init_scale': Param(_optional(float), None, 'Small-init scale'),
    'variance': Param(float, 5e-5, 'Near-truth perturbation variance'),
    'solution_kind': Param(_optional(_choice(SolutionKindEnum)), None, 'True solution for near-truth init'),
    'relative_step': Param(to_bool, False, 'Read eta0 relative to the subgradient scale at the origin'),
}


def instance_spec_from(values: dict) -> InstanceSpec:
    d1 = values['d1']
    d2 = values['d2'] if values['d2'] is not None else d1
    problem = values['problem']
    if problem in (ProblemKindEnum.MS_SYM, ProblemKindEnum.MC_SYM) and d2 != d1:
        raise RunConfigError(f"Symmetric problems need d1 == d2, got {d1}x{d2}", key='d2')
    return InstanceSpec(
        problem=problem,
        d1=d1,
        d2=d2,
        r=values['r'],
        k=values['k'],
        m=values['m'],
        s=values['s'],
        p=values['p'],
        noise=NoiseModel(kind=values['noise'], scale=values['noise_scale']),
        noise_relative=values['noise_relative'],
        gt_kind=values['gt_kind'],
    )


def solve_config_from(values: dict, solution_kind: Optional[str] = None) -> SolveConfig:
    return SolveConfig.from_settings(
        eta0=values['eta0'],
        q=values['q'],
        T=values['T'],
        init=values['init'],
        scale=values['init_scale'],
        variance=values['variance'],
        solution_kind=solution_kind or values['solution_kind'],
        relative_step=values['relative_step'],
    )


# ──────────────────────────────────────────────
# Named instances
# ──────────────────────────────────────────────

_RELATIVE_OUTLIERS = NoiseModel(kind=NoiseKindEnum.SYMMETRIC_OUTLIER, scale=1.0)


def _fig1_spec(problem: str) -> InstanceSpec:
    return InstanceSpec(problem=problem, d1=40, d2=40, r=2, k=40, m=1000, s=0.8, p=0.1,
                        noise=_RELATIVE_OUTLIERS, noise_relative=True)


def _fig2_spec(problem: str, m: int) -> InstanceSpec:
    return InstanceSpec(problem=problem, d1=20, d2=20, r=3, k=20, m=m, p=0.1,
                        noise=_RELATIVE_OUTLIERS, noise_relative=True)


INSTANCE_PRESETS = {
    **{f'fig1-{kind}': _fig1_spec(kind) for kind in ProblemKindEnum.values},
    'fig2-sym': _fig2_spec(ProblemKindEnum.MS_SYM, 90),
    'fig2-asym': _fig2_spec(ProblemKindEnum.MS_ASYM, 170),
}


def instance_preset_values(name: str) -> dict:
    """INSTANCE_SCHEMA values of a named instance, ready to sit under --config and --set."""
    try:
        spec = INSTANCE_PRESETS[name]
    except KeyError:
        raise RunConfigError(
            f"Unknown instance preset '{name}', choose from {', '.join(INSTANCE_PRESETS)}", key='preset',
        )
    return {
        'problem': spec.problem,
        'd1': spec.d1,
        'd2': spec.d2,
        'r': spec.r,
        'k': spec.k,
        'm': spec.m,
        's': spec.s,
        'p': spec.p,
        'noise': spec.noise.kind,
        'noise_scale': spec.noise.scale,
        'noise_relative': spec.noise_relative,
        'gt_kind': spec.gt_kind,
    }
