"""
Canned experiment suites.

    fig1       sub-gradient runs from small initialisation, one per formulation
    fig2-sym   near-truth runs for symmetric sensing with m = 90
    fig2-asym  near-truth runs for asymmetric sensing with m = 170
    table1     phase tables for symmetric and asymmetric sensing

Every summary carries an ``assumptions`` block with the settings each suite
had to pick itself (noise fraction, magnitudes, step schedule).
"""

import logging
import os
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional

from common.formatting import write_json
from common.rng import derive_job_seed, make_streams
from landscape.services.classify import ClassifierSettings
from landscape.services.sweep import SweepConfig, run_sweep
from recovery.models import (
    InitKindEnum,
    InstanceSpec,
    NoiseKindEnum,
    NoiseModel,
    ProblemKindEnum,
    SolutionKindEnum,
    SolveConfig,
)
from recovery.services import reports
from recovery.services.optimizer import initial_step, run_trials
from recovery.services.params import INSTANCE_PRESETS
from recovery.services.problem import construct_solution, generate_instance

logger = logging.getLogger(__name__)


class PresetError(Exception):
    """Unknown preset or invalid preset override"""
    pass


@dataclass(frozen=True)
class SolveSuite:
    label: str
    spec: InstanceSpec
    solve: SolveConfig
    threshold: float
    solution_kind: Optional[str] = None


@dataclass
class Preset:
    name: str
    description: str
    trials: int
    assumptions: Dict = field(default_factory=dict)
    solves: List[SolveSuite] = field(default_factory=list)
    sweeps: List[tuple] = field(default_factory=list)


# ──────────────────────────────────────────────
# Definitions
# ──────────────────────────────────────────────

def fig1_preset(trials: int = 10, solve: SolveConfig = None) -> Preset:
    # One relative schedule for all four formulations; the reference scale
    # absorbs the ~d gap between sensing and completion subgradients.
    cfg = solve or SolveConfig(eta0=0.08, q=0.995, T=3000, init=InitKindEnum.SMALL, relative_step=True)

    suites = []
    for problem_kind in (ProblemKindEnum.MS_SYM, ProblemKindEnum.MS_ASYM,
                         ProblemKindEnum.MC_SYM, ProblemKindEnum.MC_ASYM):
        spec = INSTANCE_PRESETS[f'fig1-{problem_kind}']
        suites.append(SolveSuite(label=problem_kind, spec=spec, solve=cfg, threshold=1e-2))

    return Preset(
        name='fig1',
        description='Sub-gradient method from small initialisation, d=40, r=2, k=40',
        trials=trials,
        assumptions={
            'p': spec.p,
            'noise': 'symmetric-outlier with magnitude sigma_1(X*)',
            's': spec.s,
            'm_sensing': spec.m,
            'eta0': cfg.eta0,
            'relative_step': cfg.relative_step,
            'q': cfg.q,
            'T': cfg.T,
            'init_scale': '1e-3 * sqrt(sigma_1)',
        },
        solves=suites,
    )


def _fig2_preset(name: str, solution_kind: str, trials: int = 20, solve: SolveConfig = None) -> Preset:
    spec = INSTANCE_PRESETS[name]
    # Initial steps stay below the size of the init perturbation
    cfg = solve or SolveConfig(eta0=0.004, q=0.9985, T=4000, init=InitKindEnum.NEAR_TRUTH,
                               variance=5e-5, solution_kind=solution_kind, relative_step=True)
    return Preset(
        name=name,
        description=f'Near-truth runs, d={spec.d1}, r={spec.r}, k={spec.k}, m={spec.m}',
        trials=trials,
        assumptions={
            'noise': 'symmetric-outlier with magnitude sigma_1(X*)',
            'p': spec.p,
            'solution_kind': solution_kind,
            'init_variance': cfg.variance,
            'eta0': cfg.eta0,
            'relative_step': cfg.relative_step,
            'q': cfg.q,
            'T': cfg.T,
        },
        solves=[SolveSuite(label=spec.problem, spec=spec, solve=cfg, threshold=1e-3,
                           solution_kind=solution_kind)],
    )


def fig2_sym_preset(trials: int = 20, solve: SolveConfig = None) -> Preset:
    return _fig2_preset('fig2-sym', SolutionKindEnum.CANONICAL, trials, solve)


def fig2_asym_preset(trials: int = 20, solve: SolveConfig = None) -> Preset:
    return _fig2_preset('fig2-asym', SolutionKindEnum.BALANCED, trials, solve)


def table1_preset(trials: int = 20, solve: SolveConfig = None,
                  classifier: ClassifierSettings = None) -> Preset:
    classifier = classifier or ClassifierSettings.from_settings()
    noise = NoiseModel(kind=NoiseKindEnum.SYMMETRIC_OUTLIER, scale=10.0)
    global_solve = solve or SolveConfig(eta0=0.1, q=0.998, T=2000, init=InitKindEnum.SMALL)

    sym = SweepConfig(
        spec=InstanceSpec(problem=ProblemKindEnum.MS_SYM, d1=30, d2=30, r=2, k=10, p=0.1, noise=noise),
        grid=[30, 120, 3000],
        solution_kinds=[SolutionKindEnum.ROTATED],
        trials=trials,
        classifier=classifier,
        global_min_samples=20,
        solve=global_solve,
    )
    asym = SweepConfig(
        spec=InstanceSpec(problem=ProblemKindEnum.MS_ASYM, d1=20, d2=20, r=2, k=9, p=0.2, noise=noise),
        grid=[20, 150, 3600],
        solution_kinds=[SolutionKindEnum.BALANCED, SolutionKindEnum.IMBALANCED],
        trials=trials,
        classifier=classifier,
        global_min_samples=20,
        solve=global_solve,
    )
    return Preset(
        name='table1',
        description='Phase tables for symmetric and asymmetric sensing',
        trials=trials,
        assumptions={
            'noise': 'symmetric-outlier with magnitude 10',
            'm_grid_sym': sym.grid,
            'm_grid_asym': asym.grid,
            'global_min_samples': sym.global_min_samples,
            'global_min_solver_T': global_solve.T,
        },
        sweeps=[('ms-sym', sym), ('ms-asym', asym)],
    )


PRESETS: Dict[str, Callable[..., Preset]] = {
    'fig1': fig1_preset,
    'fig2-sym': fig2_sym_preset,
    'fig2-asym': fig2_asym_preset,
    'table1': table1_preset,
}


def get_preset(name: str, trials: Optional[int] = None) -> Preset:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise PresetError(f"Unknown preset '{name}', choose from {', '.join(PRESETS)}")
    if trials is not None:
        if trials < 1:
            raise PresetError(f"trials must be at least 1, got {trials}")
        return factory(trials=trials)
    return factory()


# ──────────────────────────────────────────────
# Execution
# ──────────────────────────────────────────────

def _run_solve_suite(index: int, suite: SolveSuite, trials: int, base_seed: int,
                     out_dir: str, jobs: int, plot: bool) -> dict:
    streams = make_streams(derive_job_seed(base_seed, index, 0))
    inst = generate_instance(suite.spec, streams.instance)
    W_star = None
    if suite.solve.init == InitKindEnum.NEAR_TRUTH:
        W_star = construct_solution(inst, suite.solution_kind, streams.solution)

    outcomes = run_trials(inst, suite.solve, base_seed, trials, jobs=jobs, W_star=W_star)
    reports.write_bundle_csv(os.path.join(out_dir, f"{suite.label}.csv"), outcomes)
    if plot:
        svg = reports.bundle_plot_svg(outcomes, title=f"{suite.label}: relative distance")
        with open(os.path.join(out_dir, f"{suite.label}.svg"), 'w', encoding='utf-8') as fh:
            fh.write(svg)

    summary = reports.bundle_summary(outcomes, suite.threshold)
    summary.update({
        'label': suite.label,
        'm': inst.m,
        'St_size': int(inst.noise.St.size),
        'eta0_effective': initial_step(inst, suite.solve),
    })
    logger.info(
        f"Preset suite {suite.label}: {summary['convergence_frequency']:.0%} of {trials} "
        f"runs within {suite.threshold:g}"
    )
    return summary


def run_preset(preset: Preset, out_dir: str, base_seed: int = 0, jobs: int = 1, plot: bool = False) -> dict:
    """Run every suite and sweep of the preset into out_dir and write summary.json."""
    os.makedirs(out_dir, exist_ok=True)
    summary = {
        'preset': preset.name,
        'description': preset.description,
        'base_seed': base_seed,
        'trials': preset.trials,
        'assumptions': preset.assumptions,
        'solves': [],
        'sweeps': {},
    }
    for index, suite in enumerate(preset.solves):
        summary['solves'].append(
            _run_solve_suite(index, suite, preset.trials, base_seed, out_dir, jobs, plot)
        )
    for label, config in preset.sweeps:
        config = replace(config, base_seed=base_seed)
        summary['sweeps'][label] = run_sweep(config, os.path.join(out_dir, label), workers=jobs, plot=plot)

    write_json(os.path.join(out_dir, 'summary.json'), summary)
    return summary
