"""
Sub-gradient method with exponentially decaying steps η_t = eta0·qᵗ.

Initialisation is either a small random point or a perturbed true solution.
"""

import logging
import multiprocessing as mp
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from common.linalg import sym
from common.rng import derive_job_seed, make_streams
from recovery.models import (
    FactorPair,
    InitKindEnum,
    Instance,
    RunStatusEnum,
    SolveConfig,
    Trajectory,
    TrajectoryRecord,
)
from recovery.services import problem
from recovery.services.loss import adjoint, loss, subgradient

logger = logging.getLogger(__name__)


class SolveError(Exception):
    """Base exception for optimizer runs"""
    pass


class InvalidConfigError(SolveError):
    pass


class DivergedError(SolveError):
    """Iterates blew up; carries the last finite record."""

    def __init__(self, message, last_record=None, iteration=None, records=None):
        super().__init__(message)
        self.last_record = last_record
        self.iteration = iteration
        self.records = records or []


def validate_config(cfg: SolveConfig):
    if cfg.eta0 < 0:
        raise InvalidConfigError(f"eta0 must be non-negative, got {cfg.eta0}")
    if not 0.0 < cfg.q < 1.0:
        raise InvalidConfigError(f"q must lie in (0, 1), got {cfg.q}")
    if cfg.T < 0:
        raise InvalidConfigError(f"T must be non-negative, got {cfg.T}")
    if cfg.init not in InitKindEnum.values:
        raise InvalidConfigError(f"Unknown init '{cfg.init}'")
    if cfg.scale is not None and cfg.scale <= 0:
        raise InvalidConfigError(f"Init scale must be positive, got {cfg.scale}")
    if cfg.variance < 0:
        raise InvalidConfigError(f"Init variance must be non-negative, got {cfg.variance}")


def default_init_scale(inst: Instance, factor: float = 1e-3) -> float:
    return factor * np.sqrt(inst.gt.sigma1)


def small_init(inst: Instance, scale: float, rng: np.random.Generator) -> FactorPair:
    if scale <= 0:
        raise InvalidConfigError(f"Init scale must be positive, got {scale}")
    W1 = scale * rng.standard_normal((inst.d1, inst.k))
    if inst.symmetric:
        return FactorPair(W1)
    return FactorPair(W1, scale * rng.standard_normal((inst.k, inst.d2)))


def perturbed_truth_init(W_star: FactorPair, variance: float, rng: np.random.Generator) -> FactorPair:
    if variance < 0:
        raise InvalidConfigError(f"Init variance must be non-negative, got {variance}")
    std = np.sqrt(variance)
    W1 = W_star.W1 + std * rng.standard_normal(W_star.W1.shape)
    if W_star.symmetric:
        return FactorPair(W1)
    return FactorPair(W1, W_star.W2 + std * rng.standard_normal(W_star.W2.shape))


def initial_point(inst: Instance, cfg: SolveConfig, rng: np.random.Generator, W_star=None) -> FactorPair:
    if cfg.init == InitKindEnum.SMALL:
        scale = cfg.scale if cfg.scale is not None else default_init_scale(inst, cfg.init_scale_factor)
        return small_init(inst, scale, rng)
    if W_star is None:
        kind = cfg.solution_kind or problem.default_solution_kind(inst)
        W_star = problem.construct_solution(inst, kind, rng)
    return perturbed_truth_init(W_star, cfg.variance, rng)


def step_reference(inst: Instance) -> float:
    """
    Spectral norm of the subgradient operator at the origin, (1/m)·A*(sgn y),
    symmetrised for symmetric instances.

    Sensing and completion differ here by roughly a factor d, so a relative
    eta0 gives both the same growth rate out of a small initialisation.
    """
    if inst.m == 0:
        return 1.0
    M = adjoint(inst, np.sign(inst.y)) / inst.m
    if inst.symmetric:
        M = sym(M)
    value = float(np.linalg.norm(M, 2))
    return value if value > 0 else 1.0


def initial_step(inst: Instance, cfg: SolveConfig) -> float:
    if cfg.relative_step:
        return cfg.eta0 / step_reference(inst)
    return cfg.eta0


def run_subgradient(inst: Instance, cfg: SolveConfig, rng: np.random.Generator,
                    W0: Optional[FactorPair] = None) -> Trajectory:
    """
    Iterate W_{t+1} = W_t − η_t·G(W_t) for T steps, recording (iter, loss,
    rel_dist) for every iterate including W_0. η_0 is eta0, or
    eta0/step_reference(inst) when cfg.relative_step is set.

    Raises:
        DivergedError: non-finite iterate or loss above divergence_factor·loss(W_0)
    """
    validate_config(cfg)
    W = W0 if W0 is not None else initial_point(inst, cfg, rng)

    loss0 = loss(inst, W)
    records = [TrajectoryRecord(0, loss0, problem.relative_distance(inst, W))]
    ceiling = cfg.divergence_factor * loss0 if loss0 > 0 else np.inf

    eta = initial_step(inst, cfg)
    for t in range(cfg.T):
        G = subgradient(inst, W)
        W = W - G.scaled(eta)
        eta *= cfg.q

        f = loss(inst, W) if W.is_finite() else float('nan')
        if not np.isfinite(f) or f > ceiling:
            logger.warning(f"Sub-gradient run diverged at iteration {t + 1} (loss={f})")
            raise DivergedError(
                f"Iterates diverged at iteration {t + 1}",
                last_record=records[-1], iteration=t + 1, records=records,
            )
        records.append(TrajectoryRecord(t + 1, f, problem.relative_distance(inst, W)))

    logger.debug(f"Run finished after {cfg.T} iterations, rel_dist={records[-1].rel_dist:.3e}")
    return Trajectory(records=records, final=W)


# ──────────────────────────────────────────────
# Multi-seed bundles
# ──────────────────────────────────────────────

@dataclass
class TrialOutcome:
    trial: int
    seed: int
    trajectory: Optional[Trajectory]
    status: str
    message: str = ''

    @property
    def final_rel_dist(self) -> float:
        if self.trajectory is None:
            return float('nan')
        return self.trajectory.final_rel_dist


def _run_trial(args) -> TrialOutcome:
    inst, cfg, base_seed, trial, W_star = args
    seed = derive_job_seed(base_seed, 0, trial)
    streams = make_streams(seed)
    try:
        W0 = None
        if cfg.init == InitKindEnum.NEAR_TRUTH and W_star is not None:
            W0 = perturbed_truth_init(W_star, cfg.variance, streams.solver)
        trajectory = run_subgradient(inst, cfg, streams.solver, W0=W0)
        return TrialOutcome(trial, seed, trajectory, RunStatusEnum.COMPLETED)
    except DivergedError as e:
        partial = Trajectory(records=e.records, final=None, status=RunStatusEnum.DIVERGED)
        return TrialOutcome(trial, seed, partial, RunStatusEnum.DIVERGED, str(e))


def run_trials(inst: Instance, cfg: SolveConfig, base_seed: int, trials: int,
               jobs: int = 1, W_star: Optional[FactorPair] = None) -> List[TrialOutcome]:
    """
    Independent runs of the same instance, one rng stream per trial. Results
    are ordered by trial index whatever the pool scheduling.
    """
    work = [(inst, cfg, base_seed, trial, W_star) for trial in range(trials)]
    if jobs <= 1 or trials <= 1:
        outcomes = [_run_trial(item) for item in work]
    else:
        with mp.Pool(processes=min(jobs, trials)) as pool:
            outcomes = list(pool.imap_unordered(_run_trial, work, chunksize=1))
    outcomes.sort(key=lambda o: o.trial)
    logger.info(
        f"{trials} trials finished, "
        f"{sum(o.status == RunStatusEnum.DIVERGED for o in outcomes)} diverged"
    )
    return outcomes


def convergence_frequency(outcomes: List[TrialOutcome], threshold: float) -> float:
    if not outcomes:
        return 0.0
    hits = sum(
        1 for o in outcomes
        if o.status == RunStatusEnum.COMPLETED and o.final_rel_dist <= threshold
    )
    return hits / len(outcomes)
