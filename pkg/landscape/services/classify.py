"""
Landscape classification around true solutions.

probe_scaling runs every applicable probe over a grid of radii, fits the
decay exponent of the best loss decrease and labels the point. The
remaining checks (local lower bound, global minimum, ℓ1/ℓ2 ratio) give the
supporting evidence reported next to the labels.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from django.conf import settings

from landscape.models import ClassificationEnum, GlobalMinCheck, PerturbationReport, ProbeNameEnum, ProbeResult
from landscape.services import probes
from landscape.services.probes import ProbeInapplicableError
from recovery.models import FactorPair, Instance, ProblemKindEnum, SolveConfig
from recovery.services import problem
from recovery.services.loss import directional_derivative, loss
from recovery.services.optimizer import DivergedError, run_subgradient

logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = float(np.sqrt(2.0 / np.pi))
FIT_FLOOR = 1e-12
GLOBAL_MIN_SLACK = 1e-9


class ClassifyError(Exception):
    """Base exception for classification"""
    pass


class InvalidGammaGridError(ClassifyError):
    def __init__(self, message, gammas=None):
        super().__init__(message)
        self.gammas = gammas


@dataclass(frozen=True)
class ClassifierSettings:
    tol_fd_factor: float = 1e-8
    tol_abs: float = 1e-10
    first_order_band: Tuple[float, float] = (0.7, 1.3)
    quadratic_band: Tuple[float, float] = (1.7, 2.3)
    random_directions: int = 200
    zeta_safety: float = probes.ZETA_SAFETY
    tau: float = 0.0

    @classmethod
    def from_settings(cls, **overrides) -> 'ClassifierSettings':
        values = {
            'tol_fd_factor': settings.LAB_TOL_FD_FACTOR,
            'tol_abs': settings.LAB_TOL_ABS,
            'first_order_band': tuple(settings.LAB_FIRST_ORDER_BAND),
            'quadratic_band': tuple(settings.LAB_QUADRATIC_BAND),
            'random_directions': settings.LAB_RANDOM_DIRECTIONS,
            'zeta_safety': settings.LAB_ZETA_SAFETY,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self) -> dict:
        return {
            'tol_fd_factor': self.tol_fd_factor,
            'tol_abs': self.tol_abs,
            'first_order_band': list(self.first_order_band),
            'quadratic_band': list(self.quadratic_band),
            'random_directions': self.random_directions,
            'zeta_safety': self.zeta_safety,
            'tau': self.tau,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> 'ClassifierSettings':
        payload = dict(payload)
        payload['first_order_band'] = tuple(payload['first_order_band'])
        payload['quadratic_band'] = tuple(payload['quadratic_band'])
        return cls(**payload)


# ──────────────────────────────────────────────
# Radii and exponents
# ──────────────────────────────────────────────

def default_gammas(inst: Instance, n: int = 8, lo: float = 1e-3, hi: float = 1e-1) -> List[float]:
    """n log-spaced radii in [lo, hi]·min(1, √t0)."""
    t0 = inst.noise.t0
    factor = min(1.0, float(np.sqrt(t0))) if t0 > 0 else 1.0
    return [float(g) for g in np.geomspace(lo, hi, n) * factor]


def validate_gammas(gammas: Sequence[float]) -> List[float]:
    gammas = [float(g) for g in gammas]
    if len(gammas) < 4:
        raise InvalidGammaGridError(f"Need at least 4 radii, got {len(gammas)}", gammas)
    if gammas[0] <= 0 or any(b <= a for a, b in zip(gammas, gammas[1:])):
        raise InvalidGammaGridError("Radii must be positive and strictly increasing", gammas)
    if gammas[-1] < 10.0 * gammas[0]:
        raise InvalidGammaGridError("Radii must span at least one decade", gammas)
    return gammas


def fit_exponent(gammas: Sequence[float], deltas: Sequence[float]) -> Optional[float]:
    """Slope of log(−delta) against log γ over the points with delta < −1e-12."""
    g = np.asarray(gammas, dtype=float)
    d = np.asarray(deltas, dtype=float)
    keep = d < -FIT_FLOOR
    if np.count_nonzero(keep) < 2:
        return None
    slope, _ = np.polyfit(np.log(g[keep]), np.log(-d[keep]), 1)
    return float(slope)


def tol_fd_for(loss_at_solution: float, cfg: ClassifierSettings) -> float:
    return cfg.tol_fd_factor * (1.0 + loss_at_solution)


def in_band(alpha: Optional[float], band: Tuple[float, float]) -> bool:
    return alpha is not None and band[0] <= alpha <= band[1]


def classify_report(best_delta: Sequence[float], first_order_min: float, alpha: Optional[float],
                    tol_fd: float, cfg: ClassifierSettings = None) -> str:
    """
    Label from (best_delta, first_order_min, alpha) alone:

        NonCritical             a unit direction with derivative < −tol_fd
        StrictSaddleCandidate   descent at every radius with α in the quadratic band
        NoDescentFound          best_delta ≥ −tol_abs at every radius
        Inconclusive            anything else, including a linear decrease
                                without a negative derivative
    """
    cfg = cfg or ClassifierSettings()
    if first_order_min < -tol_fd:
        return ClassificationEnum.NON_CRITICAL
    if all(b < 0 for b in best_delta) and in_band(alpha, cfg.quadratic_band):
        return ClassificationEnum.STRICT_SADDLE_CANDIDATE
    if all(b >= -cfg.tol_abs for b in best_delta):
        return ClassificationEnum.NO_DESCENT_FOUND
    return ClassificationEnum.INCONCLUSIVE


# ──────────────────────────────────────────────
# Probe dispatch
# ──────────────────────────────────────────────

def _matches(W: FactorPair, other: FactorPair) -> bool:
    return W.symmetric == other.symmetric and all(
        a.shape == b.shape and np.allclose(a, b, rtol=1e-10, atol=1e-12)
        for a, b in ((W.left, other.left), (W.right, other.right))
    )


def applicable_probes(inst: Instance, W: FactorPair, gamma: float, rng: np.random.Generator,
                      cfg: ClassifierSettings) -> List[ProbeResult]:
    """Structured probes for the instance kind; random baselines excluded."""
    kind = inst.kind
    results = []

    def attempt(fn, *args, **kwargs):
        try:
            results.append(fn(*args, **kwargs))
        except ProbeInapplicableError as e:
            logger.debug(f"Skipping probe: {e}")

    if kind == ProblemKindEnum.MC_SYM:
        attempt(probes.sym_completion_probe, inst, W, gamma)
    elif kind == ProblemKindEnum.MS_SYM:
        attempt(probes.sym_sensing_probe, inst, W, gamma)
        attempt(probes.sym_sensing_refined_probe, inst, W, gamma)
    elif kind == ProblemKindEnum.MC_ASYM:
        attempt(probes.asym_completion_second_order_probe, inst, W, gamma)
        if problem.coherent_axis(inst.gt) is not None:
            attempt(probes.asym_completion_coherent_probe, inst, W, gamma)
        if inst.k > inst.r and inst.k - inst.r <= inst.d2:
            if _matches(W, problem.completion_witness_solution(inst.gt, inst.k)):
                _, result = probes.asym_completion_first_order_probe(inst, gamma)
                results.append(result)
    elif kind == ProblemKindEnum.MS_ASYM:
        attempt(probes.asym_sensing_first_order_probe, inst, W, gamma, zeta_safety=cfg.zeta_safety)
        attempt(probes.asym_sensing_first_order_probe_left, inst, W, gamma, zeta_safety=cfg.zeta_safety)
        attempt(probes.asym_sensing_second_order_probe, inst, W, gamma, tau=cfg.tau, rng=rng,
                zeta_safety=cfg.zeta_safety)
        attempt(probes.asym_sensing_grassmann_probe, inst, W, gamma, tau=cfg.tau)
        attempt(probes.asym_sensing_refined_probe, inst, W, gamma, tau=cfg.tau)
    return results


def _unit(D: FactorPair) -> Optional[FactorPair]:
    norm = D.norm()
    if norm <= 0 or not np.isfinite(norm):
        return None
    return D.scaled(1.0 / norm)


def first_order_scan(inst: Instance, W: FactorPair, directions: Sequence[FactorPair], n_random: int,
                     rng: np.random.Generator) -> float:
    """Minimum one-sided derivative over unit probe directions and n random unit directions."""
    units = [u for u in (_unit(D) for D in directions) if u is not None]
    units.extend(probes.random_direction(W, rng) for _ in range(n_random))
    if not units:
        return 0.0
    return min(directional_derivative(inst, W, D) for D in units)


def probe_scaling(inst: Instance, W: FactorPair, gammas: Optional[Sequence[float]],
                  rng: np.random.Generator, cfg: ClassifierSettings = None) -> PerturbationReport:
    """
    Run every applicable probe plus the random-sphere baseline at each radius
    and classify W from the resulting decrease profile.

    The derivative scan uses the probe directions of the largest radius. When
    the decrease is linear in γ (α in the first-order band) and that scan
    finds no descent, it is repeated over the probe directions of every
    radius with four times the random directions.

    Raises:
        InvalidGammaGridError: fewer than 4 radii, not increasing, or under a decade
    """
    cfg = cfg or ClassifierSettings.from_settings()
    gammas = validate_gammas(gammas if gammas is not None else default_gammas(inst))
    loss_at_solution = loss(inst, W)

    best_delta, collected = [], []
    directions_by_gamma = []
    for gamma in gammas:
        found = applicable_probes(inst, W, gamma, rng, cfg)
        found.append(probes.random_sphere_probe(inst, W, gamma, cfg.random_directions, rng))
        feasible = [p for p in found if p.feasible]
        best_delta.append(float(min(p.delta_f for p in feasible)))
        collected.extend(found)
        directions_by_gamma.append([
            p.dW for p in feasible
            if p.name != ProbeNameEnum.RANDOM_SPHERE and p.dW is not None
        ])

    first_order_min = first_order_scan(inst, W, directions_by_gamma[-1], cfg.random_directions, rng)
    alpha = fit_exponent(gammas, best_delta) if all(b < 0 for b in best_delta) else None
    tol_fd = tol_fd_for(loss_at_solution, cfg)

    if first_order_min >= -tol_fd and in_band(alpha, cfg.first_order_band):
        every_radius = [D for directions in directions_by_gamma for D in directions]
        wider = first_order_scan(inst, W, every_radius, 4 * cfg.random_directions, rng)
        logger.debug(f"Linear decrease (alpha={alpha:.2f}); wider derivative scan gave {wider:.3e}")
        first_order_min = min(first_order_min, wider)

    classification = classify_report(best_delta, first_order_min, alpha, tol_fd, cfg)

    logger.debug(
        f"{inst.kind} probe scaling: first_order_min={first_order_min:.3e}, "
        f"alpha={alpha}, classification={classification}"
    )
    return PerturbationReport(
        gammas=gammas,
        best_delta=best_delta,
        first_order_min=float(first_order_min),
        alpha=alpha,
        classification=classification,
        loss_at_solution=loss_at_solution,
        probes=collected,
    )


def reclassify(report: PerturbationReport, cfg: ClassifierSettings = None) -> str:
    """Classification of a stored report, recomputed from its numbers."""
    cfg = cfg or ClassifierSettings.from_settings()
    return classify_report(
        report.best_delta, report.first_order_min, report.alpha,
        tol_fd_for(report.loss_at_solution, cfg), cfg,
    )


# ──────────────────────────────────────────────
# Supporting checks
# ──────────────────────────────────────────────

def lower_bound_reference(inst: Instance, gamma: float) -> float:
    """−(√(2/π) + √(max(d1, d2)·k/m))·γ²."""
    if inst.m == 0:
        return -np.inf
    return -(SQRT_2_OVER_PI + np.sqrt(max(inst.d1, inst.d2) * inst.k / inst.m)) * gamma ** 2


def local_lower_bound_check(inst: Instance, W: FactorPair, gamma: float, n: int,
                            rng: np.random.Generator, cfg: ClassifierSettings = None) -> float:
    """Most negative delta_f over n random sphere samples and every applicable probe."""
    if n < 1:
        raise ClassifyError(f"n must be at least 1, got {n}")
    if gamma == 0:
        return 0.0
    cfg = cfg or ClassifierSettings.from_settings()
    found = applicable_probes(inst, W, gamma, rng, cfg)
    found.append(probes.random_sphere_probe(inst, W, gamma, n, rng))
    return float(min(p.delta_f for p in found if p.feasible))


def random_factor_pair(inst: Instance, rng: np.random.Generator) -> FactorPair:
    """Entries N(0, σ1/k), so products sit on the scale of X*."""
    std = np.sqrt(inst.gt.sigma1 / inst.k)
    W1 = std * rng.standard_normal((inst.d1, inst.k))
    if inst.symmetric:
        return FactorPair(W1)
    return FactorPair(W1, std * rng.standard_normal((inst.k, inst.d2)))


def global_min_check(inst: Instance, W: FactorPair, n: int, rng: np.random.Generator,
                     solve_cfg: SolveConfig = None) -> GlobalMinCheck:
    """
    Compare loss(W) against n random factor pairs and the endpoint of a
    sub-gradient run from small initialisation. Passing is evidence, not proof.
    """
    if n < 1:
        raise ClassifyError(f"n must be at least 1, got {n}")
    loss_at_solution = loss(inst, W)
    candidates = [loss(inst, random_factor_pair(inst, rng)) for _ in range(n)]

    try:
        trajectory = run_subgradient(inst, solve_cfg or SolveConfig(), rng)
        candidates.append(trajectory.records[-1].loss)
    except DivergedError as e:
        logger.warning(f"Optimizer run for the global-minimum check diverged: {e}")

    best = float(min(candidates))
    gap = loss_at_solution - best
    passed = loss_at_solution <= best + GLOBAL_MIN_SLACK
    if not passed:
        logger.info(f"Global-minimum check failed: loss(W*)={loss_at_solution:.6g} > {best:.6g}")
    return GlobalMinCheck(
        passed=passed,
        worst_gap=float(gap),
        loss_at_solution=loss_at_solution,
        best_candidate_loss=best,
    )


def rip_ratio(ens, r_prime: int, n: int, rng: np.random.Generator) -> Tuple[float, float]:
    """
    Extremes of (1/m)·Σ|⟨A_i, X⟩| over n random rank-2r′ matrices with
    ‖X‖_F = 1.

    Raises:
        ProbeInapplicableError: completion ensemble
    """
    if not ens.is_sensing:
        raise ProbeInapplicableError("The l1/l2 ratio needs a Gaussian sensing ensemble")
    if n < 1 or r_prime < 1:
        raise ClassifyError(f"Need n >= 1 and r' >= 1, got n={n}, r'={r_prime}")
    rank = 2 * r_prime
    X = np.matmul(
        rng.standard_normal((n, ens.d1, rank)),
        rng.standard_normal((n, rank, ens.d2)),
    ).reshape(n, -1)
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    ratios = np.mean(np.abs(ens.matrices.reshape(ens.m, -1) @ X.T), axis=0)
    return float(np.min(ratios)), float(np.max(ratios))


@dataclass
class RipSummary:
    r_prime: int
    n: int
    m: int
    min_ratio: float
    max_ratio: float
    reference: float = SQRT_2_OVER_PI

    def to_dict(self) -> dict:
        return {
            'r_prime': self.r_prime,
            'n': self.n,
            'm': self.m,
            'min_ratio': self.min_ratio,
            'max_ratio': self.max_ratio,
            'reference': self.reference,
        }
