"""
Domain types for recovery problems.

Nothing here is stored in the database: problem data lives in memory as
immutable dataclasses and on disk as LRL1 instance files. The TextChoices
enums double as CLI choices and on-disk tags.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np
from django.conf import settings
from django.db import models


class GroundTruthKindEnum(models.TextChoices):
    GENERIC = 'generic', 'Generic'
    PSD_SYMMETRIC = 'psd-symmetric', 'PSD symmetric'
    COHERENT = 'coherent', 'Coherent'


class EnsembleKindEnum(models.TextChoices):
    SENSING = 'sensing', 'Gaussian sensing'
    COMPLETION = 'completion', 'Bernoulli completion'


class NoiseKindEnum(models.TextChoices):
    GAUSSIAN = 'gaussian', 'Gaussian'
    SYMMETRIC_OUTLIER = 'symmetric-outlier', 'Symmetric outlier'
    POSITIVE_OUTLIER = 'positive-outlier', 'Positive outlier'


class ProblemKindEnum(models.TextChoices):
    MS_SYM = 'ms-sym', 'Symmetric matrix sensing'
    MS_ASYM = 'ms-asym', 'Asymmetric matrix sensing'
    MC_SYM = 'mc-sym', 'Symmetric matrix completion'
    MC_ASYM = 'mc-asym', 'Asymmetric matrix completion'


class SolutionKindEnum(models.TextChoices):
    ROTATED = 'rotated', 'Symmetric, Haar rotation'
    CANONICAL = 'canonical', 'Symmetric, canonical embedding'
    BALANCED = 'balanced', 'Asymmetric, balanced'
    IMBALANCED = 'imbalanced', 'Asymmetric, rank-imbalanced'
    WITNESS = 'witness', 'Asymmetric, completion witness'


class InitKindEnum(models.TextChoices):
    SMALL = 'small', 'Small random'
    NEAR_TRUTH = 'near-truth', 'Perturbed true solution'


class RunStatusEnum(models.TextChoices):
    COMPLETED = 'completed', 'Completed'
    DIVERGED = 'diverged', 'Diverged'
    FAILED = 'failed', 'Failed'


# Binary tags for the instance file; append only
GROUND_TRUTH_TAGS = list(GroundTruthKindEnum.values)
NOISE_TAGS = list(NoiseKindEnum.values)
PROBLEM_TAGS = list(ProblemKindEnum.values)

SYMMETRIC_PROBLEMS = (ProblemKindEnum.MS_SYM, ProblemKindEnum.MC_SYM)
SENSING_PROBLEMS = (ProblemKindEnum.MS_SYM, ProblemKindEnum.MS_ASYM)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    d1: int
    d2: int
    r: int
    Ustar: np.ndarray
    Sigmastar: np.ndarray
    Vstar: np.ndarray
    Xstar: np.ndarray
    kind: str = GroundTruthKindEnum.GENERIC

    @property
    def sigma1(self) -> float:
        return float(self.Sigmastar[0])

    @property
    def sigma_r(self) -> float:
        return float(self.Sigmastar[-1])


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """Sensing matrices as an (m, d1, d2) stack, or completion index pairs as an (m, 2) array."""
    kind: str
    d1: int
    d2: int
    matrices: Optional[np.ndarray] = None
    indices: Optional[np.ndarray] = None
    s: Optional[float] = None

    @property
    def m(self) -> int:
        if self.kind == EnsembleKindEnum.SENSING:
            return int(self.matrices.shape[0])
        return int(self.indices.shape[0])

    @property
    def is_sensing(self) -> bool:
        return self.kind == EnsembleKindEnum.SENSING


@dataclass(frozen=True)
class NoiseModel:
    kind: str = NoiseKindEnum.SYMMETRIC_OUTLIER
    scale: float = 1.0


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    p: float
    model: NoiseModel
    S: np.ndarray
    eps: np.ndarray
    t0: float
    p0: float
    St: np.ndarray

    @property
    def m(self) -> int:
        return int(self.eps.shape[0])


@dataclass(frozen=True, eq=False)
class FactorPair:
    """
    A point of the factorized model. Symmetric pairs keep only W1 (d×k);
    the right factor is then W1ᵀ.
    """
    W1: np.ndarray
    W2: Optional[np.ndarray] = None

    @property
    def symmetric(self) -> bool:
        return self.W2 is None

    @property
    def left(self) -> np.ndarray:
        return self.W1

    @property
    def right(self) -> np.ndarray:
        return self.W1.T if self.W2 is None else self.W2

    @property
    def k(self) -> int:
        return int(self.W1.shape[1])

    def product(self) -> np.ndarray:
        return self.left @ self.right

    def norm(self) -> float:
        """Joint Frobenius norm of the stored factors."""
        total = float(np.sum(self.W1 * self.W1))
        if self.W2 is not None:
            total += float(np.sum(self.W2 * self.W2))
        return float(np.sqrt(total))

    def inner(self, other: 'FactorPair') -> float:
        value = float(np.sum(self.W1 * other.W1))
        if self.W2 is not None:
            value += float(np.sum(self.W2 * other.W2))
        return value

    def scaled(self, alpha: float) -> 'FactorPair':
        return FactorPair(alpha * self.W1, None if self.W2 is None else alpha * self.W2)

    def __add__(self, other: 'FactorPair') -> 'FactorPair':
        return FactorPair(self.W1 + other.W1, None if self.W2 is None else self.W2 + other.W2)

    def __sub__(self, other: 'FactorPair') -> 'FactorPair':
        return self + other.scaled(-1.0)

    def zeros_like(self) -> 'FactorPair':
        return FactorPair(np.zeros_like(self.W1), None if self.W2 is None else np.zeros_like(self.W2))

    def transposed(self) -> 'FactorPair':
        """(W1, W2) ↦ (W2ᵀ, W1ᵀ), a true solution of the transposed problem."""
        if self.W2 is None:
            return self
        return FactorPair(self.W2.T.copy(), self.W1.T.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.W1)) and (self.W2 is None or np.all(np.isfinite(self.W2))))

    def to_dict(self) -> dict:
        payload = {'W1': self.W1.tolist()}
        if self.W2 is not None:
            payload['W2'] = self.W2.tolist()
        return payload


@dataclass(frozen=True, eq=False)
class Instance:
    gt: GroundTruth
    ens: MeasurementEnsemble
    noise: NoiseRealization
    y: np.ndarray
    k: int
    symmetric: bool = False

    @property
    def m(self) -> int:
        return int(self.y.shape[0])

    @property
    def d1(self) -> int:
        return self.gt.d1

    @property
    def d2(self) -> int:
        return self.gt.d2

    @property
    def r(self) -> int:
        return self.gt.r

    @property
    def kind(self) -> str:
        if self.ens.is_sensing:
            return ProblemKindEnum.MS_SYM if self.symmetric else ProblemKindEnum.MS_ASYM
        return ProblemKindEnum.MC_SYM if self.symmetric else ProblemKindEnum.MC_ASYM

    def noise_matrix(self) -> np.ndarray:
        """Completion noise laid out as E[x, y] (zero off the observed set)."""
        E = np.zeros((self.d1, self.d2))
        idx = self.ens.indices
        E[idx[:, 0], idx[:, 1]] = self.noise.eps
        return E

    def with_search_rank(self, k: int) -> 'Instance':
        return replace(self, k=int(k))


@dataclass(frozen=True)
class InstanceSpec:
    """Everything generate_instance needs to build one problem."""
    problem: str = ProblemKindEnum.MS_SYM
    d1: int = 20
    d2: int = 20
    r: int = 2
    k: int = 4
    m: int = 100
    s: float = 0.8
    p: float = 0.1
    noise: NoiseModel = field(default_factory=NoiseModel)
    noise_relative: bool = False
    gt_kind: Optional[str] = None

    @property
    def is_sensing(self) -> bool:
        return self.problem in SENSING_PROBLEMS

    @property
    def symmetric(self) -> bool:
        return self.problem in SYMMETRIC_PROBLEMS


@dataclass(frozen=True)
class SolveConfig:
    eta0: float = 0.1
    q: float = 0.999
    T: int = 5000
    init: str = InitKindEnum.SMALL
    scale: Optional[float] = None
    variance: float = 5e-5
    solution_kind: Optional[str] = None
    divergence_factor: float = 1e6
    init_scale_factor: float = 1e-3
    # eta0 in units of 1/step_reference(inst)
    relative_step: bool = False

    @classmethod
    def from_settings(cls, **overrides) -> 'SolveConfig':
        """Defaults from the LAB_* settings; None-valued overrides are ignored."""
        values = {
            'eta0': settings.LAB_ETA0,
            'q': settings.LAB_Q,
            'T': settings.LAB_T,
            'divergence_factor': settings.LAB_DIVERGENCE_FACTOR,
            'init_scale_factor': settings.LAB_INIT_SCALE_FACTOR,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


@dataclass(frozen=True)
class TrajectoryRecord:
    iter: int
    loss: float
    rel_dist: float


@dataclass(eq=False)
class Trajectory:
    records: List[TrajectoryRecord]
    final: FactorPair
    status: str = RunStatusEnum.COMPLETED

    @property
    def final_rel_dist(self) -> float:
        return self.records[-1].rel_dist

    def rows(self):
        return [(rec.iter, rec.loss, rec.rel_dist) for rec in self.records]
