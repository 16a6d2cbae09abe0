"""
Result types for landscape probing: probe results, perturbation reports and
phase-sweep rows.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from django.db import models

from recovery.models import FactorPair


class ClassificationEnum(models.TextChoices):
    NON_CRITICAL = 'NonCritical', 'Non-critical'
    STRICT_SADDLE_CANDIDATE = 'StrictSaddleCandidate', 'Strict saddle candidate'
    NO_DESCENT_FOUND = 'NoDescentFound', 'No descent found'
    INCONCLUSIVE = 'Inconclusive', 'Inconclusive'


class ProbeNameEnum(models.TextChoices):
    SYM_COMPLETION = 'sym_completion', 'Symmetric completion, diagonal outlier'
    SYM_SENSING = 'sym_sensing', 'Symmetric sensing, Grassmannian'
    ASYM_COMPLETION_FIRST_ORDER = 'asym_completion_first_order', 'Asymmetric completion, witness first order'
    ASYM_COMPLETION_COHERENT = 'asym_completion_coherent', 'Asymmetric completion, coherent'
    ASYM_COMPLETION_SECOND_ORDER = 'asym_completion_second_order', 'Asymmetric completion, second order'
    ASYM_SENSING_FIRST_ORDER = 'asym_sensing_first_order', 'Asymmetric sensing, right factor'
    ASYM_SENSING_FIRST_ORDER_LEFT = 'asym_sensing_first_order_left', 'Asymmetric sensing, left factor'
    ASYM_SENSING_SECOND_ORDER = 'asym_sensing_second_order', 'Asymmetric sensing, second order'
    ASYM_SENSING_GRASSMANN = 'asym_sensing_grassmann', 'Asymmetric sensing, singular-subspace'
    SYM_SENSING_REFINED = 'sym_sensing_refined', 'Symmetric sensing, refined search'
    ASYM_SENSING_REFINED = 'asym_sensing_refined', 'Asymmetric sensing, refined search'
    RANDOM_SPHERE = 'random_sphere', 'Random sphere baseline'
    DIRECTION = 'direction', 'Given direction'


class SweepStatusEnum(models.TextChoices):
    OK = 'ok', 'OK'
    FAILED = 'failed', 'Failed'


CLASSIFICATION_ORDER = list(ClassificationEnum.values)

CLASSIFICATION_COLORS = {
    ClassificationEnum.NON_CRITICAL: '#d7191c',
    ClassificationEnum.STRICT_SADDLE_CANDIDATE: '#fdae61',
    ClassificationEnum.NO_DESCENT_FOUND: '#1a9641',
    ClassificationEnum.INCONCLUSIVE: '#bababa',
}


@dataclass(eq=False)
class ProbeResult:
    name: str
    gamma: float
    dW: Optional[FactorPair]
    delta_f: float
    predicted: Optional[float]
    feasible: bool
    diag: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'gamma': self.gamma,
            'delta_f': self.delta_f,
            'predicted': self.predicted,
            'feasible': self.feasible,
            'diag': self.diag,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> 'ProbeResult':
        return cls(
            name=payload['name'],
            gamma=payload['gamma'],
            dW=None,
            delta_f=payload['delta_f'],
            predicted=payload.get('predicted'),
            feasible=payload['feasible'],
            diag=payload.get('diag', {}),
        )


@dataclass(eq=False)
class PerturbationReport:
    gammas: List[float]
    best_delta: List[float]
    first_order_min: float
    alpha: Optional[float]
    classification: str
    loss_at_solution: float = 0.0
    probes: List[ProbeResult] = field(default_factory=list)

    @property
    def best_delta_at_max(self) -> float:
        return self.best_delta[-1]

    def to_dict(self) -> dict:
        return {
            'gammas': self.gammas,
            'best_delta': self.best_delta,
            'first_order_min': self.first_order_min,
            'alpha': self.alpha,
            'classification': self.classification,
            'loss_at_solution': self.loss_at_solution,
            'probes': [probe.to_dict() for probe in self.probes],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> 'PerturbationReport':
        return cls(
            gammas=list(payload['gammas']),
            best_delta=list(payload['best_delta']),
            first_order_min=payload['first_order_min'],
            alpha=payload.get('alpha'),
            classification=payload['classification'],
            loss_at_solution=payload.get('loss_at_solution', 0.0),
            probes=[ProbeResult.from_dict(p) for p in payload.get('probes', [])],
        )


@dataclass
class GlobalMinCheck:
    passed: bool
    worst_gap: float
    loss_at_solution: float
    best_candidate_loss: float

    def to_dict(self) -> dict:
        return {
            'passed': self.passed,
            'worst_gap': self.worst_gap,
            'loss_at_solution': self.loss_at_solution,
            'best_candidate_loss': self.best_candidate_loss,
        }


@dataclass
class SweepRow:
    cell: int
    m: int
    solution_kind: str
    trial: int
    seed: int
    status: str
    classification: str = ''
    alpha: Optional[float] = None
    first_order_min: Optional[float] = None
    best_delta_at_max: Optional[float] = None
    global_min: str = ''
    message: str = ''

    @property
    def key(self):
        return (self.cell, self.solution_kind, self.trial)

    def as_csv_row(self) -> list:
        return [
            self.cell, self.m, self.solution_kind, self.trial, self.seed, self.status,
            self.classification, self.alpha, self.first_order_min, self.best_delta_at_max,
            self.global_min, self.message,
        ]

    def to_dict(self) -> dict:
        return dict(zip(SWEEP_CSV_HEADER, self.as_csv_row()))

    @classmethod
    def from_dict(cls, payload: dict) -> 'SweepRow':
        """Accepts both to_dict() output and csv.DictReader rows (all strings)."""
        def _opt_float(value):
            if value is None or value == '':
                return None
            return float(value)

        return cls(
            cell=int(payload['cell']),
            m=int(payload['m']),
            solution_kind=payload['solution_kind'],
            trial=int(payload['trial']),
            seed=int(payload['seed']),
            status=payload['status'],
            classification=payload.get('classification') or '',
            alpha=_opt_float(payload.get('alpha')),
            first_order_min=_opt_float(payload.get('first_order_min')),
            best_delta_at_max=_opt_float(payload.get('best_delta_at_gamma_max')),
            global_min=payload.get('global_min') or '',
            message=payload.get('message') or '',
        )


SWEEP_CSV_HEADER = [
    'cell', 'm', 'solution_kind', 'trial', 'seed', 'status', 'classification',
    'alpha', 'first_order_min', 'best_delta_at_gamma_max', 'global_min', 'message',
]
