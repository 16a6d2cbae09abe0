"""
Phase sweeps: classify true solutions over a grid of sample sizes.

One job is one (cell, solution kind, trial) triple. The grid axis is the
measurement count m for sensing and the sampling rate s for completion.
Jobs for the same (cell, trial) share their instance, so every solution
kind is probed on the same realization. Rows are appended to phase.csv as
they arrive and a rerun skips the keys already present.
"""

import logging
import multiprocessing as mp
import os
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Dict, List, Optional

import numpy as np
from django.conf import settings

from common.formatting import append_csv_row, read_csv_rows, write_csv, write_json
from common.plotting import heat_grid_svg
from common.rng import derive_job_seed, make_streams
from landscape.models import (
    CLASSIFICATION_COLORS,
    CLASSIFICATION_ORDER,
    SWEEP_CSV_HEADER,
    SweepRow,
    SweepStatusEnum,
)
from landscape.services.classify import ClassifierSettings, ClassifyError, global_min_check, probe_scaling
from recovery.models import InstanceSpec, NoiseModel, SolveConfig
from recovery.services.problem import construct_solution, generate_instance

logger = logging.getLogger(__name__)

PHASE_CSV = 'phase.csv'
SUMMARY_JSON = 'summary.json'
PHASE_SVG = 'phase.svg'


@dataclass(frozen=True)
class SweepConfig:
    spec: InstanceSpec
    grid: List[float]
    solution_kinds: List[str]
    trials: int = 10
    base_seed: int = 0
    gammas: Optional[List[float]] = None
    classifier: ClassifierSettings = field(default_factory=ClassifierSettings)
    global_min_samples: int = 0
    solve: SolveConfig = field(default_factory=SolveConfig)

    @property
    def axis(self) -> str:
        return 'm' if self.spec.is_sensing else 's'

    def cell_spec(self, cell: int) -> InstanceSpec:
        value = self.grid[cell]
        if self.spec.is_sensing:
            return replace(self.spec, m=int(value))
        return replace(self.spec, s=float(value))

    def validate(self):
        if not self.grid:
            raise ClassifyError("Sweep grid is empty")
        if not self.solution_kinds:
            raise ClassifyError("Sweep needs at least one solution kind")
        if self.trials < 1:
            raise ClassifyError(f"Sweep needs at least one trial, got {self.trials}")


@dataclass(frozen=True)
class SweepJob:
    cell: int
    solution_kind: str
    trial: int
    seed: int
    spec: InstanceSpec
    classifier: ClassifierSettings
    gammas: Optional[List[float]] = None
    global_min_samples: int = 0
    solve: SolveConfig = field(default_factory=SolveConfig)

    @property
    def key(self):
        return (self.cell, self.solution_kind, self.trial)

    def to_payload(self) -> dict:
        """JSON-safe form for the Celery broker."""
        return {
            'cell': self.cell,
            'solution_kind': self.solution_kind,
            'trial': self.trial,
            'seed': self.seed,
            'spec': asdict(self.spec),
            'classifier': self.classifier.to_dict(),
            'gammas': self.gammas,
            'global_min_samples': self.global_min_samples,
            'solve': asdict(self.solve),
        }

    @classmethod
    def from_payload(cls, payload: dict) -> 'SweepJob':
        spec = dict(payload['spec'])
        spec['noise'] = NoiseModel(**spec['noise'])
        return cls(
            cell=payload['cell'],
            solution_kind=payload['solution_kind'],
            trial=payload['trial'],
            seed=payload['seed'],
            spec=InstanceSpec(**spec),
            classifier=ClassifierSettings.from_dict(payload['classifier']),
            gammas=payload.get('gammas'),
            global_min_samples=payload.get('global_min_samples', 0),
            solve=SolveConfig(**payload['solve']),
        )


def build_jobs(config: SweepConfig) -> List[SweepJob]:
    config.validate()
    jobs = []
    for cell in range(len(config.grid)):
        spec = config.cell_spec(cell)
        for kind in config.solution_kinds:
            for trial in range(config.trials):
                jobs.append(SweepJob(
                    cell=cell,
                    solution_kind=kind,
                    trial=trial,
                    seed=derive_job_seed(config.base_seed, cell, trial),
                    spec=spec,
                    classifier=config.classifier,
                    gammas=config.gammas,
                    global_min_samples=config.global_min_samples,
                    solve=config.solve,
                ))
    return jobs


def run_sweep_job(job: SweepJob) -> SweepRow:
    """Generate, construct, probe and classify one job. Failures become rows."""
    streams = make_streams(job.seed)
    try:
        inst = generate_instance(job.spec, streams.instance)
        W = construct_solution(inst, job.solution_kind, streams.solution)
        report = probe_scaling(inst, W, job.gammas, streams.probe, job.classifier)

        global_min = ''
        if job.global_min_samples > 0:
            check = global_min_check(inst, W, job.global_min_samples, streams.solver, job.solve)
            global_min = 'pass' if check.passed else 'fail'

        return SweepRow(
            cell=job.cell,
            m=inst.m,
            solution_kind=job.solution_kind,
            trial=job.trial,
            seed=job.seed,
            status=SweepStatusEnum.OK,
            classification=report.classification,
            alpha=report.alpha,
            first_order_min=report.first_order_min,
            best_delta_at_max=report.best_delta_at_max,
            global_min=global_min,
        )
    except Exception as e:
        logger.error(f"Sweep job {job.key} failed: {e}", exc_info=True)
        return SweepRow(
            cell=job.cell,
            m=job.spec.m if job.spec.is_sensing else 0,
            solution_kind=job.solution_kind,
            trial=job.trial,
            seed=job.seed,
            status=SweepStatusEnum.FAILED,
            message=str(e),
        )


# ──────────────────────────────────────────────
# Execution
# ──────────────────────────────────────────────

def _execute_celery(jobs: List[SweepJob], on_row: Callable[[SweepRow], None]):
    from celery import group

    from landscape.tasks import run_sweep_job_task

    result = group(run_sweep_job_task.s(job.to_payload()) for job in jobs).apply_async()
    for payload in result.get(disable_sync_subtasks=False):
        on_row(SweepRow.from_dict(payload))


def execute_jobs(jobs: List[SweepJob], workers: int = 1,
                 on_row: Optional[Callable[[SweepRow], None]] = None) -> List[SweepRow]:
    """
    Run jobs serially, on a process pool, or as a Celery group when
    LAB_USE_CELERY is set. on_row sees each row in the parent process.
    """
    rows = []

    def collect(row: SweepRow):
        rows.append(row)
        if on_row is not None:
            on_row(row)

    if not jobs:
        return rows
    if settings.LAB_USE_CELERY:
        logger.info(f"Dispatching {len(jobs)} sweep jobs to Celery")
        _execute_celery(jobs, collect)
    elif workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            collect(run_sweep_job(job))
    else:
        with mp.Pool(processes=min(workers, len(jobs))) as pool:
            for row in pool.imap_unordered(run_sweep_job, jobs, chunksize=1):
                collect(row)

    rows.sort(key=lambda row: row.key)
    return rows


# ──────────────────────────────────────────────
# Aggregation
# ──────────────────────────────────────────────

def modal_classification(counts: Counter) -> Optional[str]:
    """Most frequent label; ties go to the earlier label in CLASSIFICATION_ORDER."""
    if not counts:
        return None
    return min(counts, key=lambda label: (-counts[label], CLASSIFICATION_ORDER.index(label)))


def aggregate(rows: List[SweepRow], config: SweepConfig) -> List[Dict]:
    cells = []
    for cell, value in enumerate(config.grid):
        for kind in config.solution_kinds:
            group_rows = [row for row in rows if row.cell == cell and row.solution_kind == kind]
            ok = [row for row in group_rows if row.status == SweepStatusEnum.OK]
            counts = Counter(row.classification for row in ok)
            alphas = [row.alpha for row in ok if row.alpha is not None]
            checked = [row for row in ok if row.global_min]

            entry = {
                'cell': cell,
                config.axis: value,
                'solution_kind': kind,
                'trials': len(group_rows),
                'failed': len(group_rows) - len(ok),
                'modal': modal_classification(counts),
                'frequencies': {
                    label: counts.get(label, 0) / len(ok) if ok else 0.0
                    for label in CLASSIFICATION_ORDER
                },
                'median_alpha': float(np.median(alphas)) if alphas else None,
            }
            if ok:
                entry['mean_m'] = float(np.mean([row.m for row in ok]))
            if checked:
                entry['global_min_pass_rate'] = sum(row.global_min == 'pass' for row in checked) / len(checked)
            cells.append(entry)
    return cells


def render_phase_grid(cells: List[Dict], config: SweepConfig, title: str = '') -> str:
    col_labels = [f"{config.axis}={value:g}" for value in config.grid]
    grid = {}
    for entry in cells:
        modal = entry['modal'] or ''
        freq = entry['frequencies'].get(modal, 0.0) if modal else 0.0
        caption = f"{modal[:12]} {freq:.0%}" if modal else 'n/a'
        grid[(entry['solution_kind'], col_labels[entry['cell']])] = (modal, caption)
    return heat_grid_svg(list(config.solution_kinds), col_labels, grid, CLASSIFICATION_COLORS, title=title)


def run_sweep(config: SweepConfig, out_dir: str, workers: int = 1, plot: bool = False,
              extra: Optional[Dict] = None) -> Dict:
    """
    Execute the sweep into out_dir and write phase.csv, summary.json and,
    with plot=True, phase.svg. Returns the summary payload.
    """
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, PHASE_CSV)

    existing = [SweepRow.from_dict(row) for row in read_csv_rows(csv_path)]
    done = {row.key for row in existing}
    jobs = build_jobs(config)
    pending = [job for job in jobs if job.key not in done]
    if done:
        logger.info(f"Resuming sweep: {len(done)} rows present, {len(pending)} jobs pending")

    def persist(row: SweepRow):
        append_csv_row(csv_path, SWEEP_CSV_HEADER, row.as_csv_row())
        logger.debug(f"Sweep row {row.key}: {row.status} {row.classification}")

    new_rows = execute_jobs(pending, workers=workers, on_row=persist)
    wanted = {job.key for job in jobs}
    rows = sorted((row for row in existing + new_rows if row.key in wanted), key=lambda row: row.key)
    write_csv(csv_path, SWEEP_CSV_HEADER, [row.as_csv_row() for row in rows])

    cells = aggregate(rows, config)
    summary = {
        'problem': config.spec.problem,
        'axis': config.axis,
        'grid': list(config.grid),
        'solution_kinds': list(config.solution_kinds),
        'trials': config.trials,
        'base_seed': config.base_seed,
        'classifier': config.classifier.to_dict(),
        'cells': cells,
    }
    if extra:
        summary.update(extra)
    write_json(os.path.join(out_dir, SUMMARY_JSON), summary)

    if plot:
        svg = render_phase_grid(cells, config, title=f"{config.spec.problem} phase table")
        with open(os.path.join(out_dir, PHASE_SVG), 'w', encoding='utf-8') as fh:
            fh.write(svg)

    failed = sum(row.status == SweepStatusEnum.FAILED for row in rows)
    logger.info(f"Sweep finished: {len(rows)} rows, {failed} failed, written to {out_dir}")
    return summary
