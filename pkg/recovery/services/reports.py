"""
Trajectory tables and plots for single runs and multi-seed bundles.
"""

import logging
import math
from typing import List

from common.formatting import write_csv
from common.plotting import line_plot_svg
from recovery.models import RunStatusEnum, Trajectory
from recovery.services.optimizer import TrialOutcome, convergence_frequency

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ['iter', 'loss', 'rel_dist']
BUNDLE_HEADER = ['trial', 'seed', 'status', 'iter', 'loss', 'rel_dist']


def write_trajectory_csv(path, trajectory: Trajectory):
    write_csv(path, TRAJECTORY_HEADER, trajectory.rows())


def write_bundle_csv(path, outcomes: List[TrialOutcome]):
    rows = []
    for outcome in outcomes:
        records = outcome.trajectory.records if outcome.trajectory is not None else []
        for rec in records:
            rows.append((outcome.trial, outcome.seed, outcome.status, rec.iter, rec.loss, rec.rel_dist))
    write_csv(path, BUNDLE_HEADER, rows)
    logger.debug(f"Wrote {len(outcomes)} trajectories to {path}")


def trajectory_plot_svg(trajectory: Trajectory, title='') -> str:
    rows = trajectory.rows()
    return line_plot_svg(
        [('rel_dist', [r[0] for r in rows], [r[2] for r in rows])],
        title=title, y_label='relative distance',
    )


def bundle_plot_svg(outcomes: List[TrialOutcome], title='') -> str:
    series = []
    for outcome in outcomes:
        if outcome.trajectory is None or not outcome.trajectory.records:
            continue
        rows = outcome.trajectory.rows()
        label = f"seed {outcome.trial}"
        if outcome.status != RunStatusEnum.COMPLETED:
            label += f" ({outcome.status})"
        series.append((label, [r[0] for r in rows], [r[2] for r in rows]))
    return line_plot_svg(series, title=title, y_label='relative distance')


def bundle_summary(outcomes: List[TrialOutcome], threshold: float) -> dict:
    finals = [o.final_rel_dist if math.isfinite(o.final_rel_dist) else None for o in outcomes]
    return {
        'trials': len(outcomes),
        'threshold': threshold,
        'convergence_frequency': convergence_frequency(outcomes, threshold),
        'diverged': sum(o.status == RunStatusEnum.DIVERGED for o in outcomes),
        'final_rel_dist': finals,
    }
