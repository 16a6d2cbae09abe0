"""Tests for trajectory tables and bundle summaries."""
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from common.formatting import read_csv_rows
from recovery.models import FactorPair, RunStatusEnum, Trajectory, TrajectoryRecord
from recovery.services import reports
from recovery.services.optimizer import TrialOutcome


def _trajectory(final, steps=3):
    records = [TrajectoryRecord(i, 1.0 / (i + 1), final if i == steps else 1.0) for i in range(steps + 1)]
    return Trajectory(records=records, final=FactorPair(np.zeros((2, 1))))


class BundleReportTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.outcomes = [
            TrialOutcome(trial=0, seed=11, trajectory=_trajectory(1e-4), status=RunStatusEnum.COMPLETED),
            TrialOutcome(trial=1, seed=12, trajectory=_trajectory(0.5), status=RunStatusEnum.COMPLETED),
            TrialOutcome(trial=2, seed=13, trajectory=None, status=RunStatusEnum.FAILED, message='boom'),
        ]

    def test_summary(self):
        summary = reports.bundle_summary(self.outcomes, 1e-2)
        self.assertEqual(summary['trials'], 3)
        self.assertAlmostEqual(summary['convergence_frequency'], 1 / 3)
        self.assertEqual(summary['final_rel_dist'], [1e-4, 0.5, None])
        self.assertEqual(summary['diverged'], 0)

    def test_bundle_csv_skips_missing_trajectories(self):
        path = os.path.join(self.tmp.name, 'bundle.csv')
        reports.write_bundle_csv(path, self.outcomes)
        rows = read_csv_rows(path)
        self.assertEqual(len(rows), 8)
        self.assertEqual(list(rows[0]), reports.BUNDLE_HEADER)
        self.assertEqual(float(rows[3]['rel_dist']), 1e-4)

    def test_bundle_plot_labels_status(self):
        self.outcomes[1].status = RunStatusEnum.DIVERGED
        svg = reports.bundle_plot_svg(self.outcomes, title='bundle')
        self.assertIn('seed 1 (diverged)', svg)
        self.assertNotIn('seed 2', svg)
