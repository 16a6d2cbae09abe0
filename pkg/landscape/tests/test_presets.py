"""Tests for the canned experiment suites."""
import json
import os
import tempfile

from django.test import SimpleTestCase

from landscape.services.classify import ClassifierSettings
from landscape.services.presets import (
    PRESETS,
    Preset,
    PresetError,
    SolveSuite,
    fig1_preset,
    fig2_asym_preset,
    fig2_sym_preset,
    get_preset,
    run_preset,
    table1_preset,
)
from landscape.services.sweep import SweepConfig
from recovery.models import InitKindEnum, InstanceSpec, ProblemKindEnum, SolutionKindEnum, SolveConfig


class PresetDefinitionTest(SimpleTestCase):

    def test_registry(self):
        self.assertEqual(sorted(PRESETS), ['fig1', 'fig2-asym', 'fig2-sym', 'table1'])
        for name in PRESETS:
            preset = get_preset(name, trials=2)
            self.assertEqual((preset.name, preset.trials), (name, 2))
            self.assertTrue(preset.assumptions)

    def test_unknown_and_invalid(self):
        with self.assertRaises(PresetError):
            get_preset('fig3')
        with self.assertRaises(PresetError):
            get_preset('fig1', trials=0)

    def test_fig1_covers_every_formulation(self):
        preset = fig1_preset()
        self.assertEqual({s.spec.problem for s in preset.solves}, set(ProblemKindEnum.values))
        self.assertEqual(len({s.solve for s in preset.solves}), 1)
        self.assertTrue(preset.solves[0].solve.relative_step)
        self.assertTrue(all(s.spec.noise_relative for s in preset.solves))

    def test_fig2_uses_small_relative_steps(self):
        for factory in (fig2_sym_preset, fig2_asym_preset):
            suite = factory(trials=1).solves[0]
            self.assertTrue(suite.solve.relative_step)
            self.assertLess(suite.solve.eta0, 0.01)
            self.assertEqual(suite.solve.variance, 5e-5)
            self.assertEqual(suite.threshold, 1e-3)

    def test_table1_grids(self):
        preset = table1_preset(trials=3, classifier=ClassifierSettings())
        sweeps = dict(preset.sweeps)
        self.assertEqual(sweeps['ms-sym'].grid, [30, 120, 3000])
        self.assertEqual(sweeps['ms-asym'].solution_kinds,
                         [SolutionKindEnum.BALANCED, SolutionKindEnum.IMBALANCED])
        self.assertEqual(sweeps['ms-sym'].global_min_samples, 20)
        self.assertEqual(sweeps['ms-asym'].global_min_samples, 20)


class RunPresetTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _tiny_preset(self):
        spec = InstanceSpec(problem=ProblemKindEnum.MS_SYM, d1=5, d2=5, r=1, k=2, m=40, p=0.1)
        near = SolveConfig(eta0=0.01, T=5, init=InitKindEnum.NEAR_TRUTH, variance=1e-4)
        sweep = SweepConfig(spec=spec, grid=[30], solution_kinds=[SolutionKindEnum.CANONICAL], trials=1,
                            gammas=[1e-3, 3e-3, 1e-2, 3e-2], classifier=ClassifierSettings(random_directions=3))
        return Preset(
            name='tiny',
            description='smoke',
            trials=2,
            assumptions={'note': 'test'},
            solves=[
                SolveSuite(label='small', spec=spec, solve=SolveConfig(eta0=0.05, T=5), threshold=1e-2),
                SolveSuite(label='near', spec=spec, solve=near, threshold=1.0,
                           solution_kind=SolutionKindEnum.CANONICAL),
            ],
            sweeps=[('phase', sweep)],
        )

    def test_writes_summary_and_artifacts(self):
        summary = run_preset(self._tiny_preset(), self.tmp.name, base_seed=3, plot=True)
        self.assertEqual([s['label'] for s in summary['solves']], ['small', 'near'])
        self.assertEqual(summary['solves'][1]['convergence_frequency'], 1.0)
        self.assertEqual(summary['solves'][0]['eta0_effective'], 0.05)
        self.assertEqual(summary['sweeps']['phase']['base_seed'], 3)
        for name in ('small.csv', 'small.svg', 'near.csv', 'summary.json', os.path.join('phase', 'phase.csv')):
            self.assertTrue(os.path.exists(os.path.join(self.tmp.name, name)), name)
        with open(os.path.join(self.tmp.name, 'summary.json')) as fh:
            self.assertEqual(json.load(fh)['assumptions'], {'note': 'test'})

    def test_reproducible(self):
        first = run_preset(self._tiny_preset(), os.path.join(self.tmp.name, 'a'), base_seed=1)
        second = run_preset(self._tiny_preset(), os.path.join(self.tmp.name, 'b'), base_seed=1)
        self.assertEqual(first['solves'], second['solves'])
