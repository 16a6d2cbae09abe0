"""Tests for exponent fitting, classification and the supporting checks."""
from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase, override_settings

from landscape.models import ClassificationEnum, PerturbationReport, ProbeNameEnum, ProbeResult
from landscape.services.classify import (
    SQRT_2_OVER_PI,
    ClassifierSettings,
    ClassifyError,
    InvalidGammaGridError,
    classify_report,
    default_gammas,
    fit_exponent,
    global_min_check,
    local_lower_bound_check,
    lower_bound_reference,
    probe_scaling,
    reclassify,
    rip_ratio,
    validate_gammas,
)
from landscape.services.probes import ProbeInapplicableError, asym_completion_coherent_probe, random_direction
from recovery.models import (
    GroundTruthKindEnum,
    InstanceSpec,
    NoiseKindEnum,
    NoiseModel,
    ProblemKindEnum,
    SolutionKindEnum,
    SolveConfig,
)
from recovery.services.loss import directional_derivative
from recovery.services.problem import construct_solution, generate_instance, sample_sensing

FAST = ClassifierSettings(random_directions=20)
GAMMAS = list(np.geomspace(1e-3, 1e-1, 6))


def _instance(problem, seed=0, **kwargs):
    return generate_instance(InstanceSpec(problem=problem, **kwargs), np.random.default_rng(seed))


class ExponentFitTest(SimpleTestCase):

    def test_recovers_power_laws(self):
        gammas = np.geomspace(0.01, 0.1, 8)
        for a in (1.0, 2.0):
            self.assertAlmostEqual(fit_exponent(gammas, -3.0 * gammas ** a), a, delta=0.02)

    def test_ignores_non_negative_points(self):
        gammas = [0.01, 0.02, 0.05, 0.1]
        deltas = [0.0, -4e-4, -2.5e-3, -1e-2]
        self.assertAlmostEqual(fit_exponent(gammas, deltas), 2.0, places=6)

    def test_needs_two_points(self):
        self.assertIsNone(fit_exponent([0.01, 0.1], [-1.0, 0.0]))


class GammaGridTest(SimpleTestCase):

    def test_default_grid_respects_threshold(self):
        inst = _instance(ProblemKindEnum.MC_SYM, d1=5, d2=5, r=1, k=2, s=1.0, p=0.3,
                         noise=NoiseModel(NoiseKindEnum.POSITIVE_OUTLIER, 0.04))
        gammas = default_gammas(inst)
        self.assertEqual(len(gammas), 8)
        self.assertAlmostEqual(gammas[-1], 0.1 * 0.2)
        validate_gammas(gammas)

    def test_invalid_grids(self):
        for grid in ([0.1, 0.2, 0.3], [0.01, 0.02, 0.02, 0.2], [0.0, 0.01, 0.1, 1.0], [0.1, 0.2, 0.4, 0.8]):
            with self.assertRaises(InvalidGammaGridError):
                validate_gammas(grid)


class ClassifyReportTest(SimpleTestCase):

    def test_labels(self):
        cfg = ClassifierSettings()
        quadratic = [-g ** 2 for g in GAMMAS]
        self.assertEqual(classify_report(quadratic, -1.0, 2.0, 1e-8, cfg), ClassificationEnum.NON_CRITICAL)
        self.assertEqual(classify_report(quadratic, 0.0, 2.0, 1e-8, cfg),
                         ClassificationEnum.STRICT_SADDLE_CANDIDATE)
        self.assertEqual(classify_report([0.0] * 6, 0.0, None, 1e-8, cfg), ClassificationEnum.NO_DESCENT_FOUND)
        self.assertEqual(classify_report(quadratic, 0.0, 1.0, 1e-8, cfg), ClassificationEnum.INCONCLUSIVE)
        mixed = [0.0] * 3 + [-1e-3] * 3
        self.assertEqual(classify_report(mixed, 0.0, 2.0, 1e-8, cfg), ClassificationEnum.INCONCLUSIVE)

    def test_stored_report_reclassifies_identically(self):
        report = PerturbationReport(
            gammas=GAMMAS, best_delta=[-0.5 * g ** 2 for g in GAMMAS], first_order_min=0.0,
            alpha=2.0, classification=ClassificationEnum.STRICT_SADDLE_CANDIDATE, loss_at_solution=1.0,
        )
        restored = PerturbationReport.from_dict(report.to_dict())
        self.assertEqual(reclassify(restored, ClassifierSettings()), report.classification)

    @override_settings(LAB_QUADRATIC_BAND=[1.9, 2.1], LAB_RANDOM_DIRECTIONS=7)
    def test_settings_feed_defaults(self):
        cfg = ClassifierSettings.from_settings(tau=0.5)
        self.assertEqual(cfg.quadratic_band, (1.9, 2.1))
        self.assertEqual(cfg.random_directions, 7)
        self.assertEqual(ClassifierSettings.from_dict(cfg.to_dict()), cfg)


class ProbeScalingTest(SimpleTestCase):

    def test_sym_completion_is_quadratic(self):
        for seed in range(20):
            inst = _instance(ProblemKindEnum.MC_SYM, seed, d1=6, d2=6, r=1, k=2, s=1.0, p=0.3,
                             noise=NoiseModel(NoiseKindEnum.POSITIVE_OUTLIER, 1.0))
            diagonal = inst.ens.indices[:, 0] == inst.ens.indices[:, 1]
            if np.any(diagonal & (inst.noise.eps >= inst.noise.t0)):
                break
        W = construct_solution(inst, SolutionKindEnum.ROTATED, np.random.default_rng(0))
        report = probe_scaling(inst, W, None, np.random.default_rng(1), FAST)
        for gamma, best in zip(report.gammas, report.best_delta):
            self.assertLessEqual(best, -gamma ** 2 / inst.m * (1.0 - 1e-9))
        self.assertEqual(report.classification, ClassificationEnum.STRICT_SADDLE_CANDIDATE)
        self.assertAlmostEqual(report.alpha, 2.0, delta=0.05)

    def test_coherent_exactly_parameterized_is_non_critical(self):
        for seed in range(20):
            inst = _instance(ProblemKindEnum.MC_ASYM, seed, d1=6, d2=6, r=2, k=2, s=1.0, p=0.3,
                             gt_kind=GroundTruthKindEnum.COHERENT, noise=NoiseModel(NoiseKindEnum.SYMMETRIC_OUTLIER, 5.0))
            W = construct_solution(inst, SolutionKindEnum.BALANCED)
            if asym_completion_coherent_probe(inst, W, GAMMAS[-1]).feasible:
                break
        report = probe_scaling(inst, W, GAMMAS, np.random.default_rng(0), FAST)
        self.assertEqual(report.classification, ClassificationEnum.NON_CRITICAL)
        self.assertLess(report.first_order_min, 0.0)

    def test_noiseless_oversampled_sensing_has_no_descent(self):
        inst = _instance(ProblemKindEnum.MS_SYM, 2, d1=6, d2=6, r=1, k=2, m=300, p=0.0)
        W = construct_solution(inst, SolutionKindEnum.ROTATED, np.random.default_rng(0))
        report = probe_scaling(inst, W, GAMMAS, np.random.default_rng(0), FAST)
        self.assertEqual(report.classification, ClassificationEnum.NO_DESCENT_FOUND)
        self.assertIsNone(report.alpha)

    def test_invalid_grid(self):
        inst = _instance(ProblemKindEnum.MS_SYM, d1=4, d2=4, r=1, k=1, m=10)
        W = construct_solution(inst, SolutionKindEnum.CANONICAL)
        with self.assertRaises(InvalidGammaGridError):
            probe_scaling(inst, W, [0.1, 0.2], np.random.default_rng(0), FAST)


@patch('landscape.services.classify.first_order_scan')
@patch('landscape.services.classify.probes.random_sphere_probe')
@patch('landscape.services.classify.applicable_probes', return_value=[])
class FirstOrderBandTest(SimpleTestCase):

    def setUp(self):
        self.inst = _instance(ProblemKindEnum.MS_SYM, d1=6, d2=6, r=1, k=2, m=30)
        self.W = construct_solution(self.inst, SolutionKindEnum.CANONICAL)

    def _decrease(self, power):
        def sphere(inst, W, gamma, n, rng):
            return ProbeResult(name=ProbeNameEnum.RANDOM_SPHERE, gamma=gamma, dW=None,
                               delta_f=-gamma ** power, predicted=None, feasible=True)
        return sphere

    def _scale(self):
        return probe_scaling(self.inst, self.W, GAMMAS, np.random.default_rng(0), FAST)

    def test_linear_decrease_triggers_wider_scan(self, _, sphere, scan):
        sphere.side_effect = self._decrease(1)
        scan.side_effect = [0.0, -1e-3]
        report = self._scale()
        self.assertEqual(report.classification, ClassificationEnum.NON_CRITICAL)
        self.assertEqual(report.first_order_min, -1e-3)
        self.assertEqual(scan.call_count, 2)
        self.assertEqual(scan.call_args.args[3], 4 * FAST.random_directions)

    def test_linear_decrease_without_negative_derivative(self, _, sphere, scan):
        sphere.side_effect = self._decrease(1)
        scan.return_value = 0.0
        report = self._scale()
        self.assertAlmostEqual(report.alpha, 1.0, places=8)
        self.assertEqual(report.classification, ClassificationEnum.INCONCLUSIVE)
        self.assertEqual(scan.call_count, 2)

    def test_quadratic_decrease_scans_once(self, _, sphere, scan):
        sphere.side_effect = self._decrease(2)
        scan.return_value = 0.0
        report = self._scale()
        self.assertEqual(report.classification, ClassificationEnum.STRICT_SADDLE_CANDIDATE)
        self.assertEqual(scan.call_count, 1)

    def test_band_is_configurable(self, _, sphere, scan):
        sphere.side_effect = self._decrease(1)
        scan.return_value = 0.0
        cfg = ClassifierSettings(random_directions=20, first_order_band=(0.2, 0.5))
        probe_scaling(self.inst, self.W, GAMMAS, np.random.default_rng(0), cfg)
        self.assertEqual(scan.call_count, 1)


class DirectionalDerivativeHomogeneityTest(SimpleTestCase):

    def test_positive_homogeneity(self):
        inst = _instance(ProblemKindEnum.MS_ASYM, 0, d1=5, d2=5, r=1, k=2, m=20, p=0.3)
        W = construct_solution(inst, SolutionKindEnum.BALANCED)
        D = random_direction(W, np.random.default_rng(0))
        self.assertAlmostEqual(directional_derivative(inst, W, D.scaled(2.0)),
                               2.0 * directional_derivative(inst, W, D), places=12)


class SupportingChecksTest(SimpleTestCase):

    def test_lower_bound_reference(self):
        self.assertAlmostEqual(SQRT_2_OVER_PI, 0.7979, places=4)
        inst = _instance(ProblemKindEnum.MS_SYM, d1=4, d2=4, r=1, k=4, m=16)
        self.assertAlmostEqual(lower_bound_reference(inst, 0.1), -(SQRT_2_OVER_PI + 1.0) * 0.01)

    def test_local_lower_bound(self):
        inst = _instance(ProblemKindEnum.MS_SYM, 1, d1=6, d2=6, r=1, k=2, m=400, p=0.1)
        W = construct_solution(inst, SolutionKindEnum.ROTATED, np.random.default_rng(0))
        self.assertEqual(local_lower_bound_check(inst, W, 0.0, 10, np.random.default_rng(0), FAST), 0.0)
        gamma = 0.05
        worst = local_lower_bound_check(inst, W, gamma, 2000, np.random.default_rng(0), FAST)
        self.assertGreaterEqual(worst, 5.0 * lower_bound_reference(inst, gamma))
        with self.assertRaises(ClassifyError):
            local_lower_bound_check(inst, W, gamma, 0, np.random.default_rng(0), FAST)

    def test_global_min_noiseless(self):
        inst = _instance(ProblemKindEnum.MS_SYM, 0, d1=5, d2=5, r=1, k=2, m=60, p=0.0)
        W = construct_solution(inst, SolutionKindEnum.CANONICAL)
        check = global_min_check(inst, W, 5, np.random.default_rng(0), SolveConfig(eta0=0.05, T=30))
        self.assertTrue(check.passed)
        self.assertLessEqual(check.worst_gap, 1e-9)

    def test_global_min_fails_when_overfitting(self):
        inst = _instance(ProblemKindEnum.MS_ASYM, 0, d1=6, d2=6, r=1, k=6, m=12, p=0.5,
                         noise=NoiseModel(NoiseKindEnum.SYMMETRIC_OUTLIER, 10.0))
        W = construct_solution(inst, SolutionKindEnum.BALANCED)
        check = global_min_check(inst, W, 3, np.random.default_rng(0),
                                 SolveConfig(eta0=0.1, q=0.995, T=1500))
        self.assertFalse(check.passed)
        self.assertGreater(check.worst_gap, 0.0)

    def test_rip_ratio_band(self):
        ens = sample_sensing(20, 20, 5000, np.random.default_rng(0))
        lo, hi = rip_ratio(ens, 1, 500, np.random.default_rng(1))
        self.assertGreaterEqual(lo, 0.65)
        self.assertLessEqual(hi, 0.95)
        self.assertLess(lo, SQRT_2_OVER_PI)
        self.assertGreater(hi, SQRT_2_OVER_PI)

    def test_rip_ratio_single_measurement_is_finite(self):
        ens = sample_sensing(4, 4, 1, np.random.default_rng(0))
        lo, hi = rip_ratio(ens, 1, 10, np.random.default_rng(1))
        self.assertTrue(np.isfinite(lo) and np.isfinite(hi))

    def test_rip_ratio_needs_sensing(self):
        inst = _instance(ProblemKindEnum.MC_ASYM, d1=4, d2=4, r=1, k=1, s=0.5)
        with self.assertRaises(ProbeInapplicableError):
            rip_ratio(inst.ens, 1, 10, np.random.default_rng(0))
