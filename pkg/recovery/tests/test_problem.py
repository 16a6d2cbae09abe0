"""Tests for instance generation and true-solution construction."""
import numpy as np
from django.test import SimpleTestCase

from recovery.models import (
    GroundTruthKindEnum,
    InstanceSpec,
    NoiseKindEnum,
    NoiseModel,
    ProblemKindEnum,
    SolutionKindEnum,
)
from recovery.services.loss import loss
from recovery.services.problem import (
    InvalidDimensionsError,
    NotATrueSolutionError,
    NotOrthonormalError,
    ProblemError,
    coherent_axis,
    completion_witness_solution,
    construct_solution,
    factorized_rank,
    generate_instance,
    make_ground_truth,
    noise_threshold,
    recover_rotation,
    relative_distance,
    sample_noise,
    transpose_instance,
    true_solution_symmetric,
)


def _instance(problem=ProblemKindEnum.MS_ASYM, seed=0, **kwargs):
    spec = InstanceSpec(problem=problem, **{'d1': 8, 'd2': 8, 'r': 2, 'k': 4, 'm': 60, **kwargs})
    return generate_instance(spec, np.random.default_rng(seed))


class GroundTruthTest(SimpleTestCase):

    def test_generic_has_rank_r_and_bounded_spectrum(self):
        gt = make_ground_truth(7, 5, 3, GroundTruthKindEnum.GENERIC, np.random.default_rng(0))
        self.assertEqual(np.linalg.matrix_rank(gt.Xstar), 3)
        self.assertTrue(np.all(gt.Sigmastar >= 1.0) and np.all(gt.Sigmastar <= 3.0))
        self.assertTrue(np.all(np.diff(gt.Sigmastar) <= 0))
        np.testing.assert_allclose(gt.Ustar.T @ gt.Ustar, np.eye(3), atol=1e-12)

    def test_psd_symmetric(self):
        gt = make_ground_truth(6, 6, 2, GroundTruthKindEnum.PSD_SYMMETRIC, np.random.default_rng(1))
        np.testing.assert_array_equal(gt.Xstar, gt.Xstar.T)
        self.assertGreaterEqual(np.min(np.linalg.eigvalsh(gt.Xstar)), -1e-12)

    def test_coherent_aligns_with_first_axis(self):
        gt = make_ground_truth(6, 6, 2, GroundTruthKindEnum.COHERENT, np.random.default_rng(2))
        self.assertEqual(gt.Vstar[0, 1], 1.0)
        side, column, coordinate, sign = coherent_axis(gt)
        self.assertEqual((side, column, coordinate, sign), ('right', 1, 0, 1.0))

    def test_generic_is_not_coherent(self):
        gt = make_ground_truth(6, 6, 2, GroundTruthKindEnum.GENERIC, np.random.default_rng(3))
        self.assertIsNone(coherent_axis(gt))

    def test_rank_out_of_range(self):
        with self.assertRaises(InvalidDimensionsError):
            make_ground_truth(3, 3, 4, GroundTruthKindEnum.GENERIC, np.random.default_rng(0))

    def test_psd_needs_square(self):
        with self.assertRaises(InvalidDimensionsError):
            make_ground_truth(3, 4, 1, GroundTruthKindEnum.PSD_SYMMETRIC, np.random.default_rng(0))


class NoiseTest(SimpleTestCase):

    def test_outliers_sit_on_support(self):
        noise = sample_noise(500, 0.2, NoiseModel(NoiseKindEnum.SYMMETRIC_OUTLIER, 2.0), np.random.default_rng(0))
        off = np.setdiff1d(np.arange(500), noise.S)
        np.testing.assert_array_equal(noise.eps[off], 0.0)
        np.testing.assert_array_equal(np.abs(noise.eps[noise.S]), 2.0)
        np.testing.assert_array_equal(noise.St, noise.S)

    def test_gaussian_threshold(self):
        model = NoiseModel(NoiseKindEnum.GAUSSIAN, 4.0)
        self.assertEqual(noise_threshold(model), (1.0, 0.5))
        noise = sample_noise(400, 0.5, model, np.random.default_rng(1))
        self.assertTrue(set(noise.St) <= set(noise.S))
        self.assertTrue(np.all(np.abs(noise.eps[noise.St]) >= 1.0))

    def test_positive_outliers(self):
        noise = sample_noise(100, 0.3, NoiseModel(NoiseKindEnum.POSITIVE_OUTLIER, 1.5), np.random.default_rng(2))
        self.assertTrue(np.all(noise.eps[noise.S] == 1.5))

    def test_zero_probability_is_noiseless(self):
        noise = sample_noise(50, 0.0, NoiseModel(), np.random.default_rng(3))
        self.assertEqual(noise.S.size, 0)

    def test_invalid_probability(self):
        with self.assertRaises(ProblemError):
            sample_noise(10, 1.5, NoiseModel(), np.random.default_rng(0))


class GenerateInstanceTest(SimpleTestCase):

    def test_same_seed_same_instance(self):
        a, b = _instance(seed=5), _instance(seed=5)
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.ens.matrices, b.ens.matrices)

    def test_observations_match_model(self):
        inst = _instance(p=0.2)
        clean = np.tensordot(inst.ens.matrices, inst.gt.Xstar, axes=([1, 2], [0, 1]))
        np.testing.assert_allclose(inst.y, clean + inst.noise.eps, atol=1e-12)
        self.assertEqual(inst.kind, ProblemKindEnum.MS_ASYM)

    def test_completion_mask(self):
        inst = _instance(ProblemKindEnum.MC_ASYM, s=0.5)
        self.assertEqual(inst.ens.indices.shape[1], 2)
        self.assertEqual(inst.m, inst.ens.indices.shape[0])
        np.testing.assert_allclose(
            inst.y, inst.gt.Xstar[inst.ens.indices[:, 0], inst.ens.indices[:, 1]] + inst.noise.eps,
        )

    def test_relative_noise_scales_with_sigma1(self):
        spec = dict(p=0.5, noise=NoiseModel(NoiseKindEnum.SYMMETRIC_OUTLIER, 1.0), noise_relative=True)
        inst = _instance(**spec)
        self.assertAlmostEqual(inst.noise.model.scale, inst.gt.sigma1)

    def test_symmetric_defaults_to_psd_truth(self):
        inst = _instance(ProblemKindEnum.MS_SYM)
        self.assertTrue(inst.symmetric)
        self.assertEqual(inst.gt.kind, GroundTruthKindEnum.PSD_SYMMETRIC)

    def test_search_rank_below_truth(self):
        with self.assertRaises(InvalidDimensionsError):
            _instance(k=1)


class TrueSolutionTest(SimpleTestCase):

    def test_every_kind_reproduces_truth(self):
        asym = _instance()
        for kind in (SolutionKindEnum.BALANCED, SolutionKindEnum.IMBALANCED, SolutionKindEnum.WITNESS):
            W = construct_solution(asym, kind, np.random.default_rng(0))
            np.testing.assert_allclose(W.product(), asym.gt.Xstar, atol=1e-12)
            self.assertLess(relative_distance(asym, W), 1e-12)
        sym = _instance(ProblemKindEnum.MS_SYM)
        for kind in (SolutionKindEnum.ROTATED, SolutionKindEnum.CANONICAL):
            W = construct_solution(sym, kind, np.random.default_rng(0))
            np.testing.assert_allclose(W.product(), sym.gt.Xstar, atol=1e-12)

    def test_noiseless_truth_has_zero_loss(self):
        inst = _instance(p=0.0)
        W = construct_solution(inst, SolutionKindEnum.BALANCED)
        self.assertLess(loss(inst, W), 1e-12)

    def test_rotation_round_trip(self):
        inst = _instance(ProblemKindEnum.MS_SYM)
        R = construct_solution(inst, SolutionKindEnum.ROTATED, np.random.default_rng(4))
        rot = recover_rotation(R, inst.gt)
        np.testing.assert_allclose(rot @ rot.T, np.eye(inst.r), atol=1e-10)

    def test_non_solution_rejected(self):
        inst = _instance(ProblemKindEnum.MS_SYM)
        W = construct_solution(inst, SolutionKindEnum.CANONICAL)
        with self.assertRaises(NotATrueSolutionError):
            recover_rotation(W.scaled(1.1), inst.gt)

    def test_non_orthonormal_rotation(self):
        inst = _instance(ProblemKindEnum.MS_SYM)
        with self.assertRaises(NotOrthonormalError):
            true_solution_symmetric(inst.gt, inst.k, 2.0 * np.eye(inst.r, inst.k))

    def test_asymmetric_kind_on_symmetric_instance(self):
        with self.assertRaises(ProblemError):
            construct_solution(_instance(ProblemKindEnum.MS_SYM), SolutionKindEnum.BALANCED)

    def test_witness_needs_spare_rank(self):
        inst = _instance(k=2)
        with self.assertRaises(InvalidDimensionsError):
            completion_witness_solution(inst.gt, inst.k)

    def test_factorized_rank(self):
        inst = _instance()
        self.assertEqual(factorized_rank(construct_solution(inst, SolutionKindEnum.BALANCED)), 4)
        self.assertEqual(factorized_rank(construct_solution(inst, SolutionKindEnum.WITNESS)), 2 + 4)
        sym = _instance(ProblemKindEnum.MS_SYM)
        self.assertEqual(factorized_rank(construct_solution(sym, SolutionKindEnum.CANONICAL)), 4)


class TransposeInstanceTest(SimpleTestCase):

    def test_loss_is_invariant(self):
        for problem in (ProblemKindEnum.MS_ASYM, ProblemKindEnum.MC_ASYM):
            inst = _instance(problem, d2=6, p=0.2)
            W = construct_solution(inst, SolutionKindEnum.IMBALANCED, np.random.default_rng(1))
            W = W + W.scaled(0.01)
            flipped = transpose_instance(inst)
            self.assertEqual((flipped.d1, flipped.d2), (6, 8))
            self.assertAlmostEqual(loss(flipped, W.transposed()), loss(inst, W), places=12)


class SearchRankTest(SimpleTestCase):

    def test_keeps_realization(self):
        inst = _instance()
        wider = inst.with_search_rank(6)
        self.assertEqual((inst.k, wider.k), (4, 6))
        self.assertIs(wider.ens, inst.ens)
        np.testing.assert_array_equal(wider.y, inst.y)
