"""Tests for the LRL1 instance codec."""
import dataclasses
import json
import os
import struct
import tempfile

import numpy as np
from django.test import SimpleTestCase

from recovery.models import InstanceSpec, NoiseKindEnum, NoiseModel, ProblemKindEnum, SolutionKindEnum
from recovery.services.instance_io import (
    HEADER,
    InstanceFormatError,
    decode_instance,
    dump_instance,
    encode_instance,
    load_factors,
    load_instance,
)
from recovery.services.problem import InvalidDimensionsError, construct_solution, generate_instance


def _instance(problem, **kwargs):
    spec = InstanceSpec(problem=problem, d1=5, d2=4 if problem in (ProblemKindEnum.MS_ASYM, ProblemKindEnum.MC_ASYM) else 5,
                        r=2, k=3, m=12, s=0.6, p=0.3, **kwargs)
    return generate_instance(spec, np.random.default_rng(11))


class InstanceCodecTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_file_preserves_every_formulation(self):
        for problem in ProblemKindEnum.values:
            inst = _instance(problem)
            path = os.path.join(self.tmp.name, f'{problem}.lrl1')
            size = dump_instance(inst, path)
            self.assertEqual(size, os.path.getsize(path))
            loaded = load_instance(path)
            self.assertEqual(loaded.kind, inst.kind)
            self.assertEqual((loaded.k, loaded.m), (inst.k, inst.m))
            np.testing.assert_array_equal(loaded.y, inst.y)
            np.testing.assert_array_equal(loaded.gt.Xstar, inst.gt.Xstar)
            np.testing.assert_array_equal(loaded.noise.St, inst.noise.St)

    def test_gaussian_noise_threshold_survives(self):
        inst = _instance(ProblemKindEnum.MS_ASYM, noise=NoiseModel(NoiseKindEnum.GAUSSIAN, 2.0))
        loaded = decode_instance(encode_instance(inst))
        self.assertEqual((loaded.noise.t0, loaded.noise.p0), (0.5, 0.5))
        self.assertEqual(loaded.noise.model.kind, NoiseKindEnum.GAUSSIAN)

    def test_bad_magic(self):
        payload = bytearray(encode_instance(_instance(ProblemKindEnum.MS_SYM)))
        payload[:4] = b'XXXX'
        with self.assertRaises(InstanceFormatError):
            decode_instance(bytes(payload))

    def test_unsupported_version(self):
        payload = bytearray(encode_instance(_instance(ProblemKindEnum.MS_SYM)))
        payload[4] = 9
        with self.assertRaises(InstanceFormatError):
            decode_instance(bytes(payload))

    def test_truncated(self):
        payload = encode_instance(_instance(ProblemKindEnum.MC_ASYM))
        with self.assertRaises(InstanceFormatError):
            decode_instance(payload[:-3])
        with self.assertRaises(InstanceFormatError):
            decode_instance(payload[:HEADER.size - 1])

    def test_trailing_bytes(self):
        payload = encode_instance(_instance(ProblemKindEnum.MC_SYM)) + struct.pack('<d', 1.0)
        with self.assertRaises(InstanceFormatError):
            decode_instance(payload)

    def test_corrupted_outlier_index(self):
        inst = _instance(ProblemKindEnum.MS_ASYM)
        S = np.append(inst.noise.S, inst.m + 5)
        broken = dataclasses.replace(inst, noise=dataclasses.replace(inst.noise, S=S))
        with self.assertRaisesMessage(InstanceFormatError, 'Corrupted index'):
            decode_instance(encode_instance(broken))

    def test_completion_index_outside_matrix(self):
        inst = _instance(ProblemKindEnum.MC_ASYM)
        indices = inst.ens.indices.copy()
        indices[0, 1] = inst.d2
        broken = dataclasses.replace(inst, ens=dataclasses.replace(inst.ens, indices=indices))
        with self.assertRaises(InstanceFormatError):
            decode_instance(encode_instance(broken))

    def test_missing_file(self):
        with self.assertRaises(InstanceFormatError):
            load_instance(os.path.join(self.tmp.name, 'absent.lrl1'))


class LoadFactorsTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, payload):
        path = os.path.join(self.tmp.name, 'point.json')
        with open(path, 'w') as fh:
            json.dump(payload, fh)
        return path

    def test_reads_pair_written_by_to_dict(self):
        inst = _instance(ProblemKindEnum.MS_ASYM)
        W = construct_solution(inst, SolutionKindEnum.BALANCED)
        loaded = load_factors(self.write(W.to_dict()), inst)
        np.testing.assert_array_equal(loaded.W1, W.W1)
        np.testing.assert_array_equal(loaded.W2, W.W2)

    def test_symmetric_takes_left_factor_only(self):
        inst = _instance(ProblemKindEnum.MS_SYM)
        W1 = np.ones((inst.d1, inst.k))
        self.assertTrue(load_factors(self.write({'W1': W1.tolist()}), inst).symmetric)
        with self.assertRaises(InvalidDimensionsError):
            load_factors(self.write({'W1': W1.tolist(), 'W2': W1.T.tolist()}), inst)

    def test_shape_mismatch(self):
        inst = _instance(ProblemKindEnum.MC_ASYM)
        with self.assertRaises(InvalidDimensionsError):
            load_factors(self.write({'W1': np.ones((inst.d1, inst.k)).tolist()}), inst)
        with self.assertRaises(InvalidDimensionsError):
            load_factors(self.write({'W1': np.ones((inst.d1 + 1, inst.k)).tolist(),
                                     'W2': np.ones((inst.k, inst.d2)).tolist()}), inst)

    def test_malformed_file(self):
        inst = _instance(ProblemKindEnum.MS_SYM)
        with self.assertRaises(InstanceFormatError):
            load_factors(self.write({'W2': [[1.0]]}), inst)
        with self.assertRaises(InstanceFormatError):
            load_factors(os.path.join(self.tmp.name, 'absent.json'), inst)
