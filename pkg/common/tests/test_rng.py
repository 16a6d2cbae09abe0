"""Tests for seed derivation and named RNG streams."""
from django.test import SimpleTestCase

from common.rng import derive_job_seed, make_streams


class DeriveJobSeedTest(SimpleTestCase):

    def test_stable(self):
        self.assertEqual(derive_job_seed(0, 1, 2), derive_job_seed(0, 1, 2))

    def test_distinct_per_coordinate(self):
        seeds = {derive_job_seed(b, c, t) for b in (0, 1) for c in range(3) for t in range(3)}
        self.assertEqual(len(seeds), 18)

    def test_fits_in_64_bits(self):
        seed = derive_job_seed(12345, 9, 9)
        self.assertGreaterEqual(seed, 0)
        self.assertLess(seed, 2 ** 64)

    def test_negative_coordinates_rejected(self):
        with self.assertRaises(ValueError):
            derive_job_seed(0, -1, 0)


class MakeStreamsTest(SimpleTestCase):

    def test_same_seed_same_draws(self):
        a, b = make_streams(42), make_streams(42)
        self.assertEqual(a.instance.random(), b.instance.random())
        self.assertEqual(a.probe.random(), b.probe.random())

    def test_streams_are_independent(self):
        streams = make_streams(42)
        draws = {streams.instance.random(), streams.solution.random(),
                 streams.probe.random(), streams.solver.random()}
        self.assertEqual(len(draws), 4)

    def test_consuming_one_stream_leaves_others_alone(self):
        a, b = make_streams(3), make_streams(3)
        a.probe.standard_normal(1000)
        self.assertEqual(a.instance.random(), b.instance.random())
