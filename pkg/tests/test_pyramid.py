import unittest
import math
import sys
import os

import numpy as np

# Add the parent directory to the path so we can import the modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.errors import ConfigurationError, PyramidStateError
from core.gabor_bank import make_bank
from core.pyramid import SeededRng, build_schedule, init_coarsest, snap_odd, upscale_state
from data.models import BlurKernel, GradientStack, PyramidLevel, RasterImage

ROOT2 = math.sqrt(2.0)


class TestSchedule(unittest.TestCase):
    """Test cases for the coarse-to-fine schedule"""

    def test_snap_odd(self):
        """Test nearest-odd snapping with ties going up"""
        self.assertEqual(snap_odd(17.68), 17)
        self.assertEqual(snap_odd(12.5), 13)
        self.assertEqual(snap_odd(4.0), 5)
        self.assertEqual(snap_odd(6.0), 7)
        self.assertEqual(snap_odd(2.0), 3)
        self.assertEqual(snap_odd(9.0), 9)

    def test_h25_golden(self):
        """Test the frozen side sequence for h = 25"""
        schedule = build_schedule(25, ROOT2, 3)
        sides = [level.kernel_side for level in schedule.levels]
        self.assertEqual(sides, [3, 5, 7, 9, 13, 17, 25])
        self.assertEqual(schedule.m, 7)
        for small, large in zip(sides, sides[1:]):
            self.assertGreaterEqual(large / small, 1.2)
            self.assertLessEqual(large / small, 1.8)

    def test_h9_golden(self):
        """Test the frozen side sequence for h = 9"""
        schedule = build_schedule(9, ROOT2, 3)
        self.assertEqual([level.kernel_side for level in schedule.levels], [3, 5, 7, 9])

    def test_single_level(self):
        """Test the degenerate pyramid"""
        schedule = build_schedule(3, ROOT2, 3)
        self.assertEqual(schedule.m, 1)
        self.assertEqual(schedule.levels[0].image_scale, 1.0)
        self.assertEqual(schedule.levels[0].index, 1)

    def test_level_geometry(self):
        """Test indices, scales and the finest level"""
        schedule = build_schedule(15, ROOT2, 3)
        indices = [level.index for level in schedule.levels]
        self.assertEqual(indices, list(range(schedule.m, 0, -1)))
        self.assertEqual(schedule.levels[-1].kernel_side, 15)
        self.assertEqual(schedule.levels[-1].image_scale, 1.0)
        for level in schedule.levels:
            self.assertEqual(level.kernel_side % 2, 1)
            self.assertGreater(level.image_scale, 0.0)
            self.assertLessEqual(level.image_scale, 1.0)
            self.assertAlmostEqual(level.image_scale, level.kernel_side / 15.0)

    def test_invalid_arguments(self):
        """Test validation of h, s and min_side"""
        with self.assertRaises(ConfigurationError):
            build_schedule(8, ROOT2, 3)
        with self.assertRaises(ConfigurationError):
            build_schedule(1, ROOT2, 1)
        with self.assertRaises(ConfigurationError):
            build_schedule(9, 1.0, 3)
        with self.assertRaises(ConfigurationError):
            build_schedule(5, ROOT2, 7)

    def test_deterministic(self):
        """Test that equal arguments give equal schedules"""
        self.assertEqual(build_schedule(21, ROOT2, 3), build_schedule(21, ROOT2, 3))


class TestSeededRng(unittest.TestCase):
    """Test cases for the reproducible random source"""

    def test_same_seed_same_draws(self):
        """Test determinism for equal seeds"""
        np.testing.assert_array_equal(SeededRng(5).uniform(size=10), SeededRng(5).uniform(size=10))

    def test_spawn(self):
        """Test that children are reproducible and distinct"""
        parent = SeededRng(9)
        np.testing.assert_array_equal(parent.spawn(2).uniform(size=5), SeededRng(9).spawn(2).uniform(size=5))
        self.assertFalse(np.array_equal(parent.spawn(1).uniform(size=5), parent.spawn(2).uniform(size=5)))

    def test_invalid_seed(self):
        """Test that negative seeds are rejected"""
        with self.assertRaises(ConfigurationError):
            SeededRng(-1)


class TestLevelState(unittest.TestCase):
    """Test cases for initialization and level hand-over"""

    def setUp(self):
        self.bank = make_bank([0, 45, 90, 135])
        self.schedule = build_schedule(5, ROOT2, 3)
        self.image = RasterImage(np.random.default_rng(3).uniform(0, 1, (12, 18)))

    def test_init_coarsest_feasible(self):
        """Test that the random initial kernel lies on the simplex"""
        kernel, latent = init_coarsest(self.schedule, self.image, self.bank, SeededRng(0))
        self.assertEqual(kernel.side, 3)
        self.assertAlmostEqual(kernel.weights.sum(), 1.0, delta=1e-9)
        self.assertGreaterEqual(kernel.weights.min(), 0.0)
        self.assertEqual(latent.channels.shape, (4, 12, 18))

    def test_init_coarsest_seeded(self):
        """Test seed determinism of the initial kernel"""
        first, _ = init_coarsest(self.schedule, self.image, self.bank, SeededRng(11))
        second, _ = init_coarsest(self.schedule, self.image, self.bank, SeededRng(11))
        other, _ = init_coarsest(self.schedule, self.image, self.bank, SeededRng(12))
        np.testing.assert_array_equal(first.weights, second.weights)
        self.assertGreater(np.abs(first.weights - other.weights).max(), 1e-6)

    def test_upscale_delta(self):
        """Test that an upscaled delta stays concentrated and feasible"""
        coarse, fine = self.schedule.levels
        latent = GradientStack(np.zeros((4, 12, 18)), self.bank.thetas)
        kernel, upscaled = upscale_state(BlurKernel.delta(3), latent, coarse, fine, (20, 30))
        self.assertEqual(kernel.side, 5)
        self.assertAlmostEqual(kernel.weights.sum(), 1.0, delta=1e-9)
        self.assertGreaterEqual(kernel.weights.min(), 0.0)
        self.assertGreaterEqual(kernel.weights[2, 2], 0.25)
        self.assertEqual(upscaled.image_shape, fine.image_shape((20, 30)))

    def test_upscale_shape_mismatch(self):
        """Test that a latent of the wrong size is an internal error"""
        coarse, fine = self.schedule.levels
        latent = GradientStack(np.zeros((4, 11, 18)), self.bank.thetas)
        with self.assertRaises(PyramidStateError):
            upscale_state(BlurKernel.delta(3), latent, coarse, fine, (20, 30))

    def test_upscale_requires_adjacent_levels(self):
        """Test that only one-step-finer transitions are accepted"""
        coarse = PyramidLevel(index=3, kernel_side=3, image_scale=0.6)
        fine = PyramidLevel(index=1, kernel_side=5, image_scale=1.0)
        latent = GradientStack(np.zeros((4, 12, 18)), self.bank.thetas)
        with self.assertRaises(PyramidStateError):
            upscale_state(BlurKernel.delta(3), latent, coarse, fine, (20, 30))


if __name__ == '__main__':
    unittest.main()
