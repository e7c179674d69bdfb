import unittest
import sys
import os

import numpy as np

# Add the parent directory to the path so we can import the modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.errors import DegenerateInputError, DimensionError, OperatorNotPSDError
from core.imgcore import convolve_array
from core.kernel_solver import cg_solve, eval_objective_k, irls_solve, project_simplex
from data.models import BlurKernel, BoundaryPolicy, GradientStack, SolverConfig

THETAS2 = (0.0, 90.0)


class TestProjectSimplex(unittest.TestCase):
    """Test cases for the kernel feasibility projection"""

    def test_clamp_and_normalize(self):
        """Test that negatives are dropped and the rest rescaled"""
        np.testing.assert_allclose(project_simplex(np.array([-1.0, 2.0, 2.0])), [0.0, 0.5, 0.5])

    def test_feasible_input_unchanged(self):
        """Test that a simplex point is a fixed point"""
        weights = np.full((3, 3), 1.0 / 9.0)
        np.testing.assert_allclose(project_simplex(weights), weights)

    def test_delta_fallback(self):
        """Test the centred delta when nothing positive is left"""
        grid = project_simplex(-np.ones((5, 5)))
        self.assertEqual(grid[2, 2], 1.0)
        self.assertEqual(grid.sum(), 1.0)
        flat = project_simplex(np.zeros(9))
        self.assertEqual(flat[4], 1.0)

    def test_random_inputs_feasible(self):
        """Test feasibility for arbitrary inputs"""
        rng = np.random.default_rng(8)
        for _ in range(100):
            weights = project_simplex(rng.normal(0, 1, (7, 7)))
            self.assertTrue(BlurKernel(weights).is_feasible())


class TestConjugateGradients(unittest.TestCase):
    """Test cases for the CG solver"""

    def test_identity(self):
        """Test one-step convergence on the identity"""
        b = np.array([1.0, -2.0, 3.0])
        np.testing.assert_allclose(cg_solve(lambda v: v, b, np.zeros(3), 5), b, atol=1e-12)

    def test_zero_rhs(self):
        """Test that b = 0 from k = 0 stays at zero"""
        calls = []
        result = cg_solve(lambda v: 2.0 * v, np.zeros(4), np.zeros(4), 5, callback=calls.append)
        np.testing.assert_array_equal(result, np.zeros(4))
        self.assertEqual(calls, [])

    def test_random_spd_systems(self):
        """Test convergence within n iterations on well-conditioned SPD systems"""
        rng = np.random.default_rng(21)
        for _ in range(50):
            n = int(rng.integers(2, 26))
            m = rng.normal(0, 1, (n, n))
            a = m @ m.T + n * np.eye(n)
            x = rng.normal(0, 1, n)
            result = cg_solve(lambda v: a @ v, a @ x, np.zeros(n), n)
            np.testing.assert_allclose(result, x, rtol=1e-6, atol=1e-8)

    def test_kernel_sized_system(self):
        """Test a 9x9 system, the size of a 3x3 kernel, solved in 9 iterations"""
        rng = np.random.default_rng(9)
        m = rng.normal(0, 1, (9, 9))
        a = m @ m.T + np.eye(9)
        x = rng.normal(0, 1, 9)
        result = cg_solve(lambda v: a @ v, a @ x, np.zeros(9), 9)
        np.testing.assert_allclose(result, x, rtol=1e-6, atol=1e-8)

    def test_not_positive_definite(self):
        """Test that negative curvature is reported"""
        with self.assertRaises(OperatorNotPSDError):
            cg_solve(lambda v: -v, np.ones(3), np.zeros(3), 3)


class TestIrlsSolve(unittest.TestCase):
    """Test cases for the IRLS kernel solver"""

    def setUp(self):
        self.rng = np.random.default_rng(99)
        self.latent = self.rng.normal(0, 1, (2, 32, 32))
        self.box = np.full((3, 3), 1.0 / 9.0)
        blurred = np.stack([convolve_array(c, self.box, BoundaryPolicy.ZERO) for c in self.latent])
        self.x = GradientStack(self.latent, THETAS2)
        self.g = GradientStack(blurred, THETAS2)

    def test_unblurred_gives_delta(self):
        """Test that g = x pulls the kernel toward the delta"""
        k0 = BlurKernel(self.box)
        kernel = irls_solve(self.x, self.x, k0, SolverConfig())
        self.assertTrue(kernel.is_feasible())
        self.assertGreaterEqual(kernel.weights[1, 1], 0.5)

    def test_box_recovery(self):
        """Test that a box blur is recovered from a delta start"""
        config = SolverConfig(irls_outer=4, cg_inner=9)
        kernel = irls_solve(self.x, self.g, BlurKernel.delta(3), config)
        np.testing.assert_allclose(kernel.weights, self.box, atol=0.01)

    def test_objective_improves(self):
        """Test that the estimate beats the starting kernel"""
        config = SolverConfig(irls_outer=4, cg_inner=9)
        start = BlurKernel.delta(3)
        kernel = irls_solve(self.x, self.g, start, config)
        self.assertLess(
            eval_objective_k(self.x, self.g, kernel, config.zeta),
            eval_objective_k(self.x, self.g, start, config.zeta),
        )

    def test_state_callback(self):
        """Test round counting and the CG iteration budget"""
        rounds = []
        config = SolverConfig(irls_outer=3, cg_inner=5)
        irls_solve(self.x, self.g, BlurKernel.delta(3), config,
                   state_callback=lambda s: rounds.append((s.outer, s.cg_iterations)))
        self.assertEqual([r[0] for r in rounds], [1, 2, 3])
        self.assertLessEqual(rounds[-1][1], 15)

    def test_degenerate_latent(self):
        """Test that an all-zero latent is rejected"""
        zeros = GradientStack(np.zeros((2, 32, 32)), THETAS2)
        with self.assertRaises(DegenerateInputError):
            irls_solve(zeros, self.g, BlurKernel.delta(3), SolverConfig())

    def test_shape_mismatch(self):
        """Test that x and g must have the same dimensions"""
        other = GradientStack(np.ones((2, 30, 32)), THETAS2)
        with self.assertRaises(DimensionError):
            irls_solve(self.x, other, BlurKernel.delta(3), SolverConfig())

    def test_kernel_too_large(self):
        """Test that the kernel must fit the latent image"""
        small = GradientStack(np.ones((1, 4, 4)), (0.0,))
        with self.assertRaises(DimensionError):
            irls_solve(small, small, BlurKernel.delta(5), SolverConfig())

    def test_objective_by_hand(self):
        """Test the kernel objective on one valid sample"""
        x = GradientStack(np.ones((1, 3, 3)), (0.0,))
        g_data = np.zeros((1, 3, 3))
        g_data[0, 1, 1] = 0.5
        g = GradientStack(g_data, (0.0,))
        self.assertAlmostEqual(eval_objective_k(x, g, BlurKernel.delta(3), 2.0), 1.5, places=9)


if __name__ == '__main__':
    unittest.main()
