import unittest
import sys
import os

import numpy as np

# Add the parent directory to the path so we can import the modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.errors import ConfigurationError
from core.gabor_bank import even_thetas, extract_gradients, gabor_kernel, make_bank
from data.models import GaborParams, RasterImage


class TestGaborKernel(unittest.TestCase):
    """Test cases for single Gabor filters"""

    def test_default_support(self):
        """Test that the window is 4 sigma rounded up to odd"""
        self.assertEqual(GaborParams().support, 17)
        self.assertEqual(gabor_kernel(GaborParams()).shape, (17, 17))

    def test_centre_is_zero(self):
        """Test that psi = 90 puts a zero at the centre for every orientation"""
        for theta in (0.0, 30.0, 45.0, 90.0, 135.0):
            grid = gabor_kernel(GaborParams(theta=theta))
            self.assertAlmostEqual(grid[8, 8], 0.0, places=12)

    def test_quarter_turn_is_transpose(self):
        """Test that theta = 90 equals theta = 0 with axes swapped"""
        grid0 = gabor_kernel(GaborParams(theta=0.0))
        grid90 = gabor_kernel(GaborParams(theta=90.0))
        np.testing.assert_allclose(grid90, grid0.T, atol=1e-12)

    def test_zero_sum(self):
        """Test that the odd carrier makes every filter zero-mean"""
        for theta in (0.0, 45.0, 60.0, 90.0, 120.0, 135.0):
            grid = gabor_kernel(GaborParams(theta=theta))
            self.assertLess(abs(grid.sum()), 1e-9)

    def test_filter_is_not_trivial(self):
        """Test that the default carrier period gives a usable filter"""
        grid = gabor_kernel(GaborParams())
        self.assertAlmostEqual(GaborParams().period_px, 8.0)
        self.assertGreater(np.abs(grid).max(), 0.1)

    def test_pixel_wavelength_reading(self):
        """Test that a half-pixel period sampled on integers vanishes at theta = 0"""
        grid = gabor_kernel(GaborParams(wavelength_unit='pixels'))
        self.assertLess(np.abs(grid).max(), 1e-9)

    def test_invalid_params(self):
        """Test parameter validation"""
        with self.assertRaises(ConfigurationError):
            GaborParams(sigma=0.0)
        with self.assertRaises(ConfigurationError):
            GaborParams(support=4)
        with self.assertRaises(ConfigurationError):
            GaborParams(wavelength_unit='furlongs')


class TestMakeBank(unittest.TestCase):
    """Test cases for filter bank construction"""

    def test_four_filter_default(self):
        """Test the four-orientation set"""
        bank = make_bank([0, 45, 90, 135])
        self.assertEqual(len(bank), 4)
        self.assertEqual(bank.thetas, (0.0, 45.0, 90.0, 135.0))

    def test_three_filter_set(self):
        """Test the 60 degree set"""
        bank = make_bank([0, 60, 120])
        self.assertEqual(len(bank), 3)
        # 60 and 120 are mirror images, not copies
        self.assertGreater(np.abs(bank[1] - bank[2]).max(), 1e-3)

    def test_even_thetas(self):
        """Test evenly spaced n-filter sets"""
        for n in (3, 4, 5, 6, 8):
            thetas = even_thetas(n)
            self.assertEqual(len(make_bank(thetas)), n)
            np.testing.assert_allclose(np.diff(thetas), 180.0 / n)
        with self.assertRaises(ConfigurationError):
            even_thetas(0)

    def test_duplicate_orientation(self):
        """Test that orientations equal modulo 180 are rejected"""
        with self.assertRaises(ConfigurationError):
            make_bank([0, 180])
        with self.assertRaises(ConfigurationError):
            make_bank([45, 45])

    def test_order_and_empty(self):
        """Test that unordered or empty orientation lists are rejected"""
        with self.assertRaises(ConfigurationError):
            make_bank([90, 0])
        with self.assertRaises(ConfigurationError):
            make_bank([])


class TestExtractGradients(unittest.TestCase):
    """Test cases for gradient stack extraction"""

    def setUp(self):
        self.bank = make_bank([0, 45, 90, 135])
        step = np.zeros((32, 32))
        step[:, 16:] = 1.0
        self.step = RasterImage(step)

    def test_constant_image(self):
        """Test that zero-mean filters remove constants"""
        stack = extract_gradients(RasterImage(np.full((24, 24), 0.6)), self.bank)
        self.assertLess(np.abs(stack.channels).max(), 1e-9)

    def test_shape_contract(self):
        """Test one channel per filter with image dimensions preserved"""
        stack = extract_gradients(RasterImage(np.zeros((20, 30))), self.bank)
        self.assertEqual(stack.channels.shape, (4, 20, 30))
        self.assertEqual(stack.thetas, self.bank.thetas)

    def test_vertical_edge_selectivity(self):
        """Test that a vertical step excites theta = 0 and not theta = 90"""
        stack = extract_gradients(self.step, self.bank)
        peaks = np.abs(stack.channels).max(axis=(1, 2))
        self.assertGreater(peaks[0], 0.1)
        self.assertLess(peaks[2], 0.05 * peaks[0])
        self.assertEqual(int(np.argmax(peaks)), 0)
        # Strongest response sits on the edge columns
        column = int(np.argmax(np.abs(stack.channels[0][16])))
        self.assertIn(column, range(12, 21))

    def test_oblique_and_horizontal_edge_selectivity(self):
        """Test that steps at 45, 90 and 135 degrees excite the matching filter"""
        rows, cols = np.mgrid[0:64, 0:64].astype(np.float64)
        for index, angle in ((1, 45.0), (2, 90.0), (3, 135.0)):
            normal = np.deg2rad(angle)
            step = ((cols - 32) * np.cos(normal) + (rows - 32) * np.sin(normal) > 0).astype(np.float64)
            stack = extract_gradients(RasterImage(step), self.bank)
            peaks = np.abs(stack.channels[:, 24:40, 24:40]).max(axis=(1, 2))
            self.assertEqual(int(np.argmax(peaks)), index, f"{angle}: {peaks}")
            self.assertLess(peaks[(index + 2) % 4], 0.1 * peaks[index])

    def test_filter_wider_than_image(self):
        """Test that small images still get a full stack"""
        stack = extract_gradients(RasterImage(np.eye(9)), self.bank)
        self.assertEqual(stack.channels.shape, (4, 9, 9))

    def test_linearity(self):
        """Test that extraction is linear in the image"""
        rng = np.random.default_rng(7)
        a = rng.uniform(0, 1, (20, 20))
        b = rng.uniform(0, 1, (20, 20))
        combined = extract_gradients(RasterImage(2.0 * a - 0.5 * b), self.bank).channels
        separate = (2.0 * extract_gradients(RasterImage(a), self.bank).channels
                    - 0.5 * extract_gradients(RasterImage(b), self.bank).channels)
        np.testing.assert_allclose(combined, separate, atol=1e-10)


if __name__ == '__main__':
    unittest.main()
