import unittest
import tempfile
import sys
import os
from pathlib import Path

import numpy as np
from PIL import Image

# Add the parent directory to the path so we can import the modules
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.errors import ImageIOError
from data.image_io import (
    file_sha256,
    list_images,
    load_color_channels,
    load_image,
    load_kernel,
    read_json,
    save_color_channels,
    save_image,
    save_kernel,
    sibling_path,
    write_json,
)
from data.models import BlurKernel, RasterImage


class TestImageFiles(unittest.TestCase):
    """Test cases for image reading and writing"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.rng = np.random.default_rng(12)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip(self):
        """Test 8-bit quantization error for PNG and PGM"""
        data = self.rng.uniform(0, 1, (13, 17))
        for name in ('gray.png', 'gray.pgm'):
            path = self.dir / name
            save_image(RasterImage(data), path)
            loaded = load_image(path)
            self.assertEqual(loaded.shape, (13, 17))
            self.assertLessEqual(np.abs(loaded.data - data).max(), 0.5 / 255.0 + 1e-12)

    def test_out_of_range_is_clipped(self):
        """Test that values outside [0, 1] are clipped on write"""
        path = self.dir / 'clip.png'
        save_image(RasterImage(np.array([[-0.5, 1.5]])), path)
        np.testing.assert_array_equal(load_image(path).data, [[0.0, 1.0]])

    def test_sixteen_bit(self):
        """Test that 16-bit files are scaled by 65535"""
        raw = np.array([[0, 65535], [32768, 1000]], dtype=np.uint16)
        path = self.dir / 'deep.png'
        Image.fromarray(raw).save(path)
        np.testing.assert_allclose(load_image(path).data, raw / 65535.0, atol=1e-12)

    def test_rgb_luminance(self):
        """Test the luminance reduction of colour input"""
        rgb = np.zeros((2, 2, 3), dtype=np.uint8)
        rgb[..., 0] = 255
        path = self.dir / 'red.png'
        Image.fromarray(rgb).save(path)
        np.testing.assert_allclose(load_image(path).data, 0.299, atol=1e-12)
        channels = load_color_channels(path)
        self.assertEqual(len(channels), 3)
        np.testing.assert_allclose(channels[0].data, 1.0)

    def test_gray_valued_color(self):
        """Test that an RGB file with equal channels loads as its gray channel"""
        gray = self.rng.integers(0, 256, (5, 7)).astype(np.uint8)
        path = self.dir / 'gray_rgb.png'
        Image.fromarray(np.stack([gray] * 3, axis=2)).save(path)
        np.testing.assert_allclose(load_image(path).data, gray / 255.0, atol=1e-12)

    def test_color_round_trip(self):
        """Test three-channel output"""
        channels = [RasterImage(self.rng.uniform(0, 1, (6, 5))) for _ in range(3)]
        path = self.dir / 'color.png'
        save_color_channels(channels, path)
        loaded = load_color_channels(path)
        self.assertEqual(len(loaded), 3)
        for original, back in zip(channels, loaded):
            self.assertLessEqual(np.abs(original.data - back.data).max(), 0.5 / 255.0 + 1e-12)

    def test_read_errors(self):
        """Test unsupported, missing and corrupt files"""
        with self.assertRaises(ImageIOError):
            load_image(self.dir / 'picture.bmp')
        with self.assertRaises(ImageIOError):
            load_image(self.dir / 'missing.png')
        corrupt = self.dir / 'corrupt.png'
        corrupt.write_bytes(b'not an image')
        with self.assertRaises(ImageIOError) as context:
            load_image(corrupt)
        self.assertEqual(context.exception.path, str(corrupt))

    def test_write_errors(self):
        """Test unsupported output formats"""
        with self.assertRaises(ImageIOError):
            save_image(RasterImage(np.zeros((2, 2))), self.dir / 'out.jpg')

    def test_list_images(self):
        """Test directory listing order and filtering"""
        for name in ('b.png', 'a.pgm', 'notes.txt'):
            (self.dir / name).write_bytes(b'')
        self.assertEqual([p.name for p in list_images(self.dir)], ['a.pgm', 'b.png'])


class TestKernelFiles(unittest.TestCase):
    """Test cases for the kernel text format"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip(self):
        """Test that weights survive a save and load"""
        weights = np.random.default_rng(0).uniform(0, 1, (5, 5))
        kernel = BlurKernel(weights / weights.sum())
        path = self.dir / 'k.txt'
        save_kernel(kernel, path)
        np.testing.assert_allclose(load_kernel(path).weights, kernel.weights, atol=1e-15)

    def test_normalizes(self):
        """Test that unnormalized weights are rescaled"""
        path = self.dir / 'k.txt'
        path.write_text("3\n2 2 2\n2 2 2\n2 2 2\n")
        np.testing.assert_allclose(load_kernel(path).weights, 1.0 / 9.0)

    def test_malformed(self):
        """Test short, negative, zero and missing kernel files"""
        cases = {
            'short.txt': "3\n1 1 1\n1 1 1\n",
            'negative.txt': "1\n-1\n",
            'zero.txt': "3\n0 0 0\n0 0 0\n0 0 0\n",
            'text.txt': "three\n",
        }
        for name, text in cases.items():
            (self.dir / name).write_text(text)
            with self.assertRaises(ImageIOError):
                load_kernel(self.dir / name)
        with self.assertRaises(ImageIOError):
            load_kernel(self.dir / 'absent.txt')


class TestHelpers(unittest.TestCase):
    """Test cases for paths, JSON and hashing"""

    def test_sibling_path(self):
        """Test extension replacement next to an output"""
        self.assertEqual(sibling_path('out/res.png', '.kernel.txt'), Path('out/res.kernel.txt'))

    def test_json_and_hash(self):
        """Test JSON round trip and the sha256 of a known payload"""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'doc.json'
            write_json({"b": 1, "a": [1.5, None]}, path)
            self.assertEqual(read_json(path), {"a": [1.5, None], "b": 1})
            self.assertLess(path.read_text().index('"a"'), path.read_text().index('"b"'))

            payload = Path(tmp) / 'abc.bin'
            payload.write_bytes(b'abc')
            self.assertEqual(
                file_sha256(payload),
                'ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad',
            )
            with self.assertRaises(ImageIOError):
                read_json(Path(tmp) / 'missing.json')


if __name__ == '__main__':
    unittest.main()
