"""Raster primitives: convolution, correlation and bilinear resampling.

All pipeline convolutions run in true-convolution orientation
(out(p) = sum_q k(q) * img(p - q + c)) with an explicit boundary policy.
"""

import numpy as np
from scipy import ndimage

from core.errors import DimensionError
from data.models import BlurKernel, BoundaryPolicy, RasterImage


def _weights(kernel):
    """Return the weight grid of a BlurKernel or a raw filter grid"""
    if isinstance(kernel, BlurKernel):
        return kernel.weights
    weights = np.asarray(kernel, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[0] % 2 == 0 or weights.shape[1] % 2 == 0:
        raise DimensionError(f"filter must be a 2-D grid with odd sides, got {weights.shape}")
    return weights


def _check_fits(shape, weights):
    if weights.shape[0] > shape[0] or weights.shape[1] > shape[1]:
        raise DimensionError(
            f"kernel {weights.shape} is larger than image {tuple(shape)}"
        )


def convolve_array(array, kernel, boundary=BoundaryPolicy.REPLICATE):
    """Convolve a bare 2-D array; the solvers' inner-loop entry point

    Args:
        array (np.ndarray): 2-D input
        kernel: BlurKernel or odd-sided filter grid
        boundary (BoundaryPolicy): Border extension

    Returns:
        np.ndarray: Output with the input's shape
    """
    weights = _weights(kernel)
    _check_fits(array.shape, weights)
    return ndimage.convolve(array, weights, mode=boundary.ndimage_mode, cval=0.0)


def correlate_array(array, kernel, boundary=BoundaryPolicy.REPLICATE):
    """Correlate a bare 2-D array (convolution with the flipped kernel)"""
    weights = _weights(kernel)
    _check_fits(array.shape, weights)
    return ndimage.correlate(array, weights, mode=boundary.ndimage_mode, cval=0.0)


def convolve2d(image, kernel, boundary=BoundaryPolicy.REPLICATE):
    """Convolve an image with a kernel

    Args:
        image (RasterImage): Input image
        kernel: BlurKernel or odd-sided filter grid
        boundary (BoundaryPolicy): Border extension

    Returns:
        RasterImage: Same dimensions as the input

    Raises:
        DimensionError: If the kernel is larger than the image
    """
    return RasterImage(convolve_array(image.data, kernel, boundary))


def correlate2d(image, kernel, boundary=BoundaryPolicy.REPLICATE):
    """Correlate an image with a kernel, the adjoint of convolve2d under zero padding

    Args:
        image (RasterImage): Input image
        kernel: BlurKernel or odd-sided filter grid
        boundary (BoundaryPolicy): Border extension

    Returns:
        RasterImage: Same dimensions as the input
    """
    return RasterImage(correlate_array(image.data, kernel, boundary))


def resize_array(array, shape):
    """Bilinear resampling of a 2-D array to explicit dimensions

    Pixel centres are aligned (src = (dst + 0.5) * in / out - 0.5) and
    coordinates outside the grid are clamped to the edge.
    """
    out_h, out_w = int(shape[0]), int(shape[1])
    if out_h < 1 or out_w < 1:
        raise DimensionError(f"resampled dimensions must be >= 1, got {(out_h, out_w)}")
    in_h, in_w = array.shape
    if (out_h, out_w) == (in_h, in_w):
        return np.array(array, dtype=np.float64, copy=True)
    rows = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    cols = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    rows = np.clip(rows, 0.0, in_h - 1)
    cols = np.clip(cols, 0.0, in_w - 1)
    grid_r, grid_c = np.meshgrid(rows, cols, indexing='ij')
    return ndimage.map_coordinates(
        np.asarray(array, dtype=np.float64), [grid_r, grid_c], order=1, mode='nearest'
    )


def resize(image, shape):
    """Bilinear resampling of an image to explicit dimensions

    Args:
        image (RasterImage): Input image
        shape (tuple): Target (height, width)

    Returns:
        RasterImage: Resampled image
    """
    return RasterImage(resize_array(image.data, shape))


def resample(image, factor):
    """Bilinear resampling by a scale factor

    Args:
        image (RasterImage): Input image
        factor (float): Positive scale; output dims = round(input dims * factor)

    Returns:
        RasterImage: Resampled image; factor 1.0 returns an identical copy

    Raises:
        DimensionError: If the factor is not positive or a dimension rounds to 0
    """
    if not factor > 0:
        raise DimensionError(f"resample factor must be positive, got {factor}")
    shape = (int(round(image.height * factor)), int(round(image.width * factor)))
    return resize(image, shape)
