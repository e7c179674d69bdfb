"""Non-blind deconvolution with a known kernel.

Two solvers share one frequency-domain core:
  tikhonov  argmin ||x (*) k - y||^2 + reg * (||Dx x||^2 + ||Dy x||^2), exact
  sparse    argmin ||x (*) k - y||^2 + reg * (|Dx x|_1 + |Dy x|_1), half-quadratic splitting
"""

import numpy as np
from loguru import logger
from scipy import fft

import config
from core.errors import ConfigurationError, DimensionError
from core.latent_solver import soft_shrink
from data.models import NonblindConfig, RasterImage

SUPPORTED_BOUNDARIES = ('replicate', 'periodic')

# Half-quadratic continuation: beta_i = reg * BETA_START * BETA_GROWTH^i
BETA_START = 8.0
BETA_GROWTH = 2.0

# Guard for frequency responses that vanish together with the regularizer
DENOMINATOR_FLOOR = 1e-12


def psf2otf(psf, shape):
    """Optical transfer function of a centred filter on a periodic grid of `shape`"""
    psf = np.asarray(psf, dtype=np.float64)
    padded = np.zeros(shape)
    padded[:psf.shape[0], :psf.shape[1]] = psf
    padded = np.roll(padded, (-(psf.shape[0] // 2), -(psf.shape[1] // 2)), axis=(0, 1))
    return fft.fft2(padded)


class _FrequencyProblem:
    """Transfer functions of blur and first differences on one periodic grid"""

    def __init__(self, shape, kernel):
        self.shape = shape
        self.k_otf = psf2otf(kernel.weights, shape)
        # Forward differences x[p + 1] - x[p] along columns and rows
        self.dx_otf = psf2otf(np.array([[1.0, -1.0, 0.0]]), shape)
        self.dy_otf = psf2otf(np.array([[1.0], [-1.0], [0.0]]), shape)
        self.k_power = np.abs(self.k_otf) ** 2
        self.d_power = np.abs(self.dx_otf) ** 2 + np.abs(self.dy_otf) ** 2

    def solve(self, numerator, weight):
        denominator = np.maximum(self.k_power + weight * self.d_power, DENOMINATOR_FLOOR)
        return np.real(fft.ifft2(numerator / denominator))

    def blurred_data(self, y):
        return np.conj(self.k_otf) * fft.fft2(y)

    def gradients(self, x):
        spectrum = fft.fft2(x)
        return (
            np.real(fft.ifft2(self.dx_otf * spectrum)),
            np.real(fft.ifft2(self.dy_otf * spectrum)),
        )

    def gradient_adjoint(self, ux, uy):
        return np.conj(self.dx_otf) * fft.fft2(ux) + np.conj(self.dy_otf) * fft.fft2(uy)


def _taper_weights(length, inner_start, inner_stop, taper):
    """1 on [inner_start, inner_stop), ramping linearly to 0 over `taper` samples outside"""
    index = np.arange(length)
    distance = np.maximum(inner_start - index, index - (inner_stop - 1))
    distance = np.maximum(distance, 0)
    return np.clip(1.0 - distance / float(taper + 1), 0.0, 1.0)


def _extend(y, kernel, taper):
    """Edge-replicate y by the kernel radius plus a taper band, up to FFT-friendly sizes

    The outer band is blended towards the circularly blurred extension so the
    periodic wrap stays smooth.

    Returns:
        tuple: (extended array, (row slice, column slice) of the original image)
    """
    radius = kernel.side // 2
    pad = radius + taper
    height, width = y.shape
    out_h = fft.next_fast_len(height + 2 * pad)
    out_w = fft.next_fast_len(width + 2 * pad)
    pad_widths = ((pad, out_h - height - pad), (pad, out_w - width - pad))
    extended = np.pad(y, pad_widths, mode='edge')

    blurred = np.real(fft.ifft2(psf2otf(kernel.weights, extended.shape) * fft.fft2(extended)))
    rows = _taper_weights(out_h, pad - radius, pad + height + radius, taper)
    cols = _taper_weights(out_w, pad - radius, pad + width + radius, taper)
    weight = np.outer(rows, cols)
    extended = weight * extended + (1.0 - weight) * blurred
    return extended, (slice(pad, pad + height), slice(pad, pad + width))


def _prepare(y, kernel, boundary):
    if boundary not in SUPPORTED_BOUNDARIES:
        raise ConfigurationError(f"unknown boundary '{boundary}', expected one of {SUPPORTED_BOUNDARIES}")
    if kernel.side > y.height or kernel.side > y.width:
        raise DimensionError(f"kernel side {kernel.side} exceeds image {y.shape}")
    if boundary == 'periodic':
        data = np.array(y.data)
        crop = (slice(0, y.height), slice(0, y.width))
    else:
        data, crop = _extend(y.data, kernel, config.EDGE_TAPER)
    return data, crop, _FrequencyProblem(data.shape, kernel)


def tikhonov_solve(y, k, reg, boundary='replicate'):
    """Exact gradient-Tikhonov deconvolution, unclamped

    Args:
        y (RasterImage): Blurred image
        k (BlurKernel): Kernel
        reg (float): Weight of the squared-gradient penalty, > 0
        boundary (str): 'periodic' solves the circulant problem on y itself;
            'replicate' solves on an edge-replicated, tapered extension and crops

    Returns:
        RasterImage: Solution with y's dimensions
    """
    if not reg > 0:
        raise ConfigurationError(f"regularization weight must be positive, got {reg}")
    data, crop, problem = _prepare(y, k, boundary)
    solution = problem.solve(problem.blurred_data(data), reg)
    return RasterImage(solution[crop])


def sparse_solve(y, k, reg, iters, boundary='replicate'):
    """l1-gradient deconvolution by half-quadratic splitting, unclamped

    Alternates u = shrink(grad x, reg / (2 beta)) with the exact x update
    (K^T K + beta D^T D) x = K^T y + beta D^T u, doubling beta every step.

    Args:
        y (RasterImage): Blurred image
        k (BlurKernel): Kernel
        reg (float): Weight of the l1 gradient penalty, > 0
        iters (int): Continuation steps
        boundary (str): 'replicate' or 'periodic'

    Returns:
        RasterImage: Solution with y's dimensions
    """
    if not reg > 0:
        raise ConfigurationError(f"regularization weight must be positive, got {reg}")
    data, crop, problem = _prepare(y, k, boundary)
    rhs = problem.blurred_data(data)
    x = problem.solve(rhs, reg)
    beta = reg * BETA_START
    for _ in range(iters):
        gx, gy = problem.gradients(x)
        threshold = reg / (2.0 * beta)
        ux = soft_shrink(gx, threshold)
        uy = soft_shrink(gy, threshold)
        x = problem.solve(rhs + beta * problem.gradient_adjoint(ux, uy), beta)
        beta *= BETA_GROWTH
    return RasterImage(x[crop])


def deconvolve(y, k, cfg=None):
    """Recover the sharp image for a known kernel

    Args:
        y (RasterImage): Blurred image
        k (BlurKernel): Kernel
        cfg (NonblindConfig, optional): Method and weights; defaults from config

    Returns:
        RasterImage: Deconvolved image clamped to [0, 1]
    """
    if cfg is None:
        cfg = NonblindConfig.from_config()
    logger.debug(f"Non-blind {cfg.method}: reg={cfg.reg_weight}, kernel side={k.side}")
    if cfg.method == 'tikhonov':
        result = tikhonov_solve(y, k, cfg.reg_weight)
    else:
        result = sparse_solve(y, k, cfg.reg_weight, cfg.inner_iters)
    return result.clamped()
