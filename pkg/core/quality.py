"""Image quality figures: MSE/PSNR against a reference and the Haar defocus score."""

import math

import numpy as np
from scipy.signal import correlate

import config
from core.errors import ConfigurationError, DimensionError
from data.models import HaarSubbands, QualityReport


def _check_same_shape(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"image dimensions differ: {a.shape} vs {b.shape}")


def mse(a, b):
    """Mean square error between two equally sized images"""
    _check_same_shape(a, b)
    return float(np.mean((a.data - b.data) ** 2))


def psnr(a, b, max_i=1.0):
    """Peak signal-to-noise ratio 10 log10(max_i^2 / mse)

    Args:
        a (RasterImage): First image
        b (RasterImage): Second image, same dimensions
        max_i (float): Peak intensity

    Returns:
        float: PSNR in dB; math.inf for identical images
    """
    if not max_i > 0:
        raise ConfigurationError(f"max_i must be positive, got {max_i}")
    error = mse(a, b)
    if error == 0:
        return math.inf
    return float(10.0 * math.log10(max_i * max_i / error))


def haar_decompose(img):
    """Single-level orthonormal Haar transform on 2x2 blocks (a, b; c, d)

    ll = (a+b+c+d)/2, lh = (a-b+c-d)/2, hl = (a+b-c-d)/2, hh = (a-b-c+d)/2.
    An odd last row or column is replicated before blocking.
    """
    if img.height < 2 or img.width < 2:
        raise DimensionError(f"Haar transform needs at least 2x2 pixels, got {img.shape}")
    data = img.data
    data = np.pad(data, ((0, img.height % 2), (0, img.width % 2)), mode='edge')
    a = data[0::2, 0::2]
    b = data[0::2, 1::2]
    c = data[1::2, 0::2]
    d = data[1::2, 1::2]
    return HaarSubbands(
        ll=(a + b + c + d) / 2.0,
        lh=(a - b + c - d) / 2.0,
        hl=(a + b - c - d) / 2.0,
        hh=(a - b - c + d) / 2.0,
    )


def defocus_score(img, scale=None):
    """Blur score Q_B = exp(-sigma_d) from the diagonal Haar band

    sigma_d is the population standard deviation of hh * scale / 2, i.e. the
    image read in 0..scale intensity units. Higher Q_B means blurrier.

    Args:
        img (RasterImage): Image in [0, 1] units
        scale (float, optional): Intensity scale; config.DEFOCUS_SCALE by default

    Returns:
        tuple: (Q_B, sigma_d)
    """
    if scale is None:
        scale = config.DEFOCUS_SCALE
    hh = haar_decompose(img).hh * (scale / 2.0)
    sigma_d = float(np.std(hh))
    return math.exp(-sigma_d), sigma_d


def quality_report(img, reference=None, max_i=1.0, scale=None):
    """Collect the defocus score and, given a reference, MSE and PSNR"""
    q_b, sigma_d = defocus_score(img, scale)
    report = QualityReport(defocus_score=q_b, sigma_d=sigma_d)
    if reference is not None:
        report.mse = mse(img, reference)
        report.psnr_db = psnr(img, reference, max_i)
    return report


def aligned_ncc(a, b):
    """Cosine similarity of two grids maximized over integer shifts

    Grids of different sizes are compared with zero padding.

    Args:
        a (np.ndarray): First grid (e.g. estimated kernel weights)
        b (np.ndarray): Second grid

    Returns:
        float: Best normalized cross-correlation, 0 when either grid is zero
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    norm = np.linalg.norm(a) * np.linalg.norm(b)
    if norm == 0:
        return 0.0
    return float(np.max(correlate(a, b, mode='full', method='direct')) / norm)
