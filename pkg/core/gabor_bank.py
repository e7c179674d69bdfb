"""Directional Gabor filters and the omnidirectional gradient stack."""

from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np
from loguru import logger
from scipy import ndimage

from core.errors import ConfigurationError
from data.models import BoundaryPolicy, GaborParams, GradientStack


def gabor_kernel(params):
    """Sample the Gabor function on a support x support grid

    g(u, v) = exp(-(u'^2 + gamma^2 v'^2) / (2 sigma^2)) * cos(2 pi u' / lambda + psi)
    with u' = u cos(theta) + v sin(theta), v' = -u sin(theta) + v cos(theta).
    Rows index v (downwards), columns index u. The grid is not normalized.

    Args:
        params (GaborParams): Filter parameters

    Returns:
        np.ndarray: (support, support) grid
    """
    half = params.support // 2
    v, u = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    theta = np.deg2rad(params.theta)
    psi = np.deg2rad(params.psi)
    u_rot = u * np.cos(theta) + v * np.sin(theta)
    v_rot = -u * np.sin(theta) + v * np.cos(theta)
    envelope = np.exp(-(u_rot ** 2 + params.gamma ** 2 * v_rot ** 2) / (2.0 * params.sigma ** 2))
    carrier = np.cos(2.0 * np.pi * u_rot / params.period_px + psi)
    return envelope * carrier


@dataclass(frozen=True)
class GaborBank:
    """Filters of a bank together with their orientations

    Behaves as a sequence of filter grids.

    Attributes:
        thetas (tuple): Orientations in degrees, reduced modulo 180
        filters (tuple): One grid per orientation
        params (GaborParams): Shared parameters (theta ignored)
    """

    thetas: Tuple[float, ...]
    filters: Tuple[np.ndarray, ...]
    params: GaborParams

    def __len__(self):
        return len(self.filters)

    def __iter__(self):
        return iter(self.filters)

    def __getitem__(self, index):
        return self.filters[index]


def even_thetas(n):
    """n orientations evenly spaced by 180/n degrees starting at 0"""
    if n < 1:
        raise ConfigurationError(f"filter count must be >= 1, got {n}")
    return [i * 180.0 / n for i in range(n)]


def make_bank(thetas, params=None):
    """Build one Gabor filter per orientation

    Args:
        thetas (list): Orientations in degrees, increasing after reduction modulo 180
        params (GaborParams, optional): Shared parameters; defaults from config

    Returns:
        GaborBank: Filters in the given order

    Raises:
        ConfigurationError: If thetas is empty, repeats an orientation modulo 180,
            or is not increasing
    """
    if params is None:
        params = GaborParams.from_config()
    thetas = [float(t) % 180.0 for t in thetas]
    if not thetas:
        raise ConfigurationError("at least one orientation is required")
    rounded = [round(t, 9) for t in thetas]
    if len(set(rounded)) != len(rounded):
        raise ConfigurationError(f"duplicate orientation (mod 180): {thetas}")
    if rounded != sorted(rounded):
        raise ConfigurationError(f"orientations must be listed in increasing order: {thetas}")
    filters = tuple(gabor_kernel(replace(params, theta=t)) for t in thetas)
    logger.debug(f"Gabor bank built: thetas={thetas}, support={params.support}")
    return GaborBank(tuple(thetas), filters, params)


def extract_gradients(image, bank, boundary=BoundaryPolicy.REPLICATE):
    """Convolve an image with every filter of a bank

    Args:
        image (RasterImage): Input image
        bank (GaborBank): Filter bank
        boundary (BoundaryPolicy): Border extension

    Returns:
        GradientStack: One signed channel per filter, image dimensions preserved
    """
    # Filters may be wider than a coarse pyramid level; the boundary policy defines the outside
    channels = np.stack([
        ndimage.convolve(image.data, f, mode=boundary.ndimage_mode, cval=0.0) for f in bank
    ])
    return GradientStack(channels, bank.thetas)
