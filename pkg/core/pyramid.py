"""Coarse-to-fine schedule and state hand-over between pyramid levels."""

import math

import numpy as np
from loguru import logger

from core.errors import ConfigurationError, PyramidStateError
from core.gabor_bank import extract_gradients
from core.imgcore import resize_array
from core.kernel_solver import project_simplex
from data.models import BlurKernel, PyramidLevel, PyramidSchedule


class SeededRng:
    """Reproducible random source built on numpy's SeedSequence

    Attributes:
        seed (int): Master seed (unsigned 64-bit)
        spawn_key (tuple): Path of spawn indices from the master seed
        generator (np.random.Generator): Draw source
    """

    def __init__(self, seed=0, spawn_key=()):
        seed = int(seed)
        if seed < 0 or seed >= 2 ** 64:
            raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.spawn_key = tuple(spawn_key)
        self.generator = np.random.default_rng(
            np.random.SeedSequence(seed, spawn_key=self.spawn_key)
        )

    def spawn(self, index):
        """Independent child source for entry `index`, same for every call"""
        return SeededRng(self.seed, self.spawn_key + (int(index),))

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)


def snap_odd(value):
    """Nearest odd integer to value, ties upward"""
    return 2 * int(math.floor((value - 1.0) / 2.0 + 0.5)) + 1


def build_schedule(h, s, min_side=3):
    """Kernel sides h / s^i snapped to odd, deduplicated, down to min_side

    Args:
        h (int): Finest kernel side (odd)
        s (float): Scale ratio between levels, > 1
        min_side (int): Coarsest allowed side (odd, >= 3)

    Returns:
        PyramidSchedule: Levels coarsest first; image_scale = side / h

    Raises:
        ConfigurationError: On even or too small sides, or s <= 1
    """
    if h % 2 == 0 or h < 3:
        raise ConfigurationError(f"kernel size must be odd and >= 3, got {h}")
    if min_side % 2 == 0 or min_side < 3:
        raise ConfigurationError(f"minimum kernel size must be odd and >= 3, got {min_side}")
    if h < min_side:
        raise ConfigurationError(f"kernel size {h} is below the minimum {min_side}")
    if not s > 1:
        raise ConfigurationError(f"scale ratio must exceed 1, got {s}")

    sides = [h]
    value = float(h)
    while sides[-1] > min_side:
        value /= s
        side = max(snap_odd(value), min_side)
        if side < sides[-1]:
            sides.append(side)

    sides.reverse()
    m = len(sides)
    levels = tuple(
        PyramidLevel(index=m - i, kernel_side=side, image_scale=side / h)
        for i, side in enumerate(sides)
    )
    logger.debug(f"Pyramid schedule: h={h}, s={s:.4f}, sides={sides}")
    return PyramidSchedule(levels=levels, scale_ratio=s, max_kernel=h)


def init_coarsest(schedule, blurred_coarse, bank, rng):
    """Random simplex kernel and Gabor latent stack for the coarsest level

    Args:
        schedule (PyramidSchedule): Schedule; its first level is used
        blurred_coarse (RasterImage): Observation resampled to the coarsest level
        bank (GaborBank): Filter bank
        rng (SeededRng): Random source

    Returns:
        tuple: (BlurKernel, GradientStack)
    """
    side = schedule.levels[0].kernel_side
    weights = rng.uniform(0.0, 1.0, (side, side))
    kernel = BlurKernel(project_simplex(weights))
    latent = extract_gradients(blurred_coarse, bank)
    return kernel, latent


def upscale_state(kernel, latent, from_level, to_level, full_shape):
    """Carry kernel and latent from one level to the next finer one

    Args:
        kernel (BlurKernel): Kernel at from_level
        latent (GradientStack): Latent stack at from_level
        from_level (PyramidLevel): Current level
        to_level (PyramidLevel): Next finer level
        full_shape (tuple): Input image dimensions

    Returns:
        tuple: (BlurKernel, GradientStack) sized for to_level

    Raises:
        PyramidStateError: If the levels are not adjacent or the latent does
            not have from_level's dimensions
    """
    if to_level.index != from_level.index - 1:
        raise PyramidStateError(
            f"cannot upscale from level {from_level.index} to level {to_level.index}"
        )
    expected = from_level.image_shape(full_shape)
    if tuple(latent.image_shape) != expected:
        raise PyramidStateError(
            f"latent {tuple(latent.image_shape)} does not match level {from_level.index} shape {expected}"
        )
    if kernel.side != from_level.kernel_side:
        raise PyramidStateError(
            f"kernel side {kernel.side} does not match level {from_level.index} side {from_level.kernel_side}"
        )

    side = to_level.kernel_side
    new_kernel = BlurKernel(project_simplex(resize_array(kernel.weights, (side, side))))
    shape = to_level.image_shape(full_shape)
    channels = np.stack([resize_array(c, shape) for c in latent.channels])
    return new_kernel, latent.with_channels(channels)
