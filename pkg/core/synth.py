"""Ground-truth blur synthesis: kernels, noise and structured test patterns."""

import math

import numpy as np
from scipy import ndimage

from core.errors import ConfigurationError
from core.imgcore import convolve_array
from core.pyramid import SeededRng
from data.models import BlurKernel, BoundaryPolicy, NoiseSpec, RasterImage

KERNEL_KINDS = ['gaussian', 'linear-motion', 'box', 'random-walk']
KERNEL_ALIASES = {'motion': 'linear-motion', 'walk': 'random-walk'}

PATTERN_KINDS = ['shapes', 'checker', 'stripes', 'rings', 'star', 'steps', 'bars', 'blobs']


def _splat(grid, row, col, weight):
    """Distribute weight bilinearly onto the four pixels around (row, col)"""
    r0, c0 = int(math.floor(row)), int(math.floor(col))
    fr, fc = row - r0, col - c0
    for dr, wr in ((0, 1.0 - fr), (1, fr)):
        for dc, wc in ((0, 1.0 - fc), (1, fc)):
            r, c = r0 + dr, c0 + dc
            if wr * wc > 0 and 0 <= r < grid.shape[0] and 0 <= c < grid.shape[1]:
                grid[r, c] += weight * wr * wc


def _gaussian(side, sigma):
    if not sigma > 0:
        raise ConfigurationError(f"gaussian kernel needs sigma > 0, got {sigma}")
    half = side // 2
    v, u = np.mgrid[-half:half + 1, -half:half + 1].astype(np.float64)
    return np.exp(-(u ** 2 + v ** 2) / (2.0 * sigma ** 2))


def _linear_motion(side, length, angle):
    if length < 1 or length > side:
        raise ConfigurationError(f"motion length must lie in [1, {side}], got {length}")
    grid = np.zeros((side, side))
    centre = side // 2
    theta = math.radians(angle)
    samples = max(2, 8 * int(math.ceil(length)))
    for t in np.linspace(-(length - 1) / 2.0, (length - 1) / 2.0, samples):
        # Angles run counter-clockwise with rows pointing down
        _splat(grid, centre - t * math.sin(theta), centre + t * math.cos(theta), 1.0)
    return grid


def _random_walk(side, seed, steps):
    rng = SeededRng(seed)
    grid = np.zeros((side, side))
    centre = side // 2
    row = col = float(centre)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    for _ in range(steps):
        _splat(grid, row, col, 1.0)
        heading += rng.normal(0.0, 0.6)
        row = min(max(row + 0.5 * math.sin(heading), 0.0), side - 1.0)
        col = min(max(col + 0.5 * math.cos(heading), 0.0), side - 1.0)
    return grid


def make_kernel(kind, side, **params):
    """Generate a feasible test kernel

    Args:
        kind (str): 'gaussian' (sigma), 'linear-motion' (length, angle),
            'box', or 'random-walk' (seed, steps)
        side (int): Odd kernel side
        **params: Kind-specific parameters

    Returns:
        BlurKernel: Nonnegative kernel summing to 1

    Raises:
        ConfigurationError: On an unknown kind or invalid parameters
    """
    kind = KERNEL_ALIASES.get(kind, kind)
    if side < 1 or side % 2 == 0:
        raise ConfigurationError(f"kernel side must be odd and >= 1, got {side}")
    if kind == 'gaussian':
        grid = _gaussian(side, params.get('sigma', side / 4.0))
    elif kind == 'linear-motion':
        grid = _linear_motion(side, params.get('length', side), params.get('angle', 0.0))
    elif kind == 'box':
        grid = np.ones((side, side))
    elif kind == 'random-walk':
        grid = _random_walk(side, params.get('seed', 0), params.get('steps', 4 * side))
    else:
        raise ConfigurationError(f"unknown kernel kind '{kind}', expected one of {KERNEL_KINDS}")
    return BlurKernel(grid / grid.sum())


def parse_kernel_spec(text):
    """Build a kernel from 'gaussian:5:1.5', 'motion:9:30', 'box:3' or 'walk:15:7'

    The second field is always the side; motion kernels span the full side.
    """
    parts = text.split(':')
    try:
        kind = KERNEL_ALIASES.get(parts[0], parts[0])
        side = int(parts[1])
        if kind == 'gaussian':
            return make_kernel(kind, side, sigma=float(parts[2]))
        if kind == 'linear-motion':
            return make_kernel(kind, side, angle=float(parts[2]))
        if kind == 'random-walk':
            return make_kernel(kind, side, seed=int(parts[2]) if len(parts) > 2 else 0)
        if kind == 'box':
            return make_kernel(kind, side)
    except (IndexError, ValueError) as e:
        raise ConfigurationError(f"malformed kernel spec '{text}': {e}") from e
    raise ConfigurationError(f"unknown kernel kind in '{text}'")


def synthesize(x, k, noise=None):
    """y = x (*) k + N, clamped to [0, 1]

    Args:
        x (RasterImage): Sharp image
        k (BlurKernel): Kernel
        noise (NoiseSpec, optional): Additive Gaussian noise; none by default

    Returns:
        RasterImage: Blurred observation
    """
    if noise is None:
        noise = NoiseSpec()
    blurred = convolve_array(x.data, k, BoundaryPolicy.REPLICATE)
    if noise.sigma > 0:
        blurred = blurred + SeededRng(noise.seed).normal(0.0, noise.sigma, blurred.shape)
    return RasterImage(np.clip(blurred, 0.0, 1.0))


def make_pattern(kind, size, seed=0):
    """Structured size x size test image in [0, 1]

    Args:
        kind (str): One of PATTERN_KINDS
        size (int): Side in pixels, >= 8
        seed (int): Seed for the randomized patterns ('shapes', 'blobs')

    Returns:
        RasterImage: Test image
    """
    if size < 8:
        raise ConfigurationError(f"pattern size must be >= 8, got {size}")
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    centre = (size - 1) / 2.0
    radius = np.hypot(rows - centre, cols - centre)
    angle = np.arctan2(rows - centre, cols - centre)
    cell = max(2, size // 8)

    if kind == 'shapes':
        rng = SeededRng(seed)
        img = np.full((size, size), 0.3)
        for _ in range(6):
            top, left = rng.uniform(0, size * 0.7, 2)
            height, width = rng.uniform(size * 0.1, size * 0.3, 2)
            img[int(top):int(top + height), int(left):int(left + width)] = rng.uniform(0.0, 1.0)
        for _ in range(4):
            cy, cx = rng.uniform(size * 0.15, size * 0.85, 2)
            r = rng.uniform(size * 0.05, size * 0.15)
            img[np.hypot(rows - cy, cols - cx) <= r] = rng.uniform(0.0, 1.0)
        img[(rows > size * 0.6) & (cols < rows - size * 0.4)] = 0.9
    elif kind == 'checker':
        img = ((rows // cell + cols // cell) % 2).astype(np.float64) * 0.8 + 0.1
    elif kind == 'stripes':
        img = 0.5 + 0.4 * np.sign(np.sin(2.0 * np.pi * (rows + cols) / (2.0 * cell)))
    elif kind == 'rings':
        img = 0.5 + 0.4 * np.sign(np.sin(2.0 * np.pi * radius / (1.5 * cell)))
    elif kind == 'star':
        img = 0.5 + 0.4 * np.sign(np.sin(12.0 * angle))
    elif kind == 'steps':
        img = np.floor(cols / (size / 5.0)) / 5.0 + 0.1
        img[rows > size / 2] = 1.0 - img[rows > size / 2]
    elif kind == 'bars':
        img = np.full((size, size), 0.1)
        for i, start in enumerate(range(cell, size - cell, 2 * cell)):
            img[start:start + cell, cell:size - cell] = 0.3 + 0.1 * (i % 6)
        img[cell:size - cell, size // 2 - cell // 2:size // 2 + cell // 2 + 1] = 0.95
    elif kind == 'blobs':
        noise = SeededRng(seed).uniform(0.0, 1.0, (size, size))
        smooth = ndimage.gaussian_filter(noise, sigma=size / 16.0, mode='wrap')
        img = (smooth > np.median(smooth)).astype(np.float64) * 0.7 + 0.15
    else:
        raise ConfigurationError(f"unknown pattern '{kind}', expected one of {PATTERN_KINDS}")
    return RasterImage(np.clip(img, 0.0, 1.0))
