import time

import numpy as np
from loguru import logger

import config
from core.errors import (
    DegenerateInputError,
    DimensionError,
    NumericDivergenceError,
    OperatorNotPSDError,
    UndefinedRatioError,
)
from core.gabor_bank import extract_gradients, make_bank
from core.imgcore import convolve_array, resize
from core.kernel_solver import irls_solve
from core.latent_solver import eval_ratio_diagnostic, fista_solve
from core.nonblind import deconvolve
from core.pyramid import build_schedule, init_coarsest, upscale_state
from data.models import (
    BoundaryPolicy,
    DeblurRun,
    GaborParams,
    LevelTrace,
    NonblindConfig,
    SolverConfig,
)

# Solver failures that get the level index attached on the way out
LEVEL_ERRORS = (NumericDivergenceError, OperatorNotPSDError, DegenerateInputError, DimensionError)

# Largest filter response, relative to the image's peak value, still counted as no gradient
DEGENERATE_RESPONSE = 1e-9


def _ratio_or_none(stack, what, level):
    try:
        return eval_ratio_diagnostic(stack)
    except UndefinedRatioError:
        logger.warning(f"Level {level}: l1/l2 ratio of the {what} stack is undefined (all zero)")
        return None


def _match_scale(latent, kernel, observed):
    """Rescale latent so that latent (*) kernel best fits observed in least squares"""
    predicted = np.stack([
        convolve_array(c, kernel, BoundaryPolicy.ZERO) for c in latent.channels
    ])
    energy = float(np.sum(predicted ** 2))
    if energy == 0:
        return latent
    factor = float(np.sum(predicted * observed.channels)) / energy
    return latent.with_channels(latent.channels * factor)


class BlindDeconvolver:
    """Coarse-to-fine blind kernel estimation followed by non-blind deconvolution

    Every pyramid level alternates latent gradient updates (FISTA) with
    kernel updates (IRLS) on Gabor gradient stacks normalized to unit norm.

    Attributes:
        solver (SolverConfig): Blind estimation constants
        gabor (GaborParams): Filter parameters shared by the bank
        thetas (list): Filter orientations in degrees
        nonblind (NonblindConfig): Final deconvolution settings
        scale_ratio (float): Pyramid ratio s
        min_kernel (int): Coarsest kernel side
    """

    def __init__(self, solver=None, gabor=None, thetas=None, nonblind=None,
                 scale_ratio=None, min_kernel=None):
        self.solver = solver or SolverConfig.from_config()
        self.gabor = gabor or GaborParams.from_config()
        self.nonblind = nonblind or NonblindConfig.from_config()
        self.bank = make_bank(thetas if thetas is not None else config.DEFAULT_THETAS, self.gabor)
        self.thetas = list(self.bank.thetas)
        self.scale_ratio = scale_ratio or config.SCALE_RATIO
        self.min_kernel = min_kernel or config.MIN_KERNEL
        logger.info(f"BlindDeconvolver initialized with {len(self.bank)} Gabor filters")

    def schedule_for(self, kernel_size):
        """Pyramid schedule for a finest kernel side"""
        return build_schedule(kernel_size, self.scale_ratio, self.min_kernel)

    def _observed(self, image):
        stack = extract_gradients(image, self.bank)
        peak = max(1.0, float(np.abs(image.data).max()))
        if np.abs(stack.channels).max() < DEGENERATE_RESPONSE * peak:
            raise DegenerateInputError("observed image has no gradient content")
        return stack.with_channels(stack.channels / stack.norm())

    def _run_level(self, observed, kernel, latent):
        for _ in range(self.solver.outer_em_iters):
            latent = fista_solve(observed, kernel, self.solver, latent)
            kernel = irls_solve(latent, observed, kernel, self.solver)
        return kernel, latent

    def estimate_kernel(self, y, schedule, rng):
        """Estimate the blur kernel of an observation

        Args:
            y (RasterImage): Blurred grayscale image
            schedule (PyramidSchedule): Coarse-to-fine schedule
            rng (SeededRng): Source of the random initial kernel

        Returns:
            tuple: (BlurKernel, DeblurRun) with one trace entry per level

        Raises:
            DimensionError: If the image is smaller than the finest kernel
        """
        if schedule.max_kernel > min(y.shape):
            raise DimensionError(
                f"kernel size {schedule.max_kernel} exceeds image dimensions {y.shape}"
            )
        run = DeblurRun(config=self.solver, schedule=schedule, thetas=list(self.thetas))
        kernel = latent = previous = None

        for level in schedule.levels:
            started = time.perf_counter()
            shape = level.image_shape(y.shape)
            try:
                level_image = resize(y, shape)
                observed = self._observed(level_image)
                if previous is None:
                    # x0 is the normalized observed stack; the random kernel
                    # is fitted to it before any latent update
                    kernel, _ = init_coarsest(schedule, level_image, self.bank, rng)
                    latent = observed
                    kernel = irls_solve(latent, observed, kernel, self.solver)
                else:
                    kernel, latent = upscale_state(kernel, latent, previous, level, y.shape)
                    latent = _match_scale(latent, kernel, observed)
                kernel, latent = self._run_level(observed, kernel, latent)
            except LEVEL_ERRORS as e:
                raise type(e)(f"level {level.index}: {e}") from e

            ratio_latent = _ratio_or_none(latent, 'latent', level.index)
            ratio_observed = _ratio_or_none(observed, 'observed', level.index)
            run.trace.append(LevelTrace(
                level=level.index,
                kernel_side=kernel.side,
                image_shape=shape,
                channels=observed.count,
                ratio_latent=ratio_latent,
                ratio_observed=ratio_observed,
                kernel=kernel,
            ))
            run.level_seconds.append(time.perf_counter() - started)
            logger.info(
                f"Level {level.index}/{schedule.m}: kernel {kernel.side}x{kernel.side}, "
                f"image {shape[0]}x{shape[1]}, l1/l2 latent={ratio_latent}, observed={ratio_observed}"
            )
            previous = level

        run.final_kernel = kernel
        return kernel, run

    def deblur(self, y, schedule, rng):
        """Estimate the kernel, then deconvolve y with it

        Returns:
            tuple: (RasterImage, BlurKernel, DeblurRun); the image has y's
                dimensions and values in [0, 1]
        """
        kernel, run = self.estimate_kernel(y, schedule, rng)
        image = deconvolve(y, kernel, self.nonblind)
        run.final_image = image
        return image, kernel, run
