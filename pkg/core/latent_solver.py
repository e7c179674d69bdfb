"""Latent gradient estimation with FISTA on the fixed-norm convex surrogate.

With mu = alpha * ||x0||_2 held fixed, the latent problem becomes
min_x mu * sum_c ||x_c (*) k - g_c||^2 + ||x||_1, solved by accelerated
proximal gradient steps of size tau = t * alpha / mu.
"""

from dataclasses import dataclass

import numpy as np
from loguru import logger

from core.errors import ConfigurationError, DimensionError, NumericDivergenceError, UndefinedRatioError
from core.imgcore import convolve_array, correlate_array
from data.models import BoundaryPolicy, GradientStack

# Floor on ||x0||_2 relative to alpha for an all-zero starting stack
MU_FLOOR = 1e-6


def soft_shrink(v, threshold):
    """Soft shrinkage max(|v| - threshold, 0) * sign(v), elementwise

    Args:
        v: Scalar or array
        threshold (float): Nonnegative threshold

    Returns:
        Same kind as v
    """
    if threshold < 0:
        raise ConfigurationError(f"shrinkage threshold must be >= 0, got {threshold}")
    shrunk = np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)
    if np.isscalar(v):
        return float(shrunk)
    return shrunk


def compute_mu(x, alpha):
    """mu = alpha * joint Euclidean norm of a gradient stack"""
    return float(alpha * x.norm())


def next_q(q):
    """FISTA momentum recurrence q' = (1 + sqrt(1 + 4 q^2)) / 2"""
    return (1.0 + np.sqrt(1.0 + 4.0 * q * q)) / 2.0


@dataclass
class FistaState:
    """Iterates of one FISTA run (channel arrays of shape (n, H, W))

    Attributes:
        x_prev (np.ndarray): x_{j-1}
        x_curr (np.ndarray): x_j
        z (np.ndarray): Momentum point
        q (float): Momentum scalar, q_1 = 1
        iteration (int): Completed iterations j
    """

    x_prev: np.ndarray
    x_curr: np.ndarray
    z: np.ndarray
    q: float = 1.0
    iteration: int = 0

    def advance(self, x_new):
        """Accept x_new as x_{j+1} and move the momentum point"""
        q_next = next_q(self.q)
        self.x_prev, self.x_curr = self.x_curr, x_new
        self.z = x_new + ((self.q - 1.0) / q_next) * (x_new - self.x_prev)
        self.q = q_next
        self.iteration += 1


def _blur_stack(channels, kernel, boundary):
    return np.stack([convolve_array(c, kernel, boundary) for c in channels])


def _adjoint_stack(channels, kernel, boundary):
    return np.stack([correlate_array(c, kernel, boundary) for c in channels])


def eval_objective_x(x, k, g, mu, boundary=BoundaryPolicy.ZERO):
    """mu * sum_c ||x_c (*) k - g_c||^2 + sum_c ||x_c||_1

    Args:
        x (GradientStack): Latent stack
        k (BlurKernel): Kernel
        g (GradientStack): Observed stack
        mu (float): Fit weight
        boundary (BoundaryPolicy): Border extension of the convolution

    Returns:
        float: Objective value
    """
    if x.channels.shape != g.channels.shape:
        raise DimensionError(f"latent {x.channels.shape} and observed {g.channels.shape} stacks differ")
    residual = _blur_stack(x.channels, k, boundary) - g.channels
    return float(mu * np.sum(residual ** 2) + np.sum(np.abs(x.channels)))


def fista_solve(g, k, config, x0, boundary=BoundaryPolicy.ZERO, state_callback=None):
    """Run config.fista_iters FISTA iterations on the latent problem

    Args:
        g (GradientStack): Observed gradient stack (fit target)
        k (BlurKernel): Current kernel
        config (SolverConfig): Uses alpha, step_t and fista_iters
        x0 (GradientStack): Starting latent stack; also fixes mu
        boundary (BoundaryPolicy): Border extension; ZERO keeps the adjoint exact
        state_callback (callable, optional): Receives the FistaState after every iteration

    Returns:
        GradientStack: x_M

    Raises:
        DimensionError: If g and x0 differ in shape
        NumericDivergenceError: If an iterate becomes non-finite
    """
    if x0.channels.shape != g.channels.shape:
        raise DimensionError(f"latent {x0.channels.shape} and observed {g.channels.shape} stacks differ")

    mu = max(compute_mu(x0, config.alpha), config.alpha * MU_FLOOR)
    tau = config.step_t * config.alpha / mu
    gradient_scale = 2.0 * mu * tau

    start = np.array(x0.channels, copy=True)
    state = FistaState(x_prev=start, x_curr=start, z=start.copy())
    for j in range(1, config.fista_iters + 1):
        residual = _blur_stack(state.z, k, boundary) - g.channels
        gradient = _adjoint_stack(residual, k, boundary)
        x_new = soft_shrink(state.z - gradient_scale * gradient, tau)
        if not np.all(np.isfinite(x_new)):
            raise NumericDivergenceError(f"FISTA iteration {j}: non-finite values")
        state.advance(x_new)
        if state_callback is not None:
            state_callback(state)

    logger.debug(f"FISTA finished: mu={mu:.4g}, tau={tau:.4g}, iterations={state.iteration}")
    return GradientStack(state.x_curr, g.thetas)


def eval_ratio_diagnostic(x):
    """Scale-invariant sparsity ||x||_1 / ||x||_2 over the joint stack

    Raises:
        UndefinedRatioError: If the stack is all zero
    """
    l2 = x.norm()
    if l2 == 0:
        raise UndefinedRatioError("l1/l2 ratio is undefined for an all-zero stack")
    return float(np.sum(np.abs(x.channels)) / l2)
