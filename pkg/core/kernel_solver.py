"""Kernel estimation: IRLS over conjugate-gradient solves, then simplex projection."""

from dataclasses import dataclass

import numpy as np
from loguru import logger
from scipy.signal import fftconvolve

from core.errors import (
    DegenerateInputError,
    DimensionError,
    NumericDivergenceError,
    OperatorNotPSDError,
)
from data.models import BlurKernel

CG_TOLERANCE = 1e-9


@dataclass
class IrlsState:
    """Working vectors of one IRLS run

    Attributes:
        kernel (np.ndarray): Flattened kernel estimate, length side^2
        weights (np.ndarray): Diagonal l1 reweighting, same length
        outer (int): Completed reweighting rounds
        cg_iterations (int): CG iterations consumed so far
    """

    kernel: np.ndarray
    weights: np.ndarray
    outer: int = 0
    cg_iterations: int = 0


def project_simplex(k):
    """Clamp negatives to zero and renormalize to sum 1

    Falls back to the centred delta when nothing positive is left. For a
    flattened odd square kernel, index size // 2 is the grid centre.

    Args:
        k (np.ndarray): Kernel weights, flat or 2-D

    Returns:
        np.ndarray: Feasible weights with the input's shape
    """
    k = np.asarray(k, dtype=np.float64)
    clamped = np.clip(k, 0.0, None)
    total = clamped.sum()
    if not total > 0:
        delta = np.zeros_like(clamped)
        if delta.ndim == 2:
            delta[delta.shape[0] // 2, delta.shape[1] // 2] = 1.0
        else:
            delta.flat[delta.size // 2] = 1.0
        return delta
    return clamped / total


def cg_solve(apply_a, b, k_init, iters, callback=None):
    """Conjugate gradients on A k = b

    Stops after `iters` iterations or once the residual norm drops below 1e-9.

    Args:
        apply_a (callable): Symmetric positive semi-definite operator on vectors
        b (np.ndarray): Right-hand side
        k_init (np.ndarray): Starting point
        iters (int): Maximum iterations
        callback (callable, optional): Called with the iterate after every iteration

    Returns:
        np.ndarray: Final iterate

    Raises:
        OperatorNotPSDError: If a search direction has d^T A d <= 0
        NumericDivergenceError: If the curvature is not finite
    """
    k = np.array(k_init, dtype=np.float64, copy=True)
    r = np.asarray(b, dtype=np.float64) - apply_a(k)
    d = r.copy()
    rs = float(r @ r)
    for j in range(iters):
        if np.sqrt(rs) < CG_TOLERANCE:
            break
        ad = apply_a(d)
        curvature = float(d @ ad)
        if not np.isfinite(curvature):
            raise NumericDivergenceError(f"CG iteration {j + 1}: non-finite curvature")
        if curvature <= 0:
            raise OperatorNotPSDError(
                f"CG iteration {j + 1}: d^T A d = {curvature:.3e} is not positive"
            )
        step = rs / curvature
        k += step * d
        r -= step * ad
        rs_new = float(r @ r)
        d = r + (rs_new / rs) * d
        rs = rs_new
        if callback is not None:
            callback(k)
    return k


class _ValidOperator:
    """X_c: kernel -> valid convolution of every latent channel, with its adjoint"""

    def __init__(self, latent, side):
        height, width = latent.shape[1:]
        if side > height or side > width:
            raise DimensionError(
                f"kernel side {side} does not fit latent image {(height, width)}"
            )
        self.side = side
        self.latent = latent
        self.flipped = latent[:, ::-1, ::-1]

    def forward(self, k):
        grid = k.reshape(self.side, self.side)
        return np.stack([fftconvolve(x, grid, mode='valid') for x in self.latent])

    def adjoint(self, residual):
        total = np.zeros((self.side, self.side))
        for xf, r in zip(self.flipped, residual):
            total += fftconvolve(xf, r, mode='valid')
        return total.ravel()

    def normal(self, k):
        return self.adjoint(self.forward(k))


def _valid_target(observed, side):
    radius = side // 2
    height, width = observed.shape[1:]
    return observed[:, radius:height - radius, radius:width - radius]


def eval_objective_k(x, g, k, zeta):
    """zeta * sum_c ||X_c k - g_c||^2 + ||k||_1 over the valid region

    Args:
        x (GradientStack): Latent gradient stack
        g (GradientStack): Observed gradient stack
        k (BlurKernel): Kernel
        zeta (float): Data weight

    Returns:
        float: Objective value
    """
    operator = _ValidOperator(x.channels, k.side)
    residual = operator.forward(k.weights.ravel()) - _valid_target(g.channels, k.side)
    return float(zeta * np.sum(residual ** 2) + np.sum(np.abs(k.weights)))


def irls_solve(x, g, k0, config, state_callback=None):
    """Estimate the kernel by iteratively reweighted least squares

    Each of config.irls_outer rounds sets w_i = 1 / (zeta * max(k_i, floor)),
    runs config.cg_inner CG iterations on (sum_c X_c^T X_c + diag(w)) k = sum_c X_c^T g_c
    and projects the result onto the simplex.

    Args:
        x (GradientStack): Latent gradient stack
        g (GradientStack): Observed gradient stack with the same dimensions
        k0 (BlurKernel): Starting kernel
        config (SolverConfig): Solver constants
        state_callback (callable, optional): Receives the IrlsState after every round

    Returns:
        BlurKernel: Feasible kernel of k0's side

    Raises:
        DimensionError: If x and g differ in shape or the kernel does not fit
        DegenerateInputError: If the latent stack is all zero
    """
    if x.channels.shape != g.channels.shape:
        raise DimensionError(
            f"latent {x.channels.shape} and observed {g.channels.shape} stacks differ"
        )
    if not np.any(x.channels):
        raise DegenerateInputError("latent stack is all zero; kernel normal equations are singular")

    side = k0.side
    operator = _ValidOperator(x.channels, side)
    rhs = operator.adjoint(_valid_target(g.channels, side))
    state = IrlsState(kernel=k0.weights.ravel().copy(), weights=np.empty(side * side))

    def count(_):
        state.cg_iterations += 1

    for i in range(config.irls_outer):
        state.weights = 1.0 / (config.zeta * np.maximum(state.kernel, config.kernel_floor))
        weights = state.weights

        def apply_a(v):
            return operator.normal(v) + weights * v

        solved = cg_solve(apply_a, rhs, state.kernel, config.cg_inner, callback=count)
        if not np.all(np.isfinite(solved)):
            raise NumericDivergenceError(f"IRLS round {i + 1}: non-finite kernel")
        state.kernel = project_simplex(solved)
        state.outer = i + 1
        if state_callback is not None:
            state_callback(state)

    logger.debug(
        f"IRLS finished: side={side}, rounds={state.outer}, cg_iterations={state.cg_iterations}"
    )
    return BlurKernel(state.kernel.reshape(side, side))
