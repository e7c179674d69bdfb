import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

# Import configuration
import config
from core.errors import ConfigurationError, DimensionError


def _frozen_array(values, ndim):
    """Copy values into a read-only float64 array of the given rank

    Args:
        values: Array-like input
        ndim (int): Required number of dimensions

    Returns:
        np.ndarray: Read-only copy
    """
    array = np.array(values, dtype=np.float64, copy=True)
    if array.ndim != ndim:
        raise DimensionError(f"expected a {ndim}-D array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class BoundaryPolicy(Enum):
    """How convolutions extend an image past its border

    Attributes:
        REPLICATE: repeat the outermost row/column (pipeline default)
        REFLECT: mirror about the border, edge sample repeated
        ZERO: pad with zeros (exact adjoint pairing)
    """

    REPLICATE = 'replicate-edge'
    REFLECT = 'reflect'
    ZERO = 'zero-pad'

    @property
    def ndimage_mode(self):
        return {
            BoundaryPolicy.REPLICATE: 'nearest',
            BoundaryPolicy.REFLECT: 'reflect',
            BoundaryPolicy.ZERO: 'constant',
        }[self]


@dataclass(frozen=True)
class RasterImage:
    """Single-channel 2-D grid of real intensities

    Houses the observed image y, the latent image x and single gradient
    channels. Values are nominally in [0, 1]; gradient channels may be signed.

    Attributes:
        data (np.ndarray): Read-only (height, width) float64 array
    """

    data: np.ndarray

    def __post_init__(self):
        array = _frozen_array(self.data, 2)
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise DimensionError(f"image must be at least 1x1, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise DimensionError("image contains non-finite values")
        object.__setattr__(self, 'data', array)

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def shape(self):
        return self.data.shape

    def clamped(self, low=0.0, high=1.0):
        """Return a copy with values clipped to [low, high]"""
        return RasterImage(np.clip(self.data, low, high))


@dataclass(frozen=True)
class BlurKernel:
    """Point spread function on an odd-sided square grid

    Weights are stored in true-convolution orientation. Solver intermediates
    may hold negative weights; `is_feasible` checks the simplex constraint.

    Attributes:
        weights (np.ndarray): Read-only (side, side) float64 array
    """

    weights: np.ndarray

    def __post_init__(self):
        array = _frozen_array(self.weights, 2)
        side = array.shape[0]
        if array.shape[1] != side or side < 1 or side % 2 == 0:
            raise DimensionError(f"kernel must be odd and square, got {array.shape}")
        if not np.all(np.isfinite(array)):
            raise DimensionError("kernel contains non-finite values")
        object.__setattr__(self, 'weights', array)

    @property
    def side(self):
        return self.weights.shape[0]

    @classmethod
    def delta(cls, side):
        """Create the centred delta kernel of the given odd side

        Args:
            side (int): Odd kernel side

        Returns:
            BlurKernel: Kernel with weight 1 at the centre
        """
        weights = np.zeros((side, side))
        weights[side // 2, side // 2] = 1.0
        return cls(weights)

    def is_feasible(self, tol=1e-9):
        """Whether the weights are nonnegative and sum to one within tol"""
        return bool(self.weights.min() >= 0.0 and abs(self.weights.sum() - 1.0) <= tol)

    def to_dict(self):
        """Convert the kernel to a JSON-friendly dictionary

        Returns:
            dict: side and row-major weights
        """
        return {"side": self.side, "weights": self.weights.tolist()}


@dataclass(frozen=True)
class GradientStack:
    """Ordered directional gradient channels g = [g_theta1 ... g_thetan]

    Attributes:
        channels (np.ndarray): Read-only (n, height, width) array
        thetas (tuple): Orientation of each channel in degrees, strictly increasing in [0, 180)
    """

    channels: np.ndarray
    thetas: Tuple[float, ...]

    def __post_init__(self):
        array = _frozen_array(self.channels, 3)
        thetas = tuple(float(t) for t in self.thetas)
        if array.shape[0] == 0:
            raise DimensionError("gradient stack needs at least one channel")
        if array.shape[0] != len(thetas):
            raise DimensionError(
                f"{array.shape[0]} channels but {len(thetas)} orientations"
            )
        if any(t < 0.0 or t >= 180.0 for t in thetas):
            raise ConfigurationError(f"orientations must lie in [0, 180): {thetas}")
        if any(b <= a for a, b in zip(thetas, thetas[1:])):
            raise ConfigurationError(f"orientations must be strictly increasing: {thetas}")
        if not np.all(np.isfinite(array)):
            raise DimensionError("gradient stack contains non-finite values")
        object.__setattr__(self, 'channels', array)
        object.__setattr__(self, 'thetas', thetas)

    @property
    def count(self):
        return self.channels.shape[0]

    @property
    def image_shape(self):
        return self.channels.shape[1:]

    def norm(self):
        """Joint Euclidean norm over all channel values"""
        return float(np.linalg.norm(self.channels.ravel()))

    def with_channels(self, channels):
        """Return a stack with the same orientations and new channel data"""
        return GradientStack(channels, self.thetas)


@dataclass(frozen=True)
class GaborParams:
    """Parameters of one Gabor filter (Gaussian envelope times cosine carrier)

    Attributes:
        wavelength (float): lambda; carrier period in pixels, or cycles per sigma
            when wavelength_unit is 'sigma'
        theta (float): Orientation in degrees
        psi (float): Phase offset in degrees
        sigma (float): Gaussian standard deviation in pixels
        gamma (float): Spatial aspect ratio
        support (int): Odd window side; defaults to 4*sigma rounded up to odd
        wavelength_unit (str): 'sigma' or 'pixels'
    """

    wavelength: float = 0.5
    theta: float = 0.0
    psi: float = 90.0
    sigma: float = 4.0
    gamma: float = 1.0
    support: Optional[int] = None
    wavelength_unit: str = 'sigma'

    def __post_init__(self):
        if self.wavelength <= 0 or self.sigma <= 0 or self.gamma <= 0:
            raise ConfigurationError(
                "Gabor wavelength, sigma and gamma must be positive"
            )
        if self.wavelength_unit not in config.SUPPORTED_LAMBDA_UNITS:
            raise ConfigurationError(f"unknown wavelength unit: {self.wavelength_unit}")
        if self.support is None:
            object.__setattr__(self, 'support', int(math.ceil(4.0 * self.sigma)) | 1)
        if self.support < 3 or self.support % 2 == 0:
            raise ConfigurationError(f"Gabor support must be odd and >= 3, got {self.support}")

    @property
    def period_px(self):
        """Carrier period in pixels"""
        if self.wavelength_unit == 'pixels':
            return self.wavelength
        return self.sigma / self.wavelength

    @classmethod
    def from_config(cls, **overrides):
        """Build parameters from config.py defaults, applying overrides"""
        values = {
            "wavelength": config.GABOR_LAMBDA,
            "psi": config.GABOR_PSI,
            "sigma": config.GABOR_SIGMA,
            "gamma": config.GABOR_GAMMA,
            "wavelength_unit": config.GABOR_LAMBDA_UNIT,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class SolverConfig:
    """Constants of the blind kernel estimation

    Attributes:
        alpha (float): Data weight of the latent problem
        zeta (float): Data weight of the kernel problem (alpha / beta)
        step_t (float): FISTA step parameter t
        fista_iters (int): FISTA iterations per EM_x call (M)
        irls_outer (int): IRLS reweighting rounds (N1)
        cg_inner (int): CG iterations per reweighting round (N2)
        outer_em_iters (int): EM_x/EM_k alternations per pyramid level
        kernel_floor (float): Floor on kernel weights when forming IRLS weights
    """

    alpha: float = 100.0
    zeta: float = 1000.0
    step_t: float = 0.001
    fista_iters: int = 2
    irls_outer: int = 3
    cg_inner: int = 5
    outer_em_iters: int = 5
    kernel_floor: float = 1e-6

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not value > 0:
                raise ConfigurationError(f"{name} must be positive, got {value}")

    @classmethod
    def from_config(cls, **overrides):
        """Build a solver configuration from config.py defaults, applying overrides"""
        values = {
            "alpha": config.ALPHA,
            "zeta": config.ZETA,
            "step_t": config.STEP_T,
            "fista_iters": config.FISTA_ITERS,
            "irls_outer": config.IRLS_OUTER,
            "cg_inner": config.CG_INNER,
            "outer_em_iters": config.EM_ITERS,
            "kernel_floor": config.KERNEL_WEIGHT_FLOOR,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class NonblindConfig:
    """Settings of the final non-blind deconvolution

    Attributes:
        method (str): 'tikhonov' (frequency-domain, exact) or 'sparse' (l1 gradients, half-quadratic)
        reg_weight (float): Regularization weight
        inner_iters (int): Half-quadratic continuation steps (sparse method only)
    """

    method: str = 'sparse'
    reg_weight: float = 2e-3
    inner_iters: int = 8

    def __post_init__(self):
        if self.method not in config.SUPPORTED_NONBLIND:
            raise ConfigurationError(f"unknown non-blind method: {self.method}")
        if not self.reg_weight > 0:
            raise ConfigurationError(f"reg_weight must be positive, got {self.reg_weight}")
        if self.inner_iters < 1:
            raise ConfigurationError(f"inner_iters must be >= 1, got {self.inner_iters}")

    @classmethod
    def from_config(cls, **overrides):
        values = {
            "method": config.NONBLIND_METHOD,
            "reg_weight": config.NONBLIND_REG,
            "inner_iters": config.NONBLIND_ITERS,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class PyramidLevel:
    """One level of the coarse-to-fine schedule

    Attributes:
        index (int): Level index; m is the coarsest, 1 the finest
        kernel_side (int): Odd kernel side at this level
        image_scale (float): Image scale relative to the input, in (0, 1]
    """

    index: int
    kernel_side: int
    image_scale: float

    def image_shape(self, full_shape):
        """Image dimensions at this level for an input of full_shape"""
        height, width = full_shape
        return (
            max(1, int(round(height * self.image_scale))),
            max(1, int(round(width * self.image_scale))),
        )


@dataclass(frozen=True)
class PyramidSchedule:
    """Kernel sizes and image scales from the coarsest level m to level 1

    Attributes:
        levels (tuple): PyramidLevel entries ordered coarsest first
        scale_ratio (float): s, the ratio between consecutive levels
        max_kernel (int): h, the kernel side at the finest level
    """

    levels: Tuple[PyramidLevel, ...]
    scale_ratio: float
    max_kernel: int

    @property
    def m(self):
        return len(self.levels)

    def to_dict(self):
        return {
            "scale_ratio": self.scale_ratio,
            "max_kernel": self.max_kernel,
            "levels": [asdict(level) for level in self.levels],
        }


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise N of the blur model

    Attributes:
        kind (str): Noise distribution; only 'gaussian'
        sigma (float): Standard deviation in [0, 1] intensity units
        seed (int): Generator seed
    """

    kind: str = 'gaussian'
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind != 'gaussian':
            raise ConfigurationError(f"unsupported noise kind: {self.kind}")
        if self.sigma < 0:
            raise ConfigurationError(f"noise sigma must be >= 0, got {self.sigma}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class HaarSubbands:
    """Single-level orthonormal Haar decomposition

    Attributes:
        ll (np.ndarray): Approximation
        lh (np.ndarray): Horizontal-difference detail
        hl (np.ndarray): Vertical-difference detail
        hh (np.ndarray): Diagonal detail
    """

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray


@dataclass
class QualityReport:
    """Full-reference and no-reference quality figures of one image

    Attributes:
        defocus_score (float): Q_B = exp(-sigma_d), higher is blurrier
        sigma_d (float): Spread of the diagonal Haar coefficients
        mse (float, optional): Mean square error against a reference
        psnr_db (float, optional): PSNR in dB; math.inf when mse is 0
    """

    defocus_score: float
    sigma_d: float
    mse: Optional[float] = None
    psnr_db: Optional[float] = None

    def to_dict(self):
        """Convert the report to a JSON-friendly dictionary ("inf" sentinel for infinite PSNR)"""
        psnr = self.psnr_db
        if psnr is not None and math.isinf(psnr):
            psnr = "inf"
        return {
            "mse": self.mse,
            "psnr_db": psnr,
            "defocus_score": self.defocus_score,
            "sigma_d": self.sigma_d,
        }


@dataclass
class LevelTrace:
    """What happened at one pyramid level

    Attributes:
        level (int): Level index (m coarsest)
        kernel_side (int): Kernel side at this level
        image_shape (tuple): Level image dimensions
        channels (int): Number of gradient channels
        ratio_latent (float, optional): l1/l2 of the estimated latent stack
        ratio_observed (float, optional): l1/l2 of the observed stack
        kernel (BlurKernel): Kernel at the end of the level
    """

    level: int
    kernel_side: int
    image_shape: Tuple[int, int]
    channels: int
    ratio_latent: Optional[float]
    ratio_observed: Optional[float]
    kernel: BlurKernel

    def to_dict(self):
        return {
            "level": self.level,
            "kernel_side": self.kernel_side,
            "image_shape": list(self.image_shape),
            "channels": self.channels,
            "ratio_latent": self.ratio_latent,
            "ratio_observed": self.ratio_observed,
            "kernel": self.kernel.weights.tolist(),
        }


@dataclass
class DeblurRun:
    """Record of one blind deconvolution

    Attributes:
        config (SolverConfig): Solver constants used
        schedule (PyramidSchedule): Coarse-to-fine schedule
        thetas (list): Gabor orientations in degrees
        trace (list): LevelTrace per level, coarsest first
        final_kernel (BlurKernel, optional): Kernel at the finest level
        final_image (RasterImage, optional): Non-blind result, when produced
        level_seconds (list): Wall-clock per level (kept out of the trace file)
    """

    config: SolverConfig
    schedule: PyramidSchedule
    thetas: List[float]
    trace: List[LevelTrace] = field(default_factory=list)
    final_kernel: Optional[BlurKernel] = None
    final_image: Optional[RasterImage] = None
    level_seconds: List[float] = field(default_factory=list)

    def to_dict(self):
        """Convert the run to the trace JSON structure (deterministic content only)"""
        return {
            "config": self.config.to_dict(),
            "schedule": self.schedule.to_dict(),
            "thetas": list(self.thetas),
            "levels": [entry.to_dict() for entry in self.trace],
            "final_kernel": self.final_kernel.to_dict() if self.final_kernel else None,
        }


@dataclass
class RunManifest:
    """One manifest per CLI run

    Attributes:
        subcommand (str): CLI subcommand
        config (dict): Resolved parameters after defaults and overrides
        seed (int, optional): Master seed
        inputs (dict): Named input paths
        outputs (dict): Named output paths
        wall_clock (float): Total seconds
        timings (dict): Named partial timings
        artifact_hashes (dict): sha256 of every output file
    """

    subcommand: str
    config: Dict = field(default_factory=dict)
    seed: Optional[int] = None
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    wall_clock: float = 0.0
    timings: Dict = field(default_factory=dict)
    artifact_hashes: Dict[str, str] = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)
