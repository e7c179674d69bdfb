import os
import math
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Application Configuration
DEBUG_MODE = os.getenv('DEBUG_MODE', 'False').lower() == 'true'
LOG_LEVEL = os.getenv('LOG_LEVEL', 'DEBUG' if DEBUG_MODE else 'INFO')

# Parallelism cap for the bench worker pool
THREADS = max(1, int(os.getenv('OMNIDEBLUR_THREADS', str(os.cpu_count() or 1))))

# Reproducibility
DEFAULT_SEED = int(os.getenv('OMNIDEBLUR_SEED', '0'))

# Latent image (EM_x) solver
ALPHA = float(os.getenv('OMNIDEBLUR_ALPHA', '100'))
STEP_T = float(os.getenv('OMNIDEBLUR_STEP_T', '0.001'))
FISTA_ITERS = int(os.getenv('OMNIDEBLUR_FISTA_ITERS', '2'))

# Kernel (EM_k) solver
ZETA = float(os.getenv('OMNIDEBLUR_ZETA', '1000'))
IRLS_OUTER = int(os.getenv('OMNIDEBLUR_IRLS_OUTER', '3'))
CG_INNER = int(os.getenv('OMNIDEBLUR_CG_INNER', '5'))
KERNEL_WEIGHT_FLOOR = 1e-6

# Alternations per pyramid level
EM_ITERS = int(os.getenv('OMNIDEBLUR_EM_ITERS', '5'))

# Pyramid
SCALE_RATIO = float(os.getenv('OMNIDEBLUR_SCALE_RATIO', str(math.sqrt(2.0))))
MIN_KERNEL = int(os.getenv('OMNIDEBLUR_MIN_KERNEL', '3'))

# Gabor filter bank
DEFAULT_THETAS = [
    float(t) for t in os.getenv('OMNIDEBLUR_THETAS', '0,45,90,135').split(',')
]
GABOR_LAMBDA = float(os.getenv('OMNIDEBLUR_GABOR_LAMBDA', '0.5'))
GABOR_PSI = float(os.getenv('OMNIDEBLUR_GABOR_PSI', '90'))
GABOR_SIGMA = float(os.getenv('OMNIDEBLUR_GABOR_SIGMA', '4'))
GABOR_GAMMA = float(os.getenv('OMNIDEBLUR_GABOR_GAMMA', '1'))
GABOR_LAMBDA_UNIT = os.getenv('OMNIDEBLUR_GABOR_LAMBDA_UNIT', 'sigma')

# Supported Gabor wavelength readings
SUPPORTED_LAMBDA_UNITS = ['sigma', 'pixels']

# Non-blind deconvolution
NONBLIND_METHOD = os.getenv('OMNIDEBLUR_NONBLIND', 'sparse')
NONBLIND_REG = float(os.getenv('OMNIDEBLUR_NB_REG', '2e-3'))
NONBLIND_ITERS = int(os.getenv('OMNIDEBLUR_NB_ITERS', '8'))
EDGE_TAPER = 8

# Supported non-blind methods
SUPPORTED_NONBLIND = ['tikhonov', 'sparse']

# Quality metrics
DEFOCUS_SCALE = float(os.getenv('OMNIDEBLUR_DEFOCUS_SCALE', '255'))

# Bench filter-count variants
BENCH_VARIANTS = [
    int(n) for n in os.getenv('OMNIDEBLUR_BENCH_VARIANTS', '3,4,5,6,8').split(',')
]
