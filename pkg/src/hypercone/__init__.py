"""Sharp L^p -> L^q bounds for heat flows on Euclidean cones and related spaces."""
import os as _os

# HYPERCONE_THREADS caps BLAS/OpenMP parallelism; it must be applied before numpy loads
_threads = _os.environ.get("HYPERCONE_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .constants import (INF, ExponentPair, SharpBoundInputs, extremizer_alpha,  # noqa: E402
                        extremizer_beta, gaussian_time_shift, h_ratio, m_constant,
                        optimal_a, sharp_bound)
from .spaces import (ConePoint, ConeSpace, RadialGrid, SurfaceSpace,  # noqa: E402
                     make_grid)
from .kernels import (carslaw_kernel, euclidean_kernel, radial_kernel,  # noqa: E402
                      tip_kernel)
from .bessel import bessel_i  # noqa: E402
from .semigroup import (ConeModel, RadialFunction, SurfaceModel, apply_heat,  # noqa: E402
                        dirichlet_energy, entropy, lp_norm)
from .hyper import (NormEstimate, estimate_operator_norm, extremizer,  # noqa: E402
                    sharp_constant_cone)

__version__ = "0.1.0"

__all__ = [
    "INF", "ExponentPair", "SharpBoundInputs", "m_constant", "sharp_bound",
    "extremizer_alpha", "extremizer_beta", "gaussian_time_shift", "optimal_a", "h_ratio",
    "ConeSpace", "ConePoint", "SurfaceSpace", "RadialGrid", "make_grid",
    "euclidean_kernel", "tip_kernel", "radial_kernel", "carslaw_kernel", "bessel_i",
    "ConeModel", "SurfaceModel", "RadialFunction", "apply_heat", "lp_norm", "entropy",
    "dirichlet_energy", "NormEstimate", "estimate_operator_norm", "extremizer",
    "sharp_constant_cone",
]
