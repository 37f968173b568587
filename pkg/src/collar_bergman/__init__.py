"""Bergman kernels and pluri-canonical embeddings of hyperbolic collars.

Numerical models of the punctured disk and the thin collar, computed in
log-domain arithmetic so that quantities like exp(pi/eps) stay representable.
"""

from .xreal import XReal, log_factorial
from .quadrature import QuadSpec, QuadratureError, integrate_log, integrate_log_halfline
from .laplace import (
    LaplaceResult,
    concave_tail_bound,
    laplace_estimate,
    maximize_concave,
    window_mass_fraction,
)
from .punctured import PuncturedParams, rho0_density, term_weights_punctured, y_norm_exact, y_norm_quad
from .collar import (
    CollarParams,
    collar_density,
    collar_norm,
    collar_norm_laplace,
    cusp_comparison,
    cut_tail_check,
    f_of_t,
    t_of_u,
    u_of_t,
)
from .embedding import (
    ProfileRow,
    SectionFamily,
    bubble_profile,
    circle_image_length,
    fs_distance_to_line,
    reduced_map,
    weights_at,
)

__version__ = "0.1.0"
