"""Spectral Kronecker-sum solvers for the evolutionary space-fractional
complex Ginzburg-Landau equation.

The library semidiscretizes the equation with centered fractional finite
differences, exploits the Kronecker-sum structure of the stiff operator to
apply matrix functions exactly through per-direction diagonalizations and
Tucker operators, and marches in time with linearly-implicit, splitting and
exponential integrators.  Iterative vector-oriented engines (FFT matvecs,
tau-preconditioned Krylov solvers) are included as terms of comparison.
"""

from .fracfd import (
    BoundaryVanishingPoly,
    FracOperator,
    SpectralFactor,
    build_operator,
    eigendecompose,
    riesz_coeffs_order2,
    riesz_coeffs_order4,
    riesz_exact_poly,
)
from .integrators import (
    BlowUpError,
    IncompatibleSchemeError,
    RunConfig,
    RunResult,
    fit_order,
    krogstad_run,
    lbdf2_run,
    reference_solution,
    run,
    strang_run,
    time_loop,
)
from .kronspec import KronSumOperator, SpectralCache, apply_K, phi_scalar
from .problem import (
    FcgleParams,
    GridProblem,
    SourceSpec,
    discrete_l2,
    discrete_l2_error,
    exact_flow,
    exact_solution,
    example1_setup,
    example2_setup,
    manufactured_source,
    nonlinear_g,
    sech,
)
from .tensorops import (
    hadamard,
    linear_combine,
    mu_mode_product,
    multi_index,
    pointwise_map,
    read_tensor,
    tucker,
    unvec,
    vec,
    vec_index,
    write_tensor,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
