"""Born series for the 1D Lippmann-Schwinger equation: solvers, convergence tests and a spectral preconditioner."""

from .errors import (
    ConvergenceError,
    LSBornError,
    MediumError,
    NumericalError,
    SingularMatrixError,
    ValidationError,
)
from .problem import (
    ConstantMedium,
    Grid,
    PiecewiseConstantMedium,
    TabulatedMedium,
    WaveProblem,
    make_grid,
    read_medium_csv,
    sample_medium,
)
from .lippmann import (
    LSOperator,
    assemble,
    direct_solve,
    fd_oracle,
    hilbert_schmidt_bound,
    incident_rhs,
    operator_norm,
    spectral_radius,
)
from .born import ConvergenceTrace, RateEstimate, iterate, rate_estimate, suzuki_verdict, tail_bound_check
from .spectral import eig_transcendental, locus_distance, numeric_spectrum, sample_locus, solve_T
from .precond import (
    PreconditionerParams,
    gamma_analytic,
    gamma_from_spectrum,
    gamma_numeric,
    preconditioned_solve,
    transform_spectrum,
)

__version__ = "0.1.0"
