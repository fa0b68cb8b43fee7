"""Sign-pattern recovery of sparse signals by thresholded basis pursuit.

Submodules
----------
ensembles
    Seeded sensing matrices, sparse signals and noise models.
l1_solver
    Dense revised-simplex basis pursuit with optimality certificates.
recovery
    TBP, TBP+OLS and the LASSO, max-correlation and exhaustive baselines.
analysis
    Isometry constants, theory constants and structural checks.
harness
    Monte-Carlo sweeps with CSV output and plots.
"""
from .analysis import (
    compute_cs,
    compute_epsilon0,
    empirical_gamma0,
    min_norm_noise,
    null_space_basis,
    rip_exact,
    rip_monte_carlo,
)
from .ensembles import (
    InputDeterministic,
    InputGaussian,
    OutputGaussian,
    RngStream,
    SensingMatrix,
    SparseSignal,
    gen_matrix,
    gen_measurement,
    gen_signal,
)
from .l1_solver import LpSolution, LpStatus, ToleranceSet, basis_pursuit, least_squares
from .recovery import LassoConfig, RecoveryReport, lasso, max_correlation, ml_oracle, tbp, tbp_ols

__version__ = "0.1.0"
