"""dictinv: weighted-Lasso solution of linear ill-posed inverse problems.

The library inverts each element of an overcomplete dictionary through the
adjoint of the forward operator, estimates the expansion coefficients from
noisy data (white-noise, sampled, or latent-mixture observations), and
recovers the unknown function by a weighted Lasso whose per-coefficient
penalties are the inverse-image norms.  Included: compatibility diagnostics
for the dictionary, spectral-cutoff and Galerkin baselines, and a seeded
simulation harness with CSV reporting.
"""

from .grids import (
    DiscreteOperator,
    Grid,
    GridFunction,
    adjoint_apply,
    apply,
    identity_operator,
    inner_product,
    make_uniform_grid,
)
from .dictionary import (
    Dictionary,
    GramMatrix,
    build_dictionary,
    coherence_bound,
    gram,
    gram_closed_form,
    laguerre_function,
    laguerre_monomial,
)
from .forward import (
    LaplaceKernel,
    MixtureKernel,
    TestFunction,
    exponential_mixture_kernel,
    fredholm_operator,
    generate_observations,
    laplace_operator,
    mixture_operator,
    sample_mixture,
    test_function,
    white_noise_observation,
)
from .inversion import (
    InverseImages,
    WeightVector,
    invert_exact,
    invert_tikhonov,
    select_delta,
    weights,
)
from .estimation import (
    BetaEstimate,
    PenaltyConfig,
    beta_hat_mixture,
    beta_hat_observational,
    beta_hat_white_noise,
    theoretical_alpha,
)
from .lasso import (
    LassoPath,
    LassoSolution,
    WeightedLassoProblem,
    alpha_max,
    objective,
    path,
    select_alpha_cv,
    select_alpha_oracle,
    solve,
)
from .diagnostics import (
    CompatibilityReport,
    check_diag_dominance,
    check_incoherence,
    compatibility_bound,
    compute_aleph,
    diagnose,
    kappa2_estimate,
    max_offdiag,
    restricted_eigs,
    sample_size_thresholds,
    weight_balance,
)
from .baselines import (
    BaselineEstimate,
    laguerre_galerkin_estimator,
    oracle_tune,
    project_q_hat,
    svd_estimator,
)
from .harness import (
    ErrorReport,
    ExperimentConfig,
    build_workspace,
    emit_plot_data,
    parse_config,
    rms_error,
    run_cell,
    run_replicate,
    run_table,
    table1_configs,
)

__version__ = "0.1.0"
