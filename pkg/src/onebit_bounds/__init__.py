"""Training-based achievable-rate lower bounds for one-bit transceivers.

Large multi-antenna systems with sign-quantized transmit or receive chains
distort channel estimation, so how long to train is a real design question.
This package computes the rate lower bound of a train-then-transmit scheme,
optimizes the training length, and cross-checks the large-system closed
forms against exact enumeration of small systems.
"""
from .numerics import (
    LN2,
    NonFiniteIntegrandError,
    QuadratureRule,
    binary_entropy,
    exp_ratio,
    expect_normal,
    gauss_hermite,
    log_q_function,
    q_function,
)
from .quantizer import IDENTITY, SIGN_OUTPUTS, SIGN_QUANTIZER, Nonlinearity
from .quantizer import apply as apply_nonlinearity
from .quantizer import likelihood, log_likelihood
from .replica import (
    ChannelOverlap,
    DataOverlap,
    SolverError,
    SystemParams,
    csir_rate,
    effective_snr,
    f1_value,
    f2_linear,
    f2_onebit,
    perfect_csi_overlap,
    reff_linear,
    reff_onebit,
    single_pair_capacity,
    solve_qh,
    solve_qx_linear,
    solve_qx_onebit,
)
from .optimizer import (
    BoundResult,
    RateCurve,
    bussgang_bound,
    compare_sweep,
    low_snr_asymptotics,
    optimize_training,
    replica_bound,
    small_alpha_rate,
    sweep_onebit_alpha,
    training_grid,
)
from .exact import (
    ChannelIntegration,
    EnumerationBudgetError,
    SmallSystem,
    TrainingOutcome,
    training_outcomes,
    c_bound_exact,
    d1,
    d2,
    d3,
    d4,
    mi_direct,
    reff_exact,
)

__version__ = "0.1.0"
