"""Desk-scale numerics for Levy-driven SDEs with Holder drifts.

Samplers for stable-type noise, semigroup gradient estimators, a spectral
mild solver for the backward nonlocal equation, the drift-removing
diffeomorphism and its transformed jump SDE, Monte Carlo derivative
estimation, and a verification harness that checks the quantitative scaling
laws the theory predicts.
"""

from .errors import (
    AdmissibilityError,
    ConfigError,
    DivergentMoment,
    EnvelopeFailure,
    InadmissibleModel,
    InsufficientDecades,
    InverseNoConvergence,
    LambdaSearchFailure,
    LevyflowError,
    NoConvergence,
    QuadratureFailure,
    R0SearchFailure,
    StateEscape,
    UnsupportedModel,
)
from .models import (
    CylindricalStable,
    HypothesisParams,
    IsotropicStable,
    MeasureDecomposition,
    ModulatedKappa,
    RelativisticStable,
    RelativisticSubordinator,
    StableSubordinator,
    StableTypeDensity,
    SubordinateBM,
    SumOfPowersKappa,
    TruncatedStable,
    admissible_beta,
    decompose,
    hypothesis_params,
    small_jump_moment,
    symbol,
)
from .rng import RngStream
from .samplers import (
    PathGrid,
    sample_cylindrical_path,
    sample_path,
    sample_stable_subordinator,
    sample_stable_type_path,
    sample_subordinate_bm_path,
    split_step_increments,
)
from .semigroup import (
    CappedPower,
    Constant,
    Sinusoid,
    SmoothedIndicator,
    apply_semigroup,
    char_function_check,
    fit_gradient_scaling,
    gradient_semigroup,
    negative_moment,
)
from .holder import (
    commutator,
    holder_seminorm_estimate,
    poisson_integral,
    poisson_theta_derivative,
)
from .pde import (
    CappedPowerDrift,
    ClippedLinearDrift,
    MildSolution,
    SinusoidField,
    SolverGrid,
    ZeroDrift,
    choose_lambda,
    classical_defect_check,
    mollify_drift,
    load_solution,
    save_solution,
    solve_mild,
    weak_residual,
)
from .zvonkin import (
    FlowSample,
    ZvonkinTransform,
    build_transform,
    direct_euler_flow,
    dump_flow_sample,
    select_r0,
    phi,
    phi_inverse,
    solve_flow,
    solve_transformed_sde,
    transformed_drift_a,
    transformed_jump_g,
)
from .bismut import bismut_fd_compare, bismut_gradient, decay_check, fd_gradient
from .config import ExperimentConfig, config_hash, load_config, parse_config, serialize_config
from .experiments import ResultRecord, run_experiment, run_uniqueness_suite
from .report import csv_body_digest, emit_report, write_record

__version__ = "0.1.0"
