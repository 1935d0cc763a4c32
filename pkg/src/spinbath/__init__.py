"""Central-spin / spin-bath simulator: exact unitary evolution, the branch
diagonal approximation, and stationary-phase branch selection."""

__version__ = "0.1.0"

from .model import (
    DistSpec,
    ModelParams,
    apply_h,
    build_params,
    dense_h,
    h_i_diag,
    h_scale,
    sample_params,
)
from .evolver import (
    NormDriftError,
    TimeGrid,
    Trajectory,
    decoherence_factor,
    expectation_system_op,
    propagate,
    reduced_density,
)
from .branches import (
    Branch,
    BranchEnsemble,
    PhaseRecordSet,
    ScalingSummary,
    apply_self_evolution,
    assemble_state,
    branch_state,
    ensemble_state0,
    evolve_diagonal,
    lambda_nu,
    make_ensemble,
    offdiag_elements,
    scaling_stats,
    system_amps,
)
from .stationary import (
    Landscape,
    SelectionResult,
    TwoBranchResult,
    dephasing_closed_form,
    landscape_at,
    landscape_to_csv,
    notice_check,
    reconstruct_two_branch,
    select_extremal,
    survival_weights,
)
from .harness import (
    ConfigError,
    ResourceGuardError,
    RunConfig,
    fidelity,
    load_config,
    run,
)
