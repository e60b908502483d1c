"""Split-penalty Bregman paths for sparse, graph-smooth, sign-constrained GLMs."""

from .glm_loss import (
    Dataset,
    GlmFamily,
    SplitLossParams,
    data_nll,
    gradients,
    logit_weights,
    spectral_norm_D,
    spectral_norm_X,
    split_loss,
)
from .grid_graph import (
    DifferenceOperator,
    VoxelGrid,
    assemble_difference_operator,
    build_grid_graph,
    read_mask,
    write_mask,
    write_operator_coo,
)
from .metrics import (
    accuracy,
    auc,
    estimation_errors,
    multiset_dice,
    sign_consistency,
    support_recovery_auc,
)
from .solver import (
    DivergenceError,
    PathPoint,
    RegularizationPath,
    SolverConfig,
    SolverState,
    StepSizeWarning,
    default_step_size,
    init_state,
    run_path,
    select_stopping_time,
    stability_bound,
    step,
)
from .sparsity_ops import (
    SupportSet,
    identify_procedural_bias,
    project_onto_support,
    shrink,
    shrink_nonneg,
    support,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "DifferenceOperator",
    "DivergenceError",
    "GlmFamily",
    "PathPoint",
    "RegularizationPath",
    "SolverConfig",
    "SolverState",
    "SplitLossParams",
    "StepSizeWarning",
    "SupportSet",
    "VoxelGrid",
    "accuracy",
    "assemble_difference_operator",
    "auc",
    "build_grid_graph",
    "data_nll",
    "default_step_size",
    "estimation_errors",
    "gradients",
    "identify_procedural_bias",
    "init_state",
    "logit_weights",
    "multiset_dice",
    "project_onto_support",
    "read_mask",
    "run_path",
    "select_stopping_time",
    "shrink",
    "shrink_nonneg",
    "sign_consistency",
    "spectral_norm_D",
    "spectral_norm_X",
    "split_loss",
    "stability_bound",
    "step",
    "support",
    "support_recovery_auc",
    "write_mask",
    "write_operator_coo",
    "__version__",
]
