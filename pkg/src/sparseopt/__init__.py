"""sparseopt: solvers and certificates for sparsity-penalized estimation.

The functional core lives in the submodules (penalties, losses, duality,
solvers, homotopy, greedy, bench); scikit-learn style estimators wrapping
the solvers are in :mod:`sparseopt.estimators`.
"""

from .duality import GapCertificate, duality_gap, relative_gap
from .exceptions import (
    DimensionMismatch,
    InvalidGroupStructure,
    InvalidLabels,
    NonPositiveParameter,
    OutOfRange,
    SingularGram,
    SparseOptError,
    TieDetected,
    UnknownSolver,
    UnsupportedForConstraint,
    UnsupportedLoss,
    UnsupportedPenalty,
    ValidationError,
)
from .greedy import (
    ConcavePenalty,
    GreedyResult,
    LogEps,
    LqEps,
    iht,
    matching_pursuit,
    omp,
    reweighted_l1,
)
from .groups import Group, GroupStructure, PARTITION, TREE, singleton_structure
from .homotopy import (
    PathSegment,
    RegularizationPath,
    check_kkt,
    lasso_path,
    path_solution_at,
    solve_homotopy,
)
from .losses import (
    LossEval,
    conjugate_psi,
    dual_point,
    lipschitz_bound,
    loss_value_grad,
)
from .penalties import (
    ElasticNet,
    GroupL1L2,
    GroupL1Linf,
    HierL1L2,
    HierL1Linf,
    L1,
    L1Ball,
    dual_norm_value,
    norm_value,
    project_group_l2_ball,
    project_l1_ball,
    prox,
    soft_threshold,
)
from .problem import (
    LOGISTIC,
    SQUARE,
    Problem,
    SolverTrace,
    TraceRecord,
    objective,
    validate,
)
from .solvers import (
    SOLVERS,
    ArmijoParams,
    EpsilonSchedule,
    SolverConfig,
    get_solver,
    solve_bcd,
    solve_cd,
    solve_cd_smooth,
    solve_fista,
    solve_ista,
    solve_reweighted_l2,
    solve_subgradient,
    solve_working_set,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
