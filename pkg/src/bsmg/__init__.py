"""Symbol-based multigrid for block Toeplitz and block circulant systems."""
from .analysis import SweepResult, TGMSymbol, approximation_constant, spectral_radius, sweep
from .errors import *  # noqa: F401,F403
from .krylov import PCGConfig, pcg
from .multigrid import (
    MultigridHierarchy,
    SolveReport,
    build_aggregation_hierarchy,
    build_block_hierarchy,
    solve,
    tgm_solve,
    vcycle,
)
from .operators import BlockCirculantOperator, BlockToeplitzOperator, galerkin_product
from .smoothers import BlockJacobi, ScalarJacobi, SmootherSpec, admissible_range
from .symbols import (
    ScalarTrigPolynomial,
    SingularityInfo,
    TrigMatrixPolynomial,
    builtin_symbol,
    coarse_symbol,
    find_singularity,
    jacobi_bound,
    load_symbol,
)
from .transfer import Aggregation, BlockCut, ScalarCut, check_projector_conditions

__version__ = "0.1.0"
