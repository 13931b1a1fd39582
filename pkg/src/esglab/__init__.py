"""Economic scenario generator laboratory.

Generate multi-asset scenario sets (Gaussian, GBM, bootstrap, PCA, scenario
trees), solve a grid-enumerated minimum-volatility allocation on each, and
measure how stable and unbiased the resulting decisions are.
"""

__version__ = "0.1.0"

from .calibration import PriceHistory, calibrate, load_history, to_returns
from .estimators import (
    BootstrapGenerator,
    GaussianReturnGenerator,
    GBMGenerator,
    GridAllocationOptimizer,
    MomentMatcher,
    PCAReturnGenerator,
)
from .exceptions import ConfigError, DataFormatError, ESGLabError, InfeasibleError, ValidationError
from .generation import (
    NoiseBlock,
    PcaBasis,
    bootstrap,
    correlate,
    draw_noise,
    gbm_paths,
    gbm_scenarios,
    generate_linear,
    moment_match_affine,
    pca_fit,
    pca_generate,
    pca_reconstruct,
)
from .optimization import (
    AllocationGrid,
    OptimizationOutcome,
    enumerate_grid,
    evaluate_objective,
    exact_moment_argmin,
    portfolio_returns,
    quadratic_oracle,
    solve_grid,
)
from .stability import (
    ExperimentConfig,
    bias_estimate,
    external_evaluate,
    internal_stats,
    quadratic_stability_demo,
    run_replications,
)
from .tree import build_tree, count_nodes, tree_to_paths
from .types import (
    Allocation,
    AssetModel,
    BranchingVector,
    ObjectiveSpec,
    ScenarioSet,
    ScenarioTree,
    StabilityReport,
    SummaryStats,
)
