"""Perturbation-based gradient estimation for discrete exponential families."""

from .bench import (
    BenchRecord,
    EstimatorSetup,
    bench_cosine,
    cosine_similarity,
    expected_imle_gradient_exact,
    run_toy_training,
    setup_from_name,
    sweep_lambda,
)
from .controller import AimleControllerState, compute_lambda, update_alpha, update_ema
from .errors import (
    DegenerateGradient,
    DimensionMismatch,
    EmptyBatch,
    GuardExceeded,
    InfeasibleState,
    InvalidStep,
    PamgradError,
    UnsupportedSpec,
)
from .estimators import (
    GradientEstimate,
    estimate_aimle,
    estimate_gumbel_softmax,
    estimate_imle,
    estimate_sfe,
    estimate_ste,
)
from .noise import (
    GumbelNoise,
    SumOfGammaNoise,
    perturb_and_map,
    sample_noise,
    substream,
)
from .optim import SGD, Adam, QuadraticLoss, optimizer_step, quad_loss
from .polytopes import (
    Categorical,
    GridPath,
    KSubset,
    SpanningTree,
    enumerate_states,
    exact_expected_loss,
    exact_gradient,
    log_partition,
    marginals,
    pmf,
    sample_exact,
    weight,
)
from .solvers import GridCosts, map_grid_path, map_solve, map_spanning_tree, map_topk

__version__ = "0.1.0"

__all__ = [
    "AimleControllerState", "Adam", "BenchRecord", "Categorical",
    "DegenerateGradient", "DimensionMismatch", "EmptyBatch", "EstimatorSetup",
    "GradientEstimate", "GridCosts", "GridPath", "GuardExceeded", "GumbelNoise",
    "InfeasibleState", "InvalidStep", "KSubset", "PamgradError", "QuadraticLoss",
    "SGD", "SpanningTree", "SumOfGammaNoise", "UnsupportedSpec", "bench_cosine",
    "compute_lambda", "cosine_similarity", "enumerate_states", "estimate_aimle",
    "estimate_gumbel_softmax", "estimate_imle", "estimate_sfe", "estimate_ste",
    "exact_expected_loss", "exact_gradient", "expected_imle_gradient_exact",
    "log_partition", "map_grid_path", "map_solve", "map_spanning_tree",
    "map_topk", "marginals", "optimizer_step", "perturb_and_map", "pmf",
    "quad_loss", "run_toy_training", "sample_exact", "sample_noise",
    "setup_from_name", "substream", "sweep_lambda", "update_alpha",
    "update_ema", "weight",
]
