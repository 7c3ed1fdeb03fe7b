"""Exact volumes, moments, and MMSE centroid estimates for simplex slices.

Given a full-rank measurement matrix A (M x N, M < N) and measurements
y = A x of a vector on the standard simplex, the package computes the
volume and centroid of the feasible polytope Δ ∩ {A x = y} analytically,
compiles the computation into a static threshold/ReLU/rectified-poly
network, and uses the centroid as the minimum-MSE estimate of x.
"""

from .errors import (
    CentroidError,
    ConvergenceFailure,
    CorruptDocument,
    DegenerateConfiguration,
    EmptyPolytope,
    Infeasible,
    InfeasibleT,
    RankDeficient,
    RowNotOnSimplex,
    SchemaMismatch,
    ShapeError,
    Unbounded,
    UnhandledPoleOrder,
    ZeroColumnEntry,
)
from .measurement import (
    BASIS_MIXED,
    BASIS_NONNEG,
    MeasurementSystem,
    decompose,
    equivalent_measurement,
    feasible_point,
    from_basis,
)
from .ilt_engine import (
    Engine,
    evaluate_moment,
    evaluate_volume,
    evaluate_volume_halfspace,
)
from .network import (
    Network,
    NetStats,
    compile_network,
    load_network,
    save_network,
)
from .estimator import EstimationResult, centroid_estimate, estimate_from_y
from .oracles import (
    PolytopeSample,
    emse,
    l1_baseline,
    l2_baseline,
    lasserre_slice_volume,
    mc_polytope,
    project_simplex,
    sample_uniform_simplex,
)
from .data import ingest_softmax_csv, peaked_rows

__version__ = "0.1.0"

__all__ = [
    "BASIS_MIXED",
    "BASIS_NONNEG",
    "CentroidError",
    "ConvergenceFailure",
    "CorruptDocument",
    "DegenerateConfiguration",
    "EmptyPolytope",
    "Engine",
    "EstimationResult",
    "Infeasible",
    "InfeasibleT",
    "MeasurementSystem",
    "NetStats",
    "Network",
    "PolytopeSample",
    "RankDeficient",
    "RowNotOnSimplex",
    "SchemaMismatch",
    "ShapeError",
    "Unbounded",
    "UnhandledPoleOrder",
    "ZeroColumnEntry",
    "centroid_estimate",
    "compile_network",
    "decompose",
    "emse",
    "equivalent_measurement",
    "estimate_from_y",
    "evaluate_moment",
    "evaluate_volume",
    "evaluate_volume_halfspace",
    "feasible_point",
    "from_basis",
    "ingest_softmax_csv",
    "l1_baseline",
    "l2_baseline",
    "lasserre_slice_volume",
    "load_network",
    "mc_polytope",
    "peaked_rows",
    "project_simplex",
    "sample_uniform_simplex",
    "save_network",
]
