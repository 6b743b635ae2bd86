"""Robust statistics on manifolds via median-of-means aggregation.

Geometry primitives for the sphere, the planar shape space, and SPD
matrices; Frechet mean and geometric median solvers; concentration bounds
for the median-of-means estimator; robust principal geodesic analysis; and
a seeded experiment harness.
"""

from .bounds import (
    c_alpha_extrinsic,
    c_alpha_intrinsic,
    eta_chebyshev_extrinsic,
    eta_chebyshev_intrinsic,
    phi,
    theorem_bound,
    vmf_confidence_radius,
    vmf_geodesic_cdf,
)
from .estimators import (
    EstimatorReport,
    SolverConfig,
    SubsetPartition,
    extrinsic_mean,
    extrinsic_median,
    frechet_mean,
    frobenius_median,
    intrinsic_mean_gradient,
    intrinsic_mean_sphere,
    intrinsic_median,
    median_of_means,
    partition,
)
from .experiments import (
    ExperimentConfig,
    LandmarkDataset,
    ResultTable,
    load_landmarks,
    make_config,
    report_bounds,
    run_experiment,
    run_hands,
    run_rpga_experiment,
    save_landmarks,
)
from .geometry import (
    ManifoldPoint,
    ManifoldSpec,
    MetricKind,
    PlanarShape,
    SPD,
    Sphere,
    TangentVector,
    distance,
    exp,
    inner,
    lipschitz_witness,
    log,
    project_tangent,
    project_to_manifold,
    spec_of,
)
from .pga import (
    TangentBasis,
    mssr,
    pga,
    project_to_submanifold,
    rpga,
    tangent_coordinates,
)
from .samplers import (
    SpdLogNormalParams,
    VmfParams,
    confidence_radius,
    ellipse_shape,
    sample_outlier,
    sample_spd_lognormal,
    sample_vmf,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
