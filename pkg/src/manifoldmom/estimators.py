"""Frechet means, geometric medians, and the median-of-means aggregate.

Four sample statistics, following the classical algorithms:

* fixed-point iteration for the intrinsic mean on the sphere (and, with
  per-iterate rotation alignment, on the shape space),
* damped gradient descent for the intrinsic mean on SPD matrices,
* Weiszfeld iteration with Ostresh's anchor modification for the intrinsic
  geometric median on any of the three manifolds,
* projected Weiszfeld for the extrinsic median on the sphere.

Every iterative solver only accepts steps that do not increase the
objective (backtracking along the geodesic towards the proposed iterate),
so the recorded objective trace is non-increasing.  Input order is
canonicalized before accumulation, which makes results invariant to
permutations of the data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    CutLocus,
    HemisphereViolation,
    InvalidGroupCount,
    NotConverged,
    ProjectionUndefined,
    SubsetEstimatorError,
    UnsupportedMetric,
)
from .geometry import ManifoldPoint, MetricKind, PlanarShape, SPD, Sphere

_ANCHOR_ATOL = 1e-12  # iterate counts as sitting on a data point below this
_SNAP_ATOL = 1e-3  # run the data-point optimality test inside this distance


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget, stopping rule, damping, and partition seed."""

    max_iterations: int = 1000
    step_tolerance: float = 1e-10
    step_size: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.step_tolerance <= 0.0:
            raise ValueError("step_tolerance must be positive")
        if not 0.0 < self.step_size <= 1.0:
            raise ValueError("step_size must be in (0, 1]")


DEFAULT_CONFIG = SolverConfig()
# damping 0.5 keeps the SPD gradient mean safely inside its convergence regime
SPD_MEAN_CONFIG = SolverConfig(step_size=0.5)


@dataclass
class EstimatorReport:
    """Estimate plus convergence diagnostics.

    ``objective`` is the averaged empirical risk at the estimate (mean
    squared distance for means, mean distance for medians).
    ``objective_trace`` records the objective at every accepted iterate.
    """

    estimate: ManifoldPoint
    iterations: int
    final_step_norm: float
    objective: float
    converged: bool
    objective_trace: list = field(default_factory=list)
    subset_estimates: list | None = None


@dataclass(frozen=True)
class SubsetPartition:
    """Disjoint split of ``{0..n-1}`` into ``m`` groups of near-equal size."""

    groups: tuple
    m: int

    def __post_init__(self):
        if len(self.groups) != self.m:
            raise InvalidGroupCount("number of groups does not match m")
        sizes = {len(g) for g in self.groups}
        n = sum(len(g) for g in self.groups)
        if not sizes <= {n // self.m, -(-n // self.m)}:
            raise InvalidGroupCount("group sizes must be floor(n/m) or ceil(n/m)")
        flat = [i for g in self.groups for i in g]
        if sorted(flat) != list(range(n)):
            raise InvalidGroupCount("groups must disjointly cover 0..n-1")

    @property
    def n(self):
        return sum(len(g) for g in self.groups)


def partition(n: int, m: int, seed: int) -> SubsetPartition:
    """Uniformly random disjoint partition of ``{0..n-1}`` into m groups.

    The first ``n mod m`` groups receive the extra element; deterministic
    for a given seed.
    """
    if not 1 <= m <= n:
        raise InvalidGroupCount(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    base, extra = divmod(n, m)
    groups, start = [], 0
    for j in range(m):
        size = base + (1 if j < extra else 0)
        groups.append(tuple(int(i) for i in order[start : start + size]))
        start += size
    return SubsetPartition(tuple(groups), m)


# ---------------------------------------------------------------------------
# Shared iteration driver.
# ---------------------------------------------------------------------------


def _canonical_order(points):
    return sorted(points, key=lambda p: p.coords.tobytes())


class _FlatSpace:
    """Euclidean matrix space adapter so the flat Weiszfeld iteration can
    reuse the manifold solver driver."""

    def distance_coords(self, p, q):
        return float(np.linalg.norm(p - q))

    def log_coords(self, p, q):
        return q - p

    def exp_coords(self, p, v):
        return p + v

    def norm_coords(self, p, v):
        return float(np.linalg.norm(v))


def _descend(manifold, x0, objective, propose, config, what):
    """Iterate ``x -> propose(x)`` accepting only non-increasing objectives.

    ``propose`` maps coordinates to candidate coordinates.  When the full
    step increases the objective the driver backtracks along the geodesic
    from x towards the candidate; if no fraction of the step improves, the
    iterate is numerically stationary and the solve stops.
    """
    x = x0
    obj = objective(x)
    trace = [obj]
    iterations = 0
    final_step = 0.0
    converged = False
    for iterations in range(1, config.max_iterations + 1):
        cand = propose(x)
        step = manifold.log_coords(x, cand)
        step_norm = manifold.norm_coords(x, step)
        if step_norm < config.step_tolerance:
            cobj = objective(cand)
            if cobj <= obj:
                x, obj = cand, cobj
                trace.append(obj)
            final_step = step_norm
            converged = True
            break
        scale, accepted = 1.0, False
        for _ in range(60):
            trial = cand if scale == 1.0 else manifold.exp_coords(x, scale * step)
            tobj = objective(trial)
            if tobj <= obj:
                x, obj = trial, tobj
                trace.append(obj)
                final_step = scale * step_norm
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            final_step = 0.0  # no descent along the proposal: stationary
            converged = True
            break
        if final_step < config.step_tolerance:
            converged = True
            break
    if not converged:
        raise NotConverged(
            f"{what} did not converge in {config.max_iterations} iterations "
            f"(last step {final_step:.3e})"
        )
    return x, iterations, final_step, obj, trace


def _single_point_report(point, objective=0.0):
    return EstimatorReport(point, 0, 0.0, objective, True, [objective])


# ---------------------------------------------------------------------------
# Means.
# ---------------------------------------------------------------------------


def _check_hemisphere(pts):
    """Warn unless a unit vector with positive dot product against every
    sample can be exhibited (normalized-mean witness first, then an LP)."""
    mean = pts.mean(axis=0)
    nrm = np.linalg.norm(mean)
    if nrm > 1e-12 and np.min(pts @ (mean / nrm)) > 0.0:
        return
    from scipy.optimize import linprog

    n, d = pts.shape
    # maximize t subject to pts @ u >= t, |u_i| <= 1
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-pts, np.ones((n, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(n), bounds=[(-1, 1)] * d + [(None, None)], method="highs")
    if not res.success or -res.fun <= 1e-12:
        warnings.warn(
            "sample is not contained in an open hemisphere; the intrinsic mean "
            "may not be unique",
            HemisphereViolation,
            stacklevel=3,
        )


def _init_projected_mean(manifold, pts):
    if isinstance(manifold, Sphere):
        mean = pts.mean(axis=0)
        if np.linalg.norm(mean) > 1e-12:
            return manifold.project_coords(mean)
        return pts[0].copy()
    if isinstance(manifold, PlanarShape):
        aligned, _ = manifold.align_many(pts[0], pts)
        mean = aligned.mean(axis=0)
        za = mean[0::2] + 1j * mean[1::2]
        if np.linalg.norm(za - za.mean()) > 1e-12:
            return manifold.project_coords(mean)
        return pts[0].copy()
    return 0.5 * (pts.mean(axis=0) + pts.mean(axis=0).T)  # SPD: Euclidean mean


def intrinsic_mean_sphere(points, config: SolverConfig | None = None) -> EstimatorReport:
    """Intrinsic (Frechet) mean by fixed-point iteration.

    Applies to the sphere and, with rotation alignment of the data to the
    current iterate each sweep, to the shape space.  The iterate is the
    normalized weighted sum of the data with weights
    arccos(<x, p_i>) / sqrt(1 - <x, p_i>^2).
    """
    config = config or DEFAULT_CONFIG
    manifold = points[0].manifold
    if not isinstance(manifold, (Sphere, PlanarShape)):
        raise UnsupportedMetric("fixed-point mean applies to the sphere and shape space")
    points = _canonical_order(points)
    pts = np.stack([p.coords for p in points])
    if len(points) == 1:
        return _single_point_report(points[0])
    if isinstance(manifold, Sphere):
        _check_hemisphere(pts)

    def objective(x):
        return float(np.mean(manifold.distance_many(x, pts) ** 2))

    def propose(x):
        if isinstance(manifold, PlanarShape):
            data, t = manifold.align_many(x, pts)
        else:
            data, t = pts, np.clip(pts @ x, -1.0, 1.0)
        theta = np.arccos(t)
        s = np.sqrt(np.maximum(1.0 - t * t, 1e-300))
        gamma = np.where(t > 1.0 - 1e-10, 1.0, theta / s)
        return manifold.project_coords(gamma @ data)

    x0 = _init_projected_mean(manifold, pts)
    x, its, stepn, obj, trace = _descend(manifold, x0, objective, propose, config, "fixed-point mean")
    return EstimatorReport(ManifoldPoint(manifold, x), its, stepn, obj, True, trace)


def intrinsic_mean_gradient(points, config: SolverConfig | None = None) -> EstimatorReport:
    """Intrinsic mean by damped gradient descent: x -> exp_x(s * mean of logs).

    The workhorse for SPD matrices, where non-positive curvature makes the
    Frechet mean unique; also usable on the sphere or shape space inside a
    convexity ball.
    """
    manifold = points[0].manifold
    if config is None:
        config = SPD_MEAN_CONFIG if isinstance(manifold, SPD) else DEFAULT_CONFIG
    points = _canonical_order(points)
    pts = [p.coords for p in points]
    if len(points) == 1:
        return _single_point_report(points[0])
    stacked = np.stack(pts)

    def objective(x):
        return float(np.mean(manifold.distance_many(x, stacked) ** 2))

    def propose(x):
        logs = manifold.log_many(x, stacked)
        return manifold.exp_coords(x, config.step_size * logs.mean(axis=0))

    x0 = _init_projected_mean(manifold, stacked)
    x, its, stepn, obj, trace = _descend(manifold, x0, objective, propose, config, "gradient mean")
    return EstimatorReport(ManifoldPoint(manifold, x), its, stepn, obj, True, trace)


def frechet_mean(points, config: SolverConfig | None = None) -> EstimatorReport:
    """Intrinsic mean with the customary algorithm for the manifold.

    On SPD matrices, a config whose step size is still the generic default
    is re-damped to the SPD default of 0.5.
    """
    if isinstance(points[0].manifold, SPD):
        if config is not None and config.step_size == DEFAULT_CONFIG.step_size:
            config = replace(config, step_size=SPD_MEAN_CONFIG.step_size)
        return intrinsic_mean_gradient(points, config)
    return intrinsic_mean_sphere(points, config)


def extrinsic_mean(points) -> EstimatorReport:
    """Projection of the Euclidean sample mean: exact and non-iterative."""
    manifold = points[0].manifold
    if not isinstance(manifold, Sphere):
        raise UnsupportedMetric("the extrinsic mean is defined only on the sphere")
    pts = np.stack([p.coords for p in _canonical_order(points)])
    mean = pts.mean(axis=0)
    if np.linalg.norm(mean) < 1e-12:
        raise ProjectionUndefined("the Euclidean sample mean is the zero vector")
    est = manifold.project_coords(mean)
    obj = float(np.mean(np.linalg.norm(pts - est, axis=1) ** 2))
    return EstimatorReport(ManifoldPoint(manifold, est), 0, 0.0, obj, True, [obj])


# ---------------------------------------------------------------------------
# Medians.
# ---------------------------------------------------------------------------


def _resolve_vertex(manifold, objective, anchor, pull_vec, pull_norm, count_at, reach):
    """Resolve a median solve that has stalled against a data point.

    If the 1/d-weighted pull of the remaining points has metric norm at
    most the multiplicity of the point, the point itself is the minimizer.
    Otherwise the minimizer hugs the vertex and plain Weiszfeld contraction
    degrades to a sublinear crawl, so it is located directly by a scalar
    search along the geodesic ray from the anchor in the pull direction.
    """
    if pull_norm <= count_at:
        return anchor.copy()
    from scipy.optimize import minimize_scalar

    direction = pull_vec / pull_norm
    hi = max(8.0 * reach, 1e-4)
    res = minimize_scalar(
        lambda t: objective(manifold.exp_coords(anchor, t * direction)),
        bounds=(0.0, hi),
        method="bounded",
        options={"xatol": 1e-13},
    )
    return manifold.exp_coords(anchor, float(res.x) * direction)


def intrinsic_median(points, config: SolverConfig | None = None) -> EstimatorReport:
    """Intrinsic geometric median by the manifold Weiszfeld iteration.

    The update direction is the 1/d-weighted mean of the logs; an iterate
    sitting on a data point (within 1e-12) drops that point's term for the
    step and the full objective decides acceptance.  A solve stalling
    against a data point is finished by the vertex rule (snap when the
    point is optimal, ray search when the optimum hugs it).
    """
    config = config or DEFAULT_CONFIG
    manifold = points[0].manifold
    points = _canonical_order(points)
    pts = np.stack([p.coords for p in points])
    if len(points) == 1:
        return _single_point_report(points[0])

    def objective(x):
        return float(np.mean(manifold.distance_many(x, pts)))

    def propose(x):
        d = manifold.distance_many(x, pts)
        keep = d > _ANCHOR_ATOL
        if not keep.any():
            return x.copy()
        logs = manifold.log_many(x, pts[keep])
        w = 1.0 / d[keep]
        psi = np.tensordot(w, logs, axes=1) / w.sum()
        j = int(np.argmin(d))
        if d[j] < _SNAP_ATOL and manifold.norm_coords(x, psi) < 1e-5:
            try:
                anchor = pts[j]
                da = manifold.distance_many(anchor, pts)
                at = da <= _ANCHOR_ATOL
                if at.all():
                    return anchor.copy()
                alogs = manifold.log_many(anchor, pts[~at])
                pull = np.tensordot(1.0 / da[~at], alogs, axes=1)
                return _resolve_vertex(
                    manifold, objective, anchor, pull,
                    manifold.norm_coords(anchor, pull), int(at.sum()), d[j],
                )
            except CutLocus:
                pass  # a data point at the anchor's cut locus: no vertex rule
        return manifold.exp_coords(x, config.step_size * psi)

    x0 = _init_projected_mean(manifold, pts)
    x, its, stepn, obj, trace = _descend(manifold, x0, objective, propose, config, "intrinsic median")
    return EstimatorReport(ManifoldPoint(manifold, x), its, stepn, obj, True, trace)


def extrinsic_median(points, config: SolverConfig | None = None) -> EstimatorReport:
    """Extrinsic geometric median on the sphere.

    Weiszfeld direction in the ambient space, projected onto the tangent
    space of the iterate and followed along the sphere; minimizes the mean
    chordal distance, which is the reported objective.
    """
    config = config or DEFAULT_CONFIG
    manifold = points[0].manifold
    if not isinstance(manifold, Sphere):
        raise UnsupportedMetric("the extrinsic median is defined only on the sphere")
    points = _canonical_order(points)
    pts = np.stack([p.coords for p in points])
    if len(points) == 1:
        return _single_point_report(points[0])

    def objective(x):
        return float(np.mean(np.linalg.norm(pts - x, axis=1)))

    def propose(x):
        d = np.linalg.norm(pts - x, axis=1)
        keep = d > _ANCHOR_ATOL
        if not keep.any():
            return x.copy()
        w = 1.0 / d[keep]
        psi = ((pts[keep] - x) * w[:, None]).sum(axis=0) / w.sum()
        v = manifold.project_tangent_coords(x, psi)
        j = int(np.argmin(d))
        if d[j] < _SNAP_ATOL and np.linalg.norm(v) < 1e-5:
            anchor = pts[j]
            da = np.linalg.norm(pts - anchor, axis=1)
            at = da <= _ANCHOR_ATOL
            if at.all():
                return anchor.copy()
            units = (pts[~at] - anchor) / da[~at][:, None]
            pull = manifold.project_tangent_coords(anchor, units.sum(axis=0))
            return _resolve_vertex(
                manifold, objective, anchor, pull,
                float(np.linalg.norm(pull)), int(at.sum()), d[j],
            )
        return manifold.exp_coords(x, config.step_size * v)

    x0 = _init_projected_mean(manifold, pts)
    x, its, stepn, obj, trace = _descend(manifold, x0, objective, propose, config, "extrinsic median")
    return EstimatorReport(ManifoldPoint(manifold, x), its, stepn, obj, True, trace)


def frobenius_median(matrices, config: SolverConfig | None = None) -> np.ndarray:
    """Geometric median of symmetric matrices under the Frobenius norm.

    Classical Weiszfeld iteration in the flat matrix space with the same
    anchor handling as the manifold medians.
    """
    config = config or DEFAULT_CONFIG
    mats = [np.asarray(m, dtype=float) for m in matrices]
    mats.sort(key=lambda m: m.tobytes())
    if len(mats) == 1:
        return mats[0].copy()
    stack = np.stack(mats)
    flat = _FlatSpace()

    def objective(x):
        return float(np.mean(np.linalg.norm(stack - x, axis=(1, 2))))

    def propose(x):
        d = np.linalg.norm(stack - x, axis=(1, 2))
        keep = d > _ANCHOR_ATOL
        if not keep.any():
            return x.copy()
        w = 1.0 / d[keep]
        target = np.tensordot(w, stack[keep], axes=1) / w.sum()
        j = int(np.argmin(d))
        if d[j] < _SNAP_ATOL and np.linalg.norm(target - x) < 1e-5:
            anchor = stack[j]
            da = np.linalg.norm(stack - anchor, axis=(1, 2))
            at = da <= _ANCHOR_ATOL
            if at.all():
                return anchor.copy()
            pull = np.tensordot(1.0 / da[~at], stack[~at] - anchor, axes=1)
            return _resolve_vertex(
                flat, objective, anchor, pull,
                float(np.linalg.norm(pull)), int(at.sum()), d[j],
            )
        return x + config.step_size * (target - x)

    x0 = stack.mean(axis=0)
    x, _, _, _, _ = _descend(flat, x0, objective, propose, config, "Frobenius median")
    return x


# ---------------------------------------------------------------------------
# Median-of-means.
# ---------------------------------------------------------------------------


def median_of_means(
    points,
    m: int,
    subset_estimator=None,
    median_kind: MetricKind = MetricKind.INTRINSIC,
    config: SolverConfig | None = None,
) -> EstimatorReport:
    """Geometric median of per-subset estimates.

    The data is canonically ordered, split into ``m`` seeded random groups,
    the subset estimator (the manifold's Frechet mean by default) is run on
    each group, and the subset estimates are aggregated by the intrinsic or
    extrinsic geometric median.  With ``m == 1`` this is the full-sample
    subset estimator; with ``m == n`` it is the sample geometric median.

    The returned report is the aggregation report with the subset estimates
    attached; subset failures are re-raised tagged with the group index.
    """
    config = config or DEFAULT_CONFIG
    n = len(points)
    if not 1 <= m <= n:
        raise InvalidGroupCount(f"need 1 <= m <= n, got m={m}, n={n}")
    if subset_estimator is None:
        subset_estimator = frechet_mean
    ordered = _canonical_order(points)
    part = partition(n, m, config.seed)
    reports = []
    for j, group in enumerate(part.groups):
        subset = [ordered[i] for i in group]
        try:
            reports.append(subset_estimator(subset, config))
        except Exception as exc:  # noqa: BLE001 - tag and re-raise
            raise SubsetEstimatorError(j, str(exc)) from exc
    estimates = [r.estimate for r in reports]
    if m == 1:
        report = reports[0]
        report.subset_estimates = estimates
        return report
    if median_kind is MetricKind.INTRINSIC:
        report = intrinsic_median(estimates, config)
    elif median_kind is MetricKind.EXTRINSIC:
        report = extrinsic_median(estimates, config)
    else:
        raise UnsupportedMetric(f"unknown median kind {median_kind!r}")
    report.subset_estimates = estimates
    return report
