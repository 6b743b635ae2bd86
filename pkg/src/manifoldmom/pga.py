"""Principal geodesic analysis and its median-of-means robust variant.

PGA here is tangent-space PCA: data is mapped to metric-orthonormal
coordinates of the log image at a center, the eigenvectors of the sample
covariance give the principal directions, and explanatory submanifolds are
the exponentiated spans of the leading directions.  The robust variant
centers at the median-of-means estimate and aggregates per-group
covariances by their Frobenius-norm geometric median.

On SPD matrices the coordinates are whitened: the log is conjugated by the
inverse square root of the center and off-diagonals are scaled by sqrt(2),
so Euclidean geometry in coordinates is the affine-invariant geometry of
the manifold.  A raw-coordinate mode (no conjugation) is kept for
comparison.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DegenerateCovariance, DomainError, GroupTooSmall
from .estimators import (
    DEFAULT_CONFIG,
    SolverConfig,
    _canonical_order,
    frechet_mean,
    frobenius_median,
    median_of_means,
    partition,
)
from .geometry import (
    ManifoldPoint,
    SPD,
    TangentVector,
    _spd_sqrt_pair,
    _symmetrize,
    coords_to_sym_matrix,
    spec_of,
    sym_matrix_to_coords,
    tangent_frame,
)

_FD_STEP = 1e-6  # central-difference step for projection gradients
_DEGENERATE_EIGENVALUE = 1e-14


class _TangentChart:
    """Isometric linear coordinates on the tangent space at a center."""

    def __init__(self, center: ManifoldPoint, metric_coords: bool = True):
        self.center = center
        self.metric_coords = metric_coords
        m = center.manifold
        if isinstance(m, SPD):
            self._root, self._inv_root = _spd_sqrt_pair(center.coords)
        else:
            self._frame = tangent_frame(center)

    @property
    def dim(self) -> int:
        return spec_of(self.center.manifold).intrinsic_dim

    def log_to_coords(self, x: ManifoldPoint) -> np.ndarray:
        m = self.center.manifold
        v = m.log_coords(self.center.coords, x.coords)
        return self.tangent_to_coords(v)

    def tangent_to_coords(self, v: np.ndarray) -> np.ndarray:
        m = self.center.manifold
        if isinstance(m, SPD):
            if self.metric_coords:
                v = self._inv_root @ v @ self._inv_root
            return sym_matrix_to_coords(_symmetrize(v))
        return self._frame.T @ v

    def coords_to_tangent(self, z: np.ndarray) -> np.ndarray:
        m = self.center.manifold
        if isinstance(m, SPD):
            mat = coords_to_sym_matrix(z, m.size)
            if self.metric_coords:
                mat = self._root @ mat @ self._root
            return mat
        return self._frame @ z


@dataclass
class TangentBasis:
    """Ordered principal directions at a center.

    ``directions`` are tangent vectors at ``center``; ``direction_coords``
    holds the same directions in the chart coordinates (rows, orthonormal);
    ``eigenvalues`` is the matching nonincreasing spectrum.
    """

    center: ManifoldPoint
    directions: tuple
    eigenvalues: np.ndarray
    direction_coords: np.ndarray
    metric_coords: bool = True

    def __post_init__(self):
        if any(ev2 > ev1 + 1e-12 for ev1, ev2 in zip(self.eigenvalues, self.eigenvalues[1:])):
            raise DomainError("eigenvalues must be nonincreasing")

    def chart(self) -> _TangentChart:
        return _TangentChart(self.center, self.metric_coords)


@dataclass
class ProjectionResult:
    """Projection of a point onto an exponentiated subspace."""

    point: ManifoldPoint
    residual: float
    coefficients: np.ndarray
    converged: bool


@dataclass
class SubmanifoldFit:
    """A k-dimensional explanatory submanifold with its fit quality."""

    basis: TangentBasis
    k: int
    mssr: float


def tangent_coordinates(center: ManifoldPoint, x: ManifoldPoint, metric_coords: bool = True) -> np.ndarray:
    """Chart coordinates of log_center(x); the Euclidean norm equals d_g(center, x)."""
    return _TangentChart(center, metric_coords).log_to_coords(x)


def _covariance(coords: np.ndarray) -> np.ndarray:
    centered = coords - coords.mean(axis=0)
    return centered.T @ centered / len(coords)


def _basis_from_covariance(cov, chart, num_directions, warn_degenerate=True) -> TangentBasis:
    w, u = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1][:num_directions]
    eigvals = np.maximum(w[order], 0.0)
    vecs = u[:, order].T
    if warn_degenerate and eigvals.size and eigvals[-1] < _DEGENERATE_EIGENVALUE:
        warnings.warn(
            "trailing principal eigenvalues are numerically zero",
            DegenerateCovariance,
            stacklevel=3,
        )
    directions = tuple(
        TangentVector(chart.center, chart.coords_to_tangent(row)) for row in vecs
    )
    return TangentBasis(chart.center, directions, eigvals, vecs, chart.metric_coords)


def pga(
    points,
    center: ManifoldPoint,
    num_directions: int,
    config: SolverConfig | None = None,
    metric_coords: bool = True,
) -> TangentBasis:
    """Principal directions of the sample covariance of log coordinates at
    ``center`` (the linearized PGA procedure)."""
    del config  # present for interface symmetry with the iterative solvers
    chart = _TangentChart(center, metric_coords)
    if not 1 <= num_directions <= chart.dim:
        raise DomainError(f"num_directions must lie in 1..{chart.dim}")
    coords = np.stack([chart.log_to_coords(p) for p in _canonical_order(points)])
    return _basis_from_covariance(_covariance(coords), chart, num_directions)


def rpga(
    points,
    m: int,
    num_directions: int,
    config: SolverConfig | None = None,
    metric_coords: bool = True,
) -> TangentBasis:
    """Robust PGA: center at the median-of-means estimate, then aggregate
    per-group coordinate covariances by their Frobenius geometric median.

    The groups are the same seeded partition used for the center, so the
    whole procedure is reproducible from one seed.  Groups must have at
    least two members to form a covariance.
    """
    config = config or DEFAULT_CONFIG
    n = len(points)
    if n // m < 2 and m > 1:
        raise GroupTooSmall(f"m={m} forces groups smaller than 2 on n={n} points")
    ordered = _canonical_order(points)
    mom = median_of_means(ordered, m, subset_estimator=frechet_mean, config=config)
    chart = _TangentChart(mom.estimate, metric_coords)
    if not 1 <= num_directions <= chart.dim:
        raise DomainError(f"num_directions must lie in 1..{chart.dim}")
    part = partition(n, m, config.seed)
    coords = np.stack([chart.log_to_coords(p) for p in ordered])
    group_covs = [_covariance(coords[list(group)]) for group in part.groups]
    agg = group_covs[0] if m == 1 else frobenius_median(group_covs, config)
    return _basis_from_covariance(agg, chart, num_directions)


# ---------------------------------------------------------------------------
# Projection onto exponentiated subspaces and the mean squared residual.
# ---------------------------------------------------------------------------


def _make_objective(basis: TangentBasis, k: int, x: ManifoldPoint):
    """Squared-distance objective a -> d_g(exp_center(sum a_i v_i), x)^2."""
    manifold = basis.center.manifold
    if isinstance(manifold, SPD) and basis.metric_coords:
        # Affine invariance: conjugating by center^{-1/2} moves the problem
        # to the identity, where exp of the whitened span is a plain matrix
        # exponential.  Two small eigendecompositions per evaluation.
        _, inv_root = _spd_sqrt_pair(basis.center.coords)
        y = _symmetrize(inv_root @ x.coords @ inv_root)
        mats = np.stack(
            [coords_to_sym_matrix(row, manifold.size) for row in basis.direction_coords[:k]]
        )

        def objective(a):
            m = np.tensordot(a, mats, axes=1)
            w, u = np.linalg.eigh(m)
            half_inv = (u * np.exp(-0.5 * w)) @ u.T
            ev = np.linalg.eigvalsh(half_inv @ y @ half_inv)
            return float(np.sum(np.log(np.maximum(ev, 1e-300)) ** 2))

        return objective

    ambient = np.stack([d.vec for d in basis.directions[:k]])
    injectivity = spec_of(manifold).injectivity_radius

    def objective(a):
        v = np.tensordot(a, ambient, axes=1)
        nrm = manifold.norm_coords(basis.center.coords, v)
        if nrm >= injectivity - 1e-9:
            # steer the search back inside the injectivity ball
            return nrm * nrm + math.pi**2
        p = manifold.exp_coords(basis.center.coords, v)
        return manifold.distance_coords(p, x.coords) ** 2

    return objective


def _central_difference(f, step=_FD_STEP):
    def grad(a):
        g = np.empty_like(a)
        for i in range(len(a)):
            e = np.zeros_like(a)
            e[i] = step
            g[i] = (f(a + e) - f(a - e)) / (2.0 * step)
        return g

    return grad


def project_to_submanifold(
    basis: TangentBasis, k: int, x: ManifoldPoint, config: SolverConfig | None = None
) -> ProjectionResult:
    """Closest point to ``x`` on the span of the first ``k`` directions,
    exponentiated at the center.

    Quasi-Newton descent on the coefficients with central finite-difference
    gradients, initialized at the linearized projection (the coordinate
    inner products).  The returned point is never worse than the linearized
    projection or the center itself.
    """
    config = config or DEFAULT_CONFIG
    if not 1 <= k <= len(basis.directions):
        raise DomainError(f"k must lie in 1..{len(basis.directions)}")
    chart = basis.chart()
    coords = chart.log_to_coords(x)
    objective = _make_objective(basis, k, x)
    a0 = basis.direction_coords[:k] @ coords
    res = minimize(
        objective,
        a0,
        jac=_central_difference(objective),
        method="BFGS",
        options={"gtol": 1e-9, "maxiter": 200},
    )
    candidates = [np.zeros(k), a0, np.asarray(res.x, dtype=float)]
    values = [objective(a) for a in candidates]
    best = int(np.argmin(values))
    a_best = candidates[best]
    manifold = basis.center.manifold
    ambient = np.stack([d.vec for d in basis.directions[:k]])
    point = ManifoldPoint(
        manifold, manifold.exp_coords(basis.center.coords, np.tensordot(a_best, ambient, axes=1))
    )
    residual = math.sqrt(max(values[best], 0.0))
    return ProjectionResult(point, residual, a_best, bool(res.success))


def mssr(points, basis: TangentBasis, k: int, config: SolverConfig | None = None) -> float:
    """Mean squared geodesic residual of the points to the k-dimensional
    exponentiated subspace of ``basis``."""
    config = config or DEFAULT_CONFIG
    residuals = [project_to_submanifold(basis, k, p, config).residual for p in points]
    return float(np.mean(np.square(residuals)))


def fit_submanifold(points, basis: TangentBasis, k: int, config: SolverConfig | None = None) -> SubmanifoldFit:
    """Bundle a basis, a subspace dimension, and the achieved mSSR."""
    return SubmanifoldFit(basis, k, mssr(points, basis, k, config))
