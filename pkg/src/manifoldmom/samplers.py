"""Seeded generation of the simulation inputs.

von Mises-Fisher samples on S^d, log-normal samples on SPD matrices,
outliers placed outside a confidence region about the population mean, and
the ellipse landmark shapes used as contamination in the shape study.

All generators are value-semantic: they accept either an integer seed or a
``numpy.random.Generator`` and never touch global state.  Distinct runs or
replicates should use streams derived via :func:`replicate_generator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bounds
from .errors import DegenerateInput, DomainError, RejectionBudgetExceeded
from .geometry import (
    ManifoldPoint,
    PlanarShape,
    SPD,
    Sphere,
    _eigh_apply,
    coords_to_sym_matrix,
)

_REJECTION_BUDGET = 1_000_000
_PROPOSAL_BATCH = 4096
# internal seed for the cached SPD confidence-radius calibration draws
_CALIBRATION_SEED = 0x5EED_CA1B
_CALIBRATION_DRAWS = 100_000


def as_generator(seed) -> np.random.Generator:
    """Pass through a Generator, or build one from an integer seed."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def replicate_generator(master_seed: int, *key: int) -> np.random.Generator:
    """Independent child stream for a replicate or subset, keyed by indices.

    Changing one key leaves every other stream untouched, so replicates can
    execute in any order or in parallel with identical results.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=key))


@dataclass(frozen=True)
class VmfParams:
    """Mean direction on a sphere and concentration kappa > 0."""

    mu: ManifoldPoint
    kappa: float

    def __post_init__(self):
        if not isinstance(self.mu.manifold, Sphere):
            raise DomainError("the vMF mean direction must be a sphere point")
        if self.kappa <= 0.0:
            raise DomainError("kappa must be positive")


@dataclass(frozen=True)
class SpdLogNormalParams:
    """Log-normal law on SPD(size): whitened log coordinates at the identity
    are N(0, kappa * sigma), sigma defaulting to the identity."""

    kappa: float
    sigma: np.ndarray | None = None
    size: int = 3

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise DomainError("kappa must be positive")
        q = self.size * (self.size + 1) // 2
        if self.sigma is not None:
            s = np.asarray(self.sigma, dtype=float)
            if s.shape != (q, q):
                raise DomainError(f"sigma must be {q}x{q}")
            if np.max(np.abs(s - s.T)) > 1e-12:
                raise DomainError("sigma must be symmetric")
            if np.linalg.eigvalsh(s)[0] < -1e-12:
                raise DomainError("sigma must be positive semidefinite")
            object.__setattr__(self, "sigma", s)

    @property
    def coord_dim(self) -> int:
        return self.size * (self.size + 1) // 2

    def coord_factor(self) -> np.ndarray:
        """Matrix L with L L^T = kappa * sigma."""
        q = self.coord_dim
        if self.sigma is None:
            return math.sqrt(self.kappa) * np.eye(q)
        w, u = np.linalg.eigh(self.sigma)
        return math.sqrt(self.kappa) * (u * np.sqrt(np.maximum(w, 0.0)))


# ---------------------------------------------------------------------------
# von Mises-Fisher sampling: envelope rejection for the cosine of the
# colatitude (Wood's scheme) plus a uniform tangent direction.
# ---------------------------------------------------------------------------


def _vmf_cosines(kappa: float, ambient_dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    dm = ambient_dim - 1
    b = dm / (math.sqrt(4.0 * kappa * kappa + dm * dm) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + dm * math.log1p(-x0 * x0)
    out = np.empty(n)
    filled = 0
    while filled < n:
        size = max(_PROPOSAL_BATCH, n - filled)
        z = rng.beta(0.5 * dm, 0.5 * dm, size=size)
        u = rng.uniform(size=size)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        accept = kappa * w + dm * np.log1p(-x0 * w) - c >= np.log(u)
        got = w[accept]
        take = min(len(got), n - filled)
        out[filled : filled + take] = got[:take]
        filled += take
    return out


def sample_vmf(params: VmfParams, n: int, seed) -> list[ManifoldPoint]:
    """n i.i.d. draws from vMF(mu, kappa); deterministic per seed."""
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = as_generator(seed)
    manifold = params.mu.manifold
    mu = params.mu.coords
    dim = manifold.dim + 1
    w = _vmf_cosines(params.kappa, dim, n, rng)
    v = rng.standard_normal((n, dim))
    v -= np.outer(v @ mu, mu)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    pts = w[:, None] * mu + np.sqrt(np.maximum(1.0 - w * w, 0.0))[:, None] * v
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return [ManifoldPoint(manifold, row) for row in pts]


def sample_spd_lognormal(params: SpdLogNormalParams, n: int, seed) -> list[ManifoldPoint]:
    """n i.i.d. draws: exp of a symmetric matrix with Gaussian whitened
    coordinates at the identity."""
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = as_generator(seed)
    manifold = SPD(params.size)
    factor = params.coord_factor()
    zs = rng.standard_normal((n, params.coord_dim)) @ factor.T
    return [
        ManifoldPoint(manifold, _eigh_apply(coords_to_sym_matrix(z, params.size), np.exp))
        for z in zs
    ]


# ---------------------------------------------------------------------------
# Confidence radii and outliers.
# ---------------------------------------------------------------------------

_spd_radius_cache: dict = {}


def spd_confidence_radius(params: SpdLogNormalParams, level: float) -> float:
    """Empirical ``level`` quantile of d_g(X, I), cached per parameter set.

    The whitened log coordinates at the identity are an isometry, so the
    geodesic distance of a draw equals the Euclidean norm of its coordinate
    vector and the calibration needs no matrix computations.
    """
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    sig = None if params.sigma is None else params.sigma.tobytes()
    key = (params.kappa, params.size, sig, level)
    if key not in _spd_radius_cache:
        rng = np.random.default_rng(_CALIBRATION_SEED)
        zs = rng.standard_normal((_CALIBRATION_DRAWS, params.coord_dim)) @ params.coord_factor().T
        _spd_radius_cache[key] = float(np.quantile(np.linalg.norm(zs, axis=1), level))
    return _spd_radius_cache[key]


def confidence_radius(base_params, level: float) -> float:
    """Geodesic confidence radius about the population mean of the base law."""
    if isinstance(base_params, VmfParams):
        return bounds.vmf_confidence_radius(level, base_params.kappa, base_params.mu.manifold.dim)
    if isinstance(base_params, SpdLogNormalParams):
        return spd_confidence_radius(base_params, level)
    raise DomainError(f"unknown parameter type {type(base_params).__name__}")


def _population_mean(base_params) -> ManifoldPoint:
    if isinstance(base_params, VmfParams):
        return base_params.mu
    return ManifoldPoint(SPD(base_params.size), np.eye(base_params.size))


def _random_unit_tangent(center: ManifoldPoint, rng) -> np.ndarray:
    m = center.manifold
    if isinstance(m, SPD):
        z = rng.standard_normal(m.size * (m.size + 1) // 2)
        z /= np.linalg.norm(z)
        w, u = np.linalg.eigh(center.coords)
        root = (u * np.sqrt(w)) @ u.T
        return root @ coords_to_sym_matrix(z, m.size) @ root
    v = rng.standard_normal(center.coords.shape)
    v = m.project_tangent_coords(center.coords, v)
    return v / np.linalg.norm(v)


def _sample_base(base_params, n, rng, center: ManifoldPoint | None = None):
    """Draws from the base law, optionally re-centered at ``center``."""
    if isinstance(base_params, VmfParams):
        params = base_params if center is None else VmfParams(center, base_params.kappa)
        return sample_vmf(params, n, rng)
    pts = sample_spd_lognormal(base_params, n, rng)
    if center is None:
        return pts
    w, u = np.linalg.eigh(center.coords)
    root = (u * np.sqrt(w)) @ u.T
    manifold = SPD(base_params.size)
    return [ManifoldPoint(manifold, root @ p.coords @ root) for p in pts]


def sample_outlier(
    base_params,
    confidence_level: float,
    n_outliers: int,
    seed,
    mode: str = "conditional",
    cluster_spread: float = 1.5,
    shell: tuple[float, float] = (2.0, 4.0),
) -> list[ManifoldPoint]:
    """Outliers beyond the ``confidence_level`` region about the mean.

    Modes:

    * ``conditional``: rejection sampling from the base distribution
      conditioned on exceeding the confidence radius,
    * ``uniform``: uniform on the sphere beyond the radius (spheres only),
    * ``cluster``: base distribution re-centered at a point a factor
      ``cluster_spread`` beyond the radius in one random direction, with
      draws inside the region rejected; models a coherent foreign
      population as in the shape study's ellipses,
    * ``shell``: one independent random direction per outlier at a radius
      uniform in ``shell`` times the confidence radius.

    Every returned point is strictly farther than the radius from the mean.
    """
    if n_outliers < 0:
        raise DomainError("n_outliers must be nonnegative")
    if n_outliers == 0:
        return []
    rng = as_generator(seed)
    radius = confidence_radius(base_params, confidence_level)
    mean = _population_mean(base_params)
    manifold = mean.manifold

    if mode == "shell":
        lo, hi = shell
        if lo < 1.0 or hi < lo:
            raise DomainError("shell bounds must satisfy 1 <= lo <= hi")
        out = []
        for _ in range(n_outliers):
            u = _random_unit_tangent(mean, rng)
            r = rng.uniform(lo * radius, hi * radius)
            out.append(ManifoldPoint(manifold, manifold.exp_coords(mean.coords, r * u)))
        return out

    if mode == "cluster":
        u = _random_unit_tangent(mean, rng)
        center = ManifoldPoint(
            manifold, manifold.exp_coords(mean.coords, cluster_spread * radius * u)
        )
        propose = lambda size: _sample_base(base_params, size, rng, center)  # noqa: E731
    elif mode == "conditional":
        propose = lambda size: _sample_base(base_params, size, rng)  # noqa: E731
    elif mode == "uniform":
        if not isinstance(manifold, Sphere):
            raise DomainError("uniform outliers are defined on the sphere only")

        def propose(size):
            x = rng.standard_normal((size, manifold.dim + 1))
            x /= np.linalg.norm(x, axis=1, keepdims=True)
            return [ManifoldPoint(manifold, row) for row in x]

    else:
        raise DomainError(f"unknown outlier mode {mode!r}")

    out = []
    proposals = 0
    while len(out) < n_outliers:
        if proposals >= _REJECTION_BUDGET:
            raise RejectionBudgetExceeded(
                f"no acceptance after {proposals} proposals; the radius is too "
                "extreme for the base distribution"
            )
        size = min(_PROPOSAL_BATCH, _REJECTION_BUDGET - proposals)
        proposals += size
        for cand in propose(size):
            if manifold.distance_coords(mean.coords, cand.coords) > radius:
                out.append(cand)
                if len(out) == n_outliers:
                    break
    return out


# ---------------------------------------------------------------------------
# Ellipse shapes.
# ---------------------------------------------------------------------------


def ellipse_shape(a: float, b: float, num_landmarks: int = 72) -> ManifoldPoint:
    """Ellipse sampled at equal angles as a preshape representative.

    Landmarks (a cos(2 pi k / K), b sin(2 pi k / K)) for k = 0..K-1,
    centered and normalized.
    """
    if a <= 0.0 or b <= 0.0:
        raise DomainError("ellipse axes must be positive")
    if num_landmarks < 3:
        raise DomainError("need at least three landmarks")
    angles = 2.0 * math.pi * np.arange(num_landmarks) / num_landmarks
    coords = np.empty(2 * num_landmarks)
    coords[0::2] = a * np.cos(angles)
    coords[1::2] = b * np.sin(angles)
    manifold = PlanarShape(num_landmarks)
    try:
        return manifold.point(manifold.project_coords(coords))
    except DegenerateInput as exc:  # unreachable for positive axes
        raise DomainError(str(exc)) from exc
