"""Geometry of the three model spaces.

Points, tangent vectors, and the metric operations (distance, exp, log,
inner product, projections) for

* ``Sphere(d)``       unit vectors in R^{d+1} with the round metric,
* ``PlanarShape(K)``  planar K-landmark shapes: centered unit-norm complex
                      K-vectors modulo rotation, stored as a fixed
                      representative of length 2K (x1, y1, ..., xK, yK),
* ``SPD(n)``          symmetric positive definite n x n matrices with the
                      affine-invariant (Fisher-Rao) metric.

All values are immutable and all operations are pure functions, so
everything here is safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    BasePointMismatch,
    CutLocus,
    DegenerateInput,
    DimensionMismatch,
    InvalidTangent,
    ManifoldMismatch,
    OutOfBall,
    UnsupportedMetric,
)

# Storage invariants (unit norm, centering, symmetry) hold to this tolerance.
POINT_ATOL = 1e-12
# Tangency invariants hold to this tolerance.
TANGENT_ATOL = 1e-10
# |p.q| above 1 - this switches the sphere log factor to its series limit.
_SERIES_LIMIT_ATOL = 1e-10


class MetricKind(Enum):
    INTRINSIC = "intrinsic"
    EXTRINSIC = "extrinsic"


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A point on a manifold, stored in ambient coordinates.

    Construct through ``manifold.point(coords)`` which validates the storage
    invariants; the raw constructor is used internally on coordinates that
    are valid by construction.
    """

    manifold: "Sphere | PlanarShape | SPD"
    coords: np.ndarray

    def __post_init__(self):
        self.coords.setflags(write=False)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector at ``base``, in the same ambient representation."""

    base: ManifoldPoint
    vec: np.ndarray

    def __post_init__(self):
        self.vec.setflags(write=False)

    @property
    def manifold(self):
        return self.base.manifold


def _as_float_array(a, shape=None, what="input"):
    arr = np.asarray(a, dtype=float)
    if shape is not None and arr.shape != shape:
        raise DimensionMismatch(f"{what} has shape {arr.shape}, expected {shape}")
    return arr


# ---------------------------------------------------------------------------
# Sphere S^d in R^{d+1}.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Sphere:
    """Unit sphere S^dim embedded in R^{dim+1}."""

    dim: int

    @property
    def ambient_shape(self):
        return (self.dim + 1,)

    def point(self, coords) -> ManifoldPoint:
        c = _as_float_array(coords, self.ambient_shape, "sphere point")
        if abs(np.linalg.norm(c) - 1.0) > POINT_ATOL:
            raise DegenerateInput("sphere point is not unit norm within 1e-12")
        return ManifoldPoint(self, c)

    def tangent(self, base: ManifoldPoint, vec) -> TangentVector:
        v = _as_float_array(vec, self.ambient_shape, "sphere tangent")
        if abs(v @ base.coords) > TANGENT_ATOL * max(1.0, np.linalg.norm(v)):
            raise InvalidTangent("tangent vector is not orthogonal to the base point")
        return TangentVector(base, v)

    # -- metric operations on raw coordinate arrays --

    def distance_coords(self, p, q):
        return math.acos(float(np.clip(p @ q, -1.0, 1.0)))

    def log_coords(self, p, q):
        t = float(np.clip(p @ q, -1.0, 1.0))
        if t < -1.0 + _SERIES_LIMIT_ATOL:
            raise CutLocus("log undefined at the antipode")
        if t > 1.0 - _SERIES_LIMIT_ATOL:
            coef = 1.0  # series limit of arccos(t)/sqrt(1-t^2) as t -> 1
        else:
            coef = math.acos(t) / math.sqrt(1.0 - t * t)
        return coef * (q - t * p)

    def exp_coords(self, p, v):
        theta = float(np.linalg.norm(v))
        if theta < 1e-300:
            return p.copy()
        out = math.cos(theta) * p + math.sin(theta) * (v / theta)
        return out / np.linalg.norm(out)

    def inner_coords(self, p, u, v):
        return float(u @ v)

    def norm_coords(self, p, v):
        return float(np.linalg.norm(v))

    def project_tangent_coords(self, p, a):
        return a - (a @ p) * p

    def project_coords(self, a):
        nrm = np.linalg.norm(a)
        if nrm < 1e-150:
            raise DegenerateInput("cannot project the zero vector to the sphere")
        return a / nrm

    # batched helpers used by the estimators

    def log_many(self, p, pts):
        t = np.clip(pts @ p, -1.0, 1.0)
        if np.any(t < -1.0 + _SERIES_LIMIT_ATOL):
            raise CutLocus("log undefined at the antipode")
        theta = np.arccos(t)
        s = np.sqrt(np.maximum(1.0 - t * t, 1e-300))
        coef = np.where(t > 1.0 - _SERIES_LIMIT_ATOL, 1.0, theta / s)
        return coef[:, None] * (pts - np.outer(t, p))

    def distance_many(self, p, pts):
        return np.arccos(np.clip(pts @ p, -1.0, 1.0))


# ---------------------------------------------------------------------------
# Planar shape space: K landmarks in the plane, modulo translation, scale
# and rotation.  Points are stored as the centered unit-norm representative;
# rotation is quotiented out inside the metric operations by aligning the
# second argument with the optimal unit complex rotation.
# ---------------------------------------------------------------------------


def _to_complex(coords):
    return coords[0::2] + 1j * coords[1::2]


def _to_real(z):
    out = np.empty(2 * z.shape[-1])
    out[0::2] = z.real
    out[1::2] = z.imag
    return out


@dataclass(frozen=True)
class PlanarShape:
    """Planar shape space with ``landmarks`` labeled points."""

    landmarks: int

    @property
    def ambient_shape(self):
        return (2 * self.landmarks,)

    def point(self, coords) -> ManifoldPoint:
        c = _as_float_array(coords, self.ambient_shape, "shape point")
        z = _to_complex(c)
        if abs(z.mean()) > POINT_ATOL:
            raise DegenerateInput("shape representative is not centered within 1e-12")
        if abs(np.linalg.norm(z) - 1.0) > POINT_ATOL:
            raise DegenerateInput("shape representative is not unit norm within 1e-12")
        return ManifoldPoint(self, c)

    def tangent(self, base: ManifoldPoint, vec) -> TangentVector:
        v = _as_float_array(vec, self.ambient_shape, "shape tangent")
        zv = _to_complex(v)
        zp = _to_complex(base.coords)
        scale = max(1.0, float(np.linalg.norm(v)))
        h = np.sum(zv * np.conj(zp))
        # Re(h) = v.p, Im(h) = v.(i p): both components must vanish.
        if abs(h) > TANGENT_ATOL * scale:
            raise InvalidTangent("shape tangent is not horizontal at the base point")
        if abs(zv.mean()) * self.landmarks > TANGENT_ATOL * scale:
            raise InvalidTangent("shape tangent is not centered")
        return TangentVector(base, v)

    # complex-representation helpers

    def _align(self, zp, zq):
        """Rotate zq so its Hermitian product with zp is real nonnegative."""
        h = np.sum(zp * np.conj(zq))
        mod = abs(h)
        if mod < 1e-300:
            return zq, 0.0
        return zq * (h / mod), mod

    def distance_coords(self, p, q):
        zp, zq = _to_complex(p), _to_complex(q)
        mod = abs(np.sum(zp * np.conj(zq)))
        return math.acos(min(mod, 1.0))

    def log_coords(self, p, q):
        zp, zq = _to_complex(p), _to_complex(q)
        zq_a, t = self._align(zp, zq)
        t = min(t, 1.0)
        if t < 1e-12:
            raise CutLocus("shape distance is pi/2 or more after rotation alignment")
        if t > 1.0 - _SERIES_LIMIT_ATOL:
            coef = 1.0
        else:
            coef = math.acos(t) / math.sqrt(1.0 - t * t)
        return _to_real(coef * (zq_a - t * zp))

    def exp_coords(self, p, v):
        theta = float(np.linalg.norm(v))
        if theta < 1e-300:
            return p.copy()
        out = math.cos(theta) * _to_complex(p) + math.sin(theta) * _to_complex(v) / theta
        out = out - out.mean()
        return _to_real(out / np.linalg.norm(out))

    def inner_coords(self, p, u, v):
        return float(u @ v)

    def norm_coords(self, p, v):
        return float(np.linalg.norm(v))

    def project_tangent_coords(self, p, a):
        za = _to_complex(a)
        za = za - za.mean()
        zp = _to_complex(p)
        h = np.sum(za * np.conj(zp))
        # subtracting h*zp removes both the zp and the (i zp) components
        return _to_real(za - h * zp)

    def project_coords(self, a):
        za = _to_complex(a)
        za = za - za.mean()
        nrm = np.linalg.norm(za)
        if nrm < 1e-150:
            raise DegenerateInput("configuration collapses to a point after centering")
        return _to_real(za / nrm)

    def align_many(self, p, pts):
        """Optimal-rotation alignment of stacked representatives to p.

        Returns the aligned real representatives and |<p, q_i>|.
        """
        zp = _to_complex(p)
        Z = pts[:, 0::2] + 1j * pts[:, 1::2]
        h = Z.conj() @ zp
        mod = np.abs(h)
        phase = np.where(mod < 1e-300, 1.0, h / np.maximum(mod, 1e-300))
        Za = Z * phase[:, None]
        out = np.empty_like(pts)
        out[:, 0::2] = Za.real
        out[:, 1::2] = Za.imag
        return out, np.minimum(mod, 1.0)

    def log_many(self, p, pts):
        aligned, t = self.align_many(p, pts)
        if np.any(t < 1e-12):
            raise CutLocus("shape distance is pi/2 or more after rotation alignment")
        theta = np.arccos(t)
        s = np.sqrt(np.maximum(1.0 - t * t, 1e-300))
        coef = np.where(t > 1.0 - _SERIES_LIMIT_ATOL, 1.0, theta / s)
        return coef[:, None] * (aligned - np.outer(t, p))

    def distance_many(self, p, pts):
        zp = _to_complex(p)
        Z = pts[:, 0::2] + 1j * pts[:, 1::2]
        return np.arccos(np.minimum(np.abs(Z.conj() @ zp), 1.0))


# ---------------------------------------------------------------------------
# SPD(n) with the affine-invariant metric <A,B>_p = tr(p^-1 A p^-1 B).
# Matrix exp/log/sqrt are computed by symmetric eigendecomposition, which is
# exact for symmetric matrices and stable at the sizes used here.
# ---------------------------------------------------------------------------


def _symmetrize(m):
    return 0.5 * (m + m.T)


def _eigh_apply(mat, fn):
    w, u = np.linalg.eigh(mat)
    return _symmetrize((u * fn(w)) @ u.T)


# Solvers evaluate several operations at the same base point per iteration;
# a small FIFO cache of square-root pairs removes the repeated eigh calls.
_SQRT_PAIR_CACHE_LIMIT = 512
_sqrt_pair_cache: dict = {}


def _spd_sqrt_pair(p):
    """(p^{1/2}, p^{-1/2}) from one eigendecomposition, memoized."""
    key = p.tobytes()
    hit = _sqrt_pair_cache.get(key)
    if hit is not None:
        return hit
    w, u = np.linalg.eigh(p)
    if w[0] <= 0.0:
        raise DegenerateInput("matrix is not positive definite")
    rw = np.sqrt(w)
    pair = (_symmetrize((u * rw) @ u.T), _symmetrize((u / rw) @ u.T))
    pair[0].setflags(write=False)
    pair[1].setflags(write=False)
    if len(_sqrt_pair_cache) >= _SQRT_PAIR_CACHE_LIMIT:
        _sqrt_pair_cache.pop(next(iter(_sqrt_pair_cache)), None)
    _sqrt_pair_cache[key] = pair
    return pair


def _symmetrize_stack(m):
    return 0.5 * (m + m.transpose(0, 2, 1))


@dataclass(frozen=True)
class SPD:
    """Symmetric positive definite ``size`` x ``size`` matrices."""

    size: int

    @property
    def ambient_shape(self):
        return (self.size, self.size)

    def point(self, coords) -> ManifoldPoint:
        c = _as_float_array(coords, self.ambient_shape, "SPD point")
        if np.max(np.abs(c - c.T)) > POINT_ATOL * max(1.0, float(np.max(np.abs(c)))):
            raise DegenerateInput("matrix is not symmetric within 1e-12")
        c = _symmetrize(c)
        if np.linalg.eigvalsh(c)[0] <= 0.0:
            raise DegenerateInput("matrix has a non-positive eigenvalue")
        return ManifoldPoint(self, c)

    def tangent(self, base: ManifoldPoint, vec) -> TangentVector:
        v = _as_float_array(vec, self.ambient_shape, "SPD tangent")
        if np.max(np.abs(v - v.T)) > POINT_ATOL * max(1.0, float(np.max(np.abs(v)))):
            raise InvalidTangent("SPD tangent vector is not symmetric within 1e-12")
        return TangentVector(base, _symmetrize(v))

    def distance_coords(self, p, q):
        _, pis = _spd_sqrt_pair(p)
        w = np.linalg.eigvalsh(pis @ q @ pis)
        if w[0] <= 0.0:
            raise DegenerateInput("matrix is not positive definite")
        return float(np.linalg.norm(np.log(w)))

    def log_coords(self, p, q):
        ps, pis = _spd_sqrt_pair(p)
        m = _symmetrize(pis @ q @ pis)
        if np.linalg.eigvalsh(m)[0] <= 0.0:
            raise DegenerateInput("matrix is not positive definite")
        return _symmetrize(ps @ _eigh_apply(m, np.log) @ ps)

    def exp_coords(self, p, v):
        ps, pis = _spd_sqrt_pair(p)
        return _symmetrize(ps @ _eigh_apply(_symmetrize(pis @ v @ pis), np.exp) @ ps)

    def inner_coords(self, p, u, v):
        _, pis = _spd_sqrt_pair(p)
        return float(np.sum((pis @ u @ pis) * (pis @ v @ pis)))

    def norm_coords(self, p, v):
        _, pis = _spd_sqrt_pair(p)
        return float(np.linalg.norm(pis @ v @ pis))

    def project_tangent_coords(self, p, a):
        return _symmetrize(a)

    def project_coords(self, a):
        sym = _symmetrize(a)
        if np.linalg.eigvalsh(sym)[0] <= 0.0:
            raise DegenerateInput("symmetrization is not positive definite")
        return sym

    def log_many(self, p, pts):
        ps, pis = _spd_sqrt_pair(p)
        m = _symmetrize_stack(pis @ np.asarray(pts) @ pis)
        w, u = np.linalg.eigh(m)
        if np.min(w) <= 0.0:
            raise DegenerateInput("matrix is not positive definite")
        inner = (u * np.log(w)[:, None, :]) @ u.transpose(0, 2, 1)
        return _symmetrize_stack(ps @ _symmetrize_stack(inner) @ ps)

    def distance_many(self, p, pts):
        _, pis = _spd_sqrt_pair(p)
        m = _symmetrize_stack(pis @ np.asarray(pts) @ pis)
        w = np.linalg.eigvalsh(m)
        return np.linalg.norm(np.log(np.maximum(w, 1e-300)), axis=1)


Manifold = Sphere | PlanarShape | SPD


# ---------------------------------------------------------------------------
# Operations on points and tangent vectors.
# ---------------------------------------------------------------------------


def _require_same_manifold(p: ManifoldPoint, q: ManifoldPoint):
    if p.manifold != q.manifold:
        raise ManifoldMismatch(f"points live on {p.manifold} and {q.manifold}")


def distance(p: ManifoldPoint, q: ManifoldPoint, metric: MetricKind = MetricKind.INTRINSIC) -> float:
    """Distance between two points, intrinsic (geodesic) or extrinsic (chordal).

    The extrinsic metric is defined only on the sphere, where the embedding
    into R^{d+1} is the identity.
    """
    _require_same_manifold(p, q)
    if metric is MetricKind.EXTRINSIC:
        if not isinstance(p.manifold, Sphere):
            raise UnsupportedMetric("the extrinsic metric is defined only on the sphere")
        return float(np.linalg.norm(p.coords - q.coords))
    return p.manifold.distance_coords(p.coords, q.coords)


def exp(v: TangentVector) -> ManifoldPoint:
    """Riemannian exponential: endpoint of the geodesic generated by ``v``."""
    m = v.manifold
    m.tangent(v.base, v.vec)  # re-validate tangency
    if isinstance(m, (Sphere, PlanarShape)):
        if np.linalg.norm(v.vec) >= math.pi:
            raise InvalidTangent("tangent norm must stay below pi on sphere and shape space")
    return ManifoldPoint(m, m.exp_coords(v.base.coords, v.vec))


def log(p: ManifoldPoint, q: ManifoldPoint) -> TangentVector:
    """Riemannian logarithm: the tangent vector at ``p`` pointing to ``q``.

    On the shape space ``q`` is first aligned to ``p`` by the optimal unit
    complex rotation, so the result is horizontal at ``p``.
    """
    _require_same_manifold(p, q)
    return TangentVector(p, p.manifold.log_coords(p.coords, q.coords))


def inner(u: TangentVector, v: TangentVector) -> float:
    """Riemannian inner product of two tangent vectors at the same base."""
    if u.base is not v.base:
        if u.manifold != v.manifold or not np.array_equal(u.base.coords, v.base.coords):
            raise BasePointMismatch("tangent vectors are attached to different base points")
    return u.manifold.inner_coords(u.base.coords, u.vec, v.vec)


def norm(v: TangentVector) -> float:
    return v.manifold.norm_coords(v.base.coords, v.vec)


def project_tangent(p: ManifoldPoint, a) -> TangentVector:
    """Orthogonal projection of an ambient vector onto the tangent space at p."""
    arr = _as_float_array(a, p.manifold.ambient_shape, "ambient vector")
    return TangentVector(p, p.manifold.project_tangent_coords(p.coords, arr))


def project_to_manifold(manifold: Manifold, a) -> ManifoldPoint:
    """Nearest-point projection of an ambient vector onto the manifold."""
    arr = _as_float_array(a, manifold.ambient_shape, "ambient vector")
    return ManifoldPoint(manifold, manifold.project_coords(arr))


# ---------------------------------------------------------------------------
# Whitened symmetric-matrix coordinates.  The off-diagonal scaling by sqrt(2)
# makes the Euclidean norm of the coordinate vector equal to the Frobenius
# norm of the matrix.
# ---------------------------------------------------------------------------


def sym_matrix_to_coords(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    iu = np.triu_indices(n, 1)
    return np.concatenate([np.diag(a), math.sqrt(2.0) * a[iu]])


def coords_to_sym_matrix(z: np.ndarray, n: int) -> np.ndarray:
    out = np.diag(np.asarray(z[:n], dtype=float))
    iu = np.triu_indices(n, 1)
    off = np.asarray(z[n:], dtype=float) / math.sqrt(2.0)
    out[iu] = off
    out[(iu[1], iu[0])] = off
    return out


def tangent_frame(p: ManifoldPoint) -> np.ndarray:
    """Deterministic orthonormal basis of the tangent space at ``p``.

    Returns a matrix with orthonormal columns spanning T_p inside the flat
    ambient space; only defined for the sphere and the shape space (SPD uses
    the whitened matrix coordinates instead).
    """
    m = p.manifold
    if isinstance(m, Sphere):
        # Householder reflection mapping e_0 to -sign(p_0) p; the remaining
        # columns form an orthonormal basis of the orthogonal complement.
        c = p.coords
        u = c.copy()
        u[0] += math.copysign(1.0, c[0])
        h = np.eye(len(c)) - 2.0 * np.outer(u, u) / (u @ u)
        return h[:, 1:]
    if isinstance(m, PlanarShape):
        k = m.landmarks
        cons = np.zeros((2 * k, 4))
        cons[0::2, 0] = 1.0 / math.sqrt(k)
        cons[1::2, 1] = 1.0 / math.sqrt(k)
        cons[:, 2] = p.coords
        cons[:, 3] = _to_real(1j * _to_complex(p.coords))
        u_full, _, _ = np.linalg.svd(cons, full_matrices=True)
        return u_full[:, 4:]
    raise UnsupportedMetric("tangent frames are provided for sphere and shape space only")


# ---------------------------------------------------------------------------
# Constant tables backing the deviation bounds, and the Lipschitz witness.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifoldSpec:
    """Per-manifold constants: dimensions, the Lipschitz constant of the log
    map with the radius of the ball on which it holds, and the injectivity
    radius."""

    manifold: Manifold
    intrinsic_dim: int
    ambient_dim: int
    log_lipschitz_constant: float
    log_lipschitz_radius: float
    injectivity_radius: float


def spec_of(manifold: Manifold) -> ManifoldSpec:
    if isinstance(manifold, Sphere):
        d = manifold.dim
        return ManifoldSpec(manifold, d, d + 1, 2.0, math.pi / 2, math.pi)
    if isinstance(manifold, PlanarShape):
        k = manifold.landmarks
        return ManifoldSpec(manifold, 2 * k - 4, 2 * k, 2.0, math.pi / 4, math.pi / 2)
    if isinstance(manifold, SPD):
        n = manifold.size
        return ManifoldSpec(manifold, n * (n + 1) // 2, n * n, 1.0, math.inf, math.inf)
    raise TypeError(f"unknown manifold {manifold!r}")


def lipschitz_witness(p: ManifoldPoint, q1: ManifoldPoint, q2: ManifoldPoint):
    """Both sides of the log-map Lipschitz inequality at ``p``.

    Returns ``(lhs, rhs)`` with ``lhs = |log_p q1 - log_p q2|`` (ambient norm
    on sphere and shape space, metric norm at p on SPD) and
    ``rhs = K d_g(q1, q2)``; the inequality ``lhs <= rhs`` holds whenever q1
    and q2 lie inside the stated ball around p.
    """
    _require_same_manifold(p, q1)
    _require_same_manifold(p, q2)
    sp = spec_of(p.manifold)
    if math.isfinite(sp.log_lipschitz_radius):
        for q in (q1, q2):
            if distance(p, q) > sp.log_lipschitz_radius + 1e-12:
                raise OutOfBall("point lies outside the ball on which the bound is stated")
    v1 = p.manifold.log_coords(p.coords, q1.coords)
    v2 = p.manifold.log_coords(p.coords, q2.coords)
    if isinstance(p.manifold, SPD):
        lhs = p.manifold.norm_coords(p.coords, v1 - v2)
    else:
        lhs = float(np.linalg.norm(v1 - v2))
    rhs = sp.log_lipschitz_constant * distance(q1, q2)
    return lhs, rhs
