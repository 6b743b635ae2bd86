"""Metric operations, storage invariants, and the Lipschitz witnesses."""

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

import manifoldmom as mm
from manifoldmom.errors import (
    BasePointMismatch,
    CutLocus,
    DegenerateInput,
    DimensionMismatch,
    InvalidTangent,
    ManifoldMismatch,
    OutOfBall,
    UnsupportedMetric,
)
from manifoldmom.geometry import sym_matrix_to_coords, coords_to_sym_matrix, tangent_frame

from conftest import random_point, random_tangent

S2 = mm.Sphere(2)
SHAPE5 = mm.PlanarShape(5)
SPD3 = mm.SPD(3)
MANIFOLDS = [S2, mm.Sphere(7), SHAPE5, SPD3]


def test_distance_identity_is_zero(rng):
    for manifold in MANIFOLDS:
        p = random_point(manifold, rng)
        assert mm.distance(p, p) == pytest.approx(0.0, abs=1e-7)


def test_sphere_orthogonal_distances():
    p = S2.point([1.0, 0.0, 0.0])
    q = S2.point([0.0, 1.0, 0.0])
    assert mm.distance(p, q) == pytest.approx(math.pi / 2, abs=1e-15)
    assert mm.distance(p, q, mm.MetricKind.EXTRINSIC) == pytest.approx(math.sqrt(2), abs=1e-15)


def test_spd_distance_matches_eigendecomposition_oracle():
    p = SPD3.point(np.eye(3))
    q = SPD3.point(np.diag([math.e, 1.0, 1.0]))
    # oracle: Frobenius norm of the scipy matrix log of diag(e, 1, 1)
    oracle = np.linalg.norm(scipy.linalg.logm(np.diag([math.e, 1.0, 1.0])), "fro")
    assert oracle == pytest.approx(1.0, abs=1e-12)
    assert mm.distance(p, q) == pytest.approx(oracle, abs=1e-12)


def test_distance_errors():
    p = S2.point([1.0, 0.0, 0.0])
    q = mm.Sphere(3).point([1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ManifoldMismatch):
        mm.distance(p, q)
    spd = SPD3.point(np.eye(3))
    with pytest.raises(UnsupportedMetric):
        mm.distance(spd, spd, mm.MetricKind.EXTRINSIC)
    sp = random_point(SHAPE5, np.random.default_rng(0))
    with pytest.raises(UnsupportedMetric):
        mm.distance(sp, sp, mm.MetricKind.EXTRINSIC)


def test_exp_zero_vector_is_identity(rng):
    for manifold in MANIFOLDS:
        p = random_point(manifold, rng)
        v = mm.project_tangent(p, np.zeros(manifold.ambient_shape))
        out = mm.exp(v)
        np.testing.assert_allclose(out.coords, p.coords, atol=1e-14)


def test_exp_quarter_circle():
    p = S2.point([1.0, 0.0, 0.0])
    v = S2.tangent(p, [0.0, math.pi / 2, 0.0])
    np.testing.assert_allclose(mm.exp(v).coords, [0.0, 1.0, 0.0], atol=1e-15)


def test_exp_spd_matches_expm_oracle():
    p = SPD3.point(np.eye(3))
    v = SPD3.tangent(p, np.diag([1.0, 0.0, 0.0]))
    oracle = scipy.linalg.expm(np.diag([1.0, 0.0, 0.0]))
    np.testing.assert_allclose(mm.exp(v).coords, oracle, atol=1e-12)


def test_exp_rejects_invalid_tangent():
    p = S2.point([1.0, 0.0, 0.0])
    with pytest.raises(InvalidTangent):
        mm.exp(mm.TangentVector(p, np.array([1.0, 1.0, 0.0])))
    with pytest.raises(InvalidTangent):
        mm.exp(mm.TangentVector(p, np.array([0.0, 3.5, 0.0])))  # beyond pi


def test_log_identity_is_zero(rng):
    for manifold in MANIFOLDS:
        p = random_point(manifold, rng)
        assert np.linalg.norm(mm.log(p, p).vec) < 1e-7


def test_log_sphere_orthogonal():
    p = S2.point([1.0, 0.0, 0.0])
    q = S2.point([0.0, 1.0, 0.0])
    np.testing.assert_allclose(mm.log(p, q).vec, [0.0, math.pi / 2, 0.0], atol=1e-15)


def test_log_spd_matches_logm_oracle():
    p = SPD3.point(np.eye(3))
    q = SPD3.point(np.diag([math.e**2, 1.0, 1.0]))
    oracle = scipy.linalg.logm(np.diag([math.e**2, 1.0, 1.0]))
    np.testing.assert_allclose(mm.log(p, q).vec, oracle, atol=1e-12)
    np.testing.assert_allclose(mm.log(p, q).vec, np.diag([2.0, 0.0, 0.0]), atol=1e-12)


def test_log_cut_locus():
    p = S2.point([1.0, 0.0, 0.0])
    with pytest.raises(CutLocus):
        mm.log(p, S2.point([-1.0, 0.0, 0.0]))
    # two shapes at the maximal shape distance pi/2: Hermitian product zero
    sq2 = 0.5  # orthonormal pair of centered representatives on 2 landmarks... use explicit 3-landmark pair
    shape = mm.PlanarShape(3)
    a = shape.point(shape.project_coords(np.array([1.0, 0, -1.0, 0, 0, 0])))
    b = shape.point(shape.project_coords(np.array([1.0, 0, 1.0, 0, -2.0, 0])))
    zh = np.sum((a.coords[0::2] + 1j * a.coords[1::2]) * np.conj(b.coords[0::2] + 1j * b.coords[1::2]))
    assert abs(zh) < 1e-12
    with pytest.raises(CutLocus):
        mm.log(a, b)


def test_inner_examples():
    p = SPD3.point(np.eye(3))
    u = SPD3.tangent(p, np.diag([1.0, 0.0, 0.0]))
    z = SPD3.tangent(p, np.zeros((3, 3)))
    assert mm.inner(u, z) == 0.0
    assert mm.inner(u, u) == pytest.approx(1.0, abs=1e-14)
    p4 = SPD3.point(np.diag([4.0, 1.0, 1.0]))
    u4 = SPD3.tangent(p4, np.diag([1.0, 0.0, 0.0]))
    # direct arithmetic: tr(p^-1 u p^-1 u) with p = diag(4,1,1), u = diag(1,0,0)
    direct = np.trace(np.diag([0.25, 1, 1]) @ np.diag([1.0, 0, 0]) @ np.diag([0.25, 1, 1]) @ np.diag([1.0, 0, 0]))
    assert direct == pytest.approx(1.0 / 16.0)
    assert mm.inner(u4, u4) == pytest.approx(1.0 / 16.0, abs=1e-14)


def test_inner_base_mismatch():
    p = S2.point([1.0, 0.0, 0.0])
    q = S2.point([0.0, 1.0, 0.0])
    u = S2.tangent(p, [0.0, 1.0, 0.0])
    v = S2.tangent(q, [1.0, 0.0, 0.0])
    with pytest.raises(BasePointMismatch):
        mm.inner(u, v)


def test_project_tangent_examples(rng):
    p = S2.point([1.0, 0.0, 0.0])
    np.testing.assert_allclose(mm.project_tangent(p, [3.0, 1.0, 0.0]).vec, [0.0, 1.0, 0.0], atol=1e-15)
    # already tangent: unchanged
    v = random_tangent(p, rng, 0.3)
    np.testing.assert_allclose(mm.project_tangent(p, v.vec).vec, v.vec, atol=1e-14)
    # rotation direction of the base shape projects to zero
    sp = random_point(SHAPE5, rng)
    z = sp.coords[0::2] + 1j * sp.coords[1::2]
    iz = 1j * z
    rot = np.empty(10)
    rot[0::2] = iz.real
    rot[1::2] = iz.imag
    assert np.linalg.norm(mm.project_tangent(sp, rot).vec) < 1e-12
    with pytest.raises(DimensionMismatch):
        mm.project_tangent(p, [1.0, 0.0])


def test_project_tangent_idempotent_and_self_adjoint(rng):
    for manifold in MANIFOLDS:
        p = random_point(manifold, rng)
        for _ in range(100):
            a = rng.standard_normal(manifold.ambient_shape)
            b = rng.standard_normal(manifold.ambient_shape)
            pa = p.manifold.project_tangent_coords(p.coords, a)
            pb = p.manifold.project_tangent_coords(p.coords, b)
            ppa = p.manifold.project_tangent_coords(p.coords, pa)
            assert np.linalg.norm(ppa - pa) < 1e-12
            assert np.vdot(pa, b) == pytest.approx(np.vdot(a, pb), abs=1e-10)


def test_project_to_manifold():
    np.testing.assert_allclose(
        mm.project_to_manifold(S2, [3.0, 4.0, 0.0]).coords, [0.6, 0.8, 0.0], atol=1e-15
    )
    p = S2.point([1.0, 0.0, 0.0])
    np.testing.assert_allclose(mm.project_to_manifold(S2, p.coords).coords, p.coords, atol=0)
    with pytest.raises(DegenerateInput):
        mm.project_to_manifold(S2, [0.0, 0.0, 0.0])
    with pytest.raises(DegenerateInput):
        mm.project_to_manifold(SPD3, -np.eye(3))


def test_point_validation():
    with pytest.raises(DegenerateInput):
        S2.point([1.0, 1.0, 0.0])
    with pytest.raises(DegenerateInput):
        SPD3.point(np.diag([1.0, 1.0, -0.5]))
    with pytest.raises(DegenerateInput):
        SHAPE5.point(np.ones(10))  # not centered
    with pytest.raises(DimensionMismatch):
        S2.point([1.0, 0.0])


# ---------------------------------------------------------------------------
# Metric invariants.
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("manifold", MANIFOLDS, ids=str)
def test_exp_log_roundtrip(manifold):
    rng = np.random.default_rng(7)
    radius = mm.spec_of(manifold).injectivity_radius
    cap = 0.9 * min(radius, math.pi)
    for _ in range(200):
        p = random_point(manifold, rng)
        v = random_tangent(p, rng, rng.uniform(1e-6, cap if math.isfinite(radius) else 2.5))
        q = mm.exp(v)
        back = mm.log(p, q)
        assert np.linalg.norm(back.vec - v.vec) <= 1e-7


@pytest.mark.parametrize("manifold", MANIFOLDS, ids=str)
def test_metric_compatibility(manifold):
    rng = np.random.default_rng(11)
    for _ in range(1000):
        p = random_point(manifold, rng)
        q = random_point(manifold, rng)
        d = mm.distance(p, q)
        if d >= 0.999 * mm.spec_of(manifold).injectivity_radius:
            continue
        v = mm.log(p, q)
        assert abs(manifold.norm_coords(p.coords, v.vec) - d) <= 1e-9


@pytest.mark.parametrize("manifold", MANIFOLDS, ids=str)
def test_distance_symmetry(manifold):
    rng = np.random.default_rng(13)
    for _ in range(300):
        p = random_point(manifold, rng)
        q = random_point(manifold, rng)
        assert abs(mm.distance(p, q) - mm.distance(q, p)) <= 1e-12


def test_chord_never_exceeds_arc():
    rng = np.random.default_rng(17)
    for _ in range(1000):
        p = random_point(S2, rng)
        q = random_point(S2, rng)
        assert mm.distance(p, q, mm.MetricKind.EXTRINSIC) <= mm.distance(p, q) + 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.floats(min_value=1e-3, max_value=2.8))
def test_sphere_roundtrip_hypothesis(seed, nrm):
    rng = np.random.default_rng(seed)
    p = random_point(S2, rng)
    v = random_tangent(p, rng, nrm)
    back = mm.log(p, mm.exp(v))
    assert np.linalg.norm(back.vec - v.vec) <= 1e-7


# ---------------------------------------------------------------------------
# Constant tables and Lipschitz witnesses.
# ---------------------------------------------------------------------------


def test_spec_tables():
    s = mm.spec_of(S2)
    assert (s.intrinsic_dim, s.ambient_dim) == (2, 3)
    assert s.log_lipschitz_constant == 2.0
    assert s.log_lipschitz_radius == pytest.approx(math.pi / 2)
    assert s.injectivity_radius == pytest.approx(math.pi)
    s = mm.spec_of(SPD3)
    assert (s.intrinsic_dim, s.ambient_dim) == (6, 9)
    assert s.log_lipschitz_constant == 1.0
    assert math.isinf(s.log_lipschitz_radius) and math.isinf(s.injectivity_radius)
    s = mm.spec_of(mm.PlanarShape(72))
    assert (s.intrinsic_dim, s.ambient_dim) == (140, 144)
    assert s.log_lipschitz_constant == 2.0
    assert s.log_lipschitz_radius == pytest.approx(math.pi / 4)


def test_lipschitz_witness_examples():
    p = S2.point([1.0, 0.0, 0.0])
    q1 = S2.point([0.0, 1.0, 0.0])
    q2 = S2.point([0.0, 0.0, 1.0])
    lhs, rhs = mm.lipschitz_witness(p, q1, q2)
    assert lhs == pytest.approx(math.pi / math.sqrt(2), abs=1e-12)
    assert rhs == pytest.approx(math.pi, abs=1e-12)
    assert lhs <= rhs

    same = mm.lipschitz_witness(p, q1, q1)
    assert same == (0.0, 0.0)

    i3 = SPD3.point(np.eye(3))
    s1 = SPD3.point(np.diag([math.e, 1.0, 1.0]))
    s2 = SPD3.point(np.diag([1.0, math.e, 1.0]))
    lhs, rhs = mm.lipschitz_witness(i3, s1, s2)
    assert lhs == pytest.approx(math.sqrt(2), abs=1e-12)
    assert rhs == pytest.approx(math.sqrt(2), abs=1e-12)
    assert lhs <= rhs + 1e-12


def test_lipschitz_witness_out_of_ball():
    p = S2.point([1.0, 0.0, 0.0])
    far = S2.point([-math.cos(0.2), math.sin(0.2), 0.0])
    with pytest.raises(OutOfBall):
        mm.lipschitz_witness(p, far, S2.point([0.0, 1.0, 0.0]))


# ---------------------------------------------------------------------------
# Coordinate helpers.
# ---------------------------------------------------------------------------


def test_sym_coords_roundtrip(rng):
    for _ in range(20):
        a = rng.standard_normal((3, 3))
        sym = 0.5 * (a + a.T)
        z = sym_matrix_to_coords(sym)
        assert z.shape == (6,)
        assert np.linalg.norm(z) == pytest.approx(np.linalg.norm(sym, "fro"), abs=1e-13)
        np.testing.assert_allclose(coords_to_sym_matrix(z, 3), sym, atol=1e-14)


def test_tangent_frame_orthonormal_and_tangent(rng):
    for manifold in (S2, mm.Sphere(7), SHAPE5):
        p = random_point(manifold, rng)
        frame = tangent_frame(p)
        assert frame.shape == (
            mm.spec_of(manifold).ambient_dim,
            mm.spec_of(manifold).intrinsic_dim,
        )
        gram = frame.T @ frame
        np.testing.assert_allclose(gram, np.eye(frame.shape[1]), atol=1e-12)
        for col in frame.T:
            proj = manifold.project_tangent_coords(p.coords, col)
            np.testing.assert_allclose(proj, col, atol=1e-10)
