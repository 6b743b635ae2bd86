"""Shared fixtures and the acceptance summary hook."""

import numpy as np
import pytest

from manifoldmom.geometry import PlanarShape, SPD, Sphere, project_to_manifold

# (criterion id, passed, detail) triples recorded by tests/test_acceptance.py
ACCEPTANCE_RESULTS = []


def record_acceptance(criterion: str, passed: bool, detail: str = ""):
    ACCEPTANCE_RESULTS.append((criterion, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for criterion, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        status = "PASS" if passed else "FAIL"
        line = f"ACCEPTANCE {criterion}: {status}"
        if detail:
            line += f" - {detail}"
        terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# Random point factories.
# ---------------------------------------------------------------------------


def random_sphere_point(manifold: Sphere, rng) -> "ManifoldPoint":
    v = rng.standard_normal(manifold.dim + 1)
    return project_to_manifold(manifold, v)


def random_shape_point(manifold: PlanarShape, rng) -> "ManifoldPoint":
    v = rng.standard_normal(2 * manifold.landmarks)
    return project_to_manifold(manifold, v)


def random_spd_point(manifold: SPD, rng, scale: float = 0.7) -> "ManifoldPoint":
    a = scale * rng.standard_normal((manifold.size, manifold.size))
    sym = 0.5 * (a + a.T)
    w, u = np.linalg.eigh(sym)
    return manifold.point((u * np.exp(w)) @ u.T)


def random_point(manifold, rng):
    if isinstance(manifold, Sphere):
        return random_sphere_point(manifold, rng)
    if isinstance(manifold, PlanarShape):
        return random_shape_point(manifold, rng)
    return random_spd_point(manifold, rng)


def random_tangent(point, rng, norm: float):
    """Tangent vector at ``point`` with the requested metric norm."""
    from manifoldmom.geometry import project_tangent

    m = point.manifold
    if isinstance(m, SPD):
        a = rng.standard_normal(m.ambient_shape)
    else:
        a = rng.standard_normal(m.ambient_shape)
    v = project_tangent(point, 0.5 * (a + a.T) if isinstance(m, SPD) else a)
    current = m.norm_coords(point.coords, v.vec)
    return type(v)(point, v.vec * (norm / current))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
