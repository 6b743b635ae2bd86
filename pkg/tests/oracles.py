"""Independent brute-force oracles for the estimator tests.

These deliberately avoid the library's geometry code paths: distances are
written out directly (scipy.linalg matrix functions for SPD, plain
arccos formulas for sphere and shape), and optimization is multi-start
quasi-Newton over an unconstrained ambient parameterization.
"""

import numpy as np
import scipy.linalg
from scipy.optimize import minimize


def sphere_geodesic(u, p):
    return np.arccos(np.clip(u @ p, -1.0, 1.0))


def shape_geodesic(u, p):
    zu = u[0::2] + 1j * u[1::2]
    zp = p[0::2] + 1j * p[1::2]
    return np.arccos(min(abs(np.sum(zu * np.conj(zp))), 1.0))


def spd_geodesic(a, b):
    root = scipy.linalg.sqrtm(a)
    inv_root = np.linalg.inv(root)
    middle = inv_root @ b @ inv_root
    return np.linalg.norm(scipy.linalg.logm(0.5 * (middle + middle.T)), "fro")


def _multistart(objective, starts, tol=1e-12):
    best = None
    for x0 in starts:
        res = minimize(objective, x0, method="L-BFGS-B",
                       options={"ftol": tol, "gtol": 1e-12, "maxiter": 2000})
        if best is None or res.fun < best.fun:
            best = res
    return best


def sphere_minimizer(points, power):
    """argmin over the sphere of sum of geodesic distances**power."""
    pts = np.stack(points)

    def objective(u):
        un = u / np.linalg.norm(u)
        return float(np.sum(np.arccos(np.clip(pts @ un, -1.0, 1.0)) ** power))

    starts = [p * 1.0 for p in pts] + [pts.mean(axis=0)]
    res = _multistart(objective, starts)
    u = res.x / np.linalg.norm(res.x)
    return u, res.fun / len(points)


def sphere_chordal_minimizer(points):
    """argmin over the sphere of the summed chordal distances."""
    pts = np.stack(points)

    def objective(u):
        un = u / np.linalg.norm(u)
        return float(np.sum(np.linalg.norm(pts - un, axis=1)))

    starts = [p * 1.0 for p in pts] + [pts.mean(axis=0)]
    res = _multistart(objective, starts)
    u = res.x / np.linalg.norm(res.x)
    return u, res.fun / len(points)


def shape_minimizer(points, power):
    """argmin over the planar shape space, parameterized by raw landmarks."""
    pts = np.stack(points)

    def normalize(u):
        z = u[0::2] + 1j * u[1::2]
        z = z - z.mean()
        z = z / np.linalg.norm(z)
        out = np.empty_like(u)
        out[0::2] = z.real
        out[1::2] = z.imag
        return out

    def objective(u):
        un = normalize(u)
        zu = un[0::2] + 1j * un[1::2]
        zp = pts[:, 0::2] + 1j * pts[:, 1::2]
        mods = np.abs(zp.conj() @ zu)
        return float(np.sum(np.arccos(np.minimum(mods, 1.0)) ** power))

    starts = [p * 1.0 for p in pts]
    res = _multistart(objective, starts)
    return normalize(res.x), res.fun / len(points)


def spd_minimizer(points, power):
    """argmin over SPD matrices, parameterized as expm of a symmetric matrix."""
    n = points[0].shape[0]
    iu = np.triu_indices(n)

    def unpack(z):
        sym = np.zeros((n, n))
        sym[iu] = z
        sym = sym + sym.T - np.diag(np.diag(sym))
        return scipy.linalg.expm(sym)

    def pack(mat):
        logm = scipy.linalg.logm(mat)
        return np.real(0.5 * (logm + logm.T))[iu]

    def objective(z):
        x = unpack(z)
        return float(sum(spd_geodesic(x, p) ** power for p in points))

    starts = [pack(p) for p in points]
    res = _multistart(objective, starts, tol=1e-14)
    return unpack(res.x), res.fun / len(points)


def frobenius_median_oracle(matrices):
    """Convex-solver geometric median of vectorized matrices."""
    import cvxpy as cp

    stack = np.stack([m.reshape(-1) for m in matrices])
    x = cp.Variable(stack.shape[1])
    objective = cp.Minimize(cp.sum(cp.norm(stack - cp.reshape(x, (1, -1), order="C"), axis=1)))
    prob = cp.Problem(objective)
    prob.solve(solver=cp.CLARABEL)
    side = matrices[0].shape[0]
    return np.asarray(x.value).reshape(side, side), prob.value / len(matrices)
