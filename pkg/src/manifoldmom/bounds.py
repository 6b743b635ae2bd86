"""Closed-form deviation constants and probability bounds.

The inflation constants relating the deviation of a geometric median to the
fraction of deviant subset estimators, the Bernoulli-KL exponent driving the
exponential concentration of the aggregated estimator, Chebyshev bounds on a
single subset estimator's deviation, and the geodesic distribution function
of the von Mises-Fisher law used to size confidence regions.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import DomainError, InadmissibleAlpha, VacuousBound


def alpha_upper_bound(psi_bar: float) -> float:
    """Largest admissible alpha for the extrinsic constant at angle psi_bar.

    Equals cot(psi) tan(psi/2) = cos(psi) / (1 + cos(psi)); tends to 1/2 as
    the worst-case angle tends to zero.
    """
    if not 0.0 <= psi_bar < math.pi / 2:
        raise DomainError("psi_bar must lie in [0, pi/2)")
    c = math.cos(psi_bar)
    return c / (1.0 + c)


def c_alpha_extrinsic(alpha: float, psi_bar: float) -> float:
    """Deviation constant (1-a) / (sqrt(1-2a) cos(psi) - a sin(psi)).

    ``psi_bar`` is the worst-case angle between chords from the median and
    the tangent space of the embedded manifold there; it is caller-supplied.
    """
    hi = alpha_upper_bound(psi_bar)
    if not 0.0 < alpha < hi:
        raise InadmissibleAlpha(f"alpha must lie in (0, {hi:.6g}) for psi_bar={psi_bar:.6g}")
    denom = math.sqrt(1.0 - 2.0 * alpha) * math.cos(psi_bar) - alpha * math.sin(psi_bar)
    if denom <= 0.0:
        raise InadmissibleAlpha("denominator is not positive")
    return (1.0 - alpha) / denom


def c_alpha_intrinsic(alpha: float, lipschitz_constant: float) -> float:
    """Deviation constant K (1-a) sqrt(1/(1-2a)) for a K-Lipschitz log map."""
    if not 0.0 < alpha < 0.5:
        raise InadmissibleAlpha("alpha must lie in (0, 1/2)")
    if lipschitz_constant < 1.0:
        raise DomainError("the Lipschitz constant must be at least 1")
    return lipschitz_constant * (1.0 - alpha) / math.sqrt(1.0 - 2.0 * alpha)


def phi(alpha: float, eta: float) -> float:
    """Chernoff exponent: KL divergence between Bernoulli(alpha) and Bernoulli(eta)."""
    if not 0.0 < eta < alpha < 1.0:
        raise DomainError("need 0 < eta < alpha < 1")
    return (1.0 - alpha) * math.log((1.0 - alpha) / (1.0 - eta)) + alpha * math.log(alpha / eta)


def theorem_bound(m: int, alpha: float, eta: float) -> float:
    """exp(-m phi(alpha, eta)): tail bound on the aggregated estimator's deviation."""
    if m < 1:
        raise DomainError("m must be at least 1")
    return math.exp(-m * phi(alpha, eta))


def _eta_clamp(value: float) -> float:
    if value >= 1.0:
        warnings.warn("Chebyshev bound exceeds one and is vacuous", VacuousBound, stacklevel=3)
        return 1.0
    return value


def eta_chebyshev_extrinsic(epsilon: float, m: int, n: int, second_moment: float) -> float:
    """Chebyshev bound (4/eps^2)(m/n) E rho^2 on a subset estimator's deviation."""
    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    if not 1 <= m <= n:
        raise DomainError("need 1 <= m <= n")
    if second_moment < 0.0:
        raise DomainError("the second moment must be nonnegative")
    return _eta_clamp(4.0 / epsilon**2 * (m / n) * second_moment)


def eta_chebyshev_intrinsic(
    epsilon: float, m: int, n: int, lipschitz_constant: float, second_moment: float
) -> float:
    """Chebyshev bound (K^2/eps^2)(m/n) E d_g^2 on a subset estimator's deviation."""
    if epsilon <= 0.0:
        raise DomainError("epsilon must be positive")
    if not 1 <= m <= n:
        raise DomainError("need 1 <= m <= n")
    if lipschitz_constant < 1.0:
        raise DomainError("the Lipschitz constant must be at least 1")
    if second_moment < 0.0:
        raise DomainError("the second moment must be nonnegative")
    return _eta_clamp(lipschitz_constant**2 / epsilon**2 * (m / n) * second_moment)


# ---------------------------------------------------------------------------
# von Mises-Fisher geodesic distribution on S^d.
# ---------------------------------------------------------------------------


def _vmf_radial_density(kappa: float, d: int):
    # Scaled by exp(-kappa); the factor cancels in the CDF ratio and keeps
    # the integrand bounded for large kappa.
    return lambda theta: math.exp(kappa * (math.cos(theta) - 1.0)) * math.sin(theta) ** (d - 1)


def _vmf_integrate(f, lo, hi, kappa):
    # hint the quadrature at the concentration scale so large kappa stays cheap
    pts = [p for p in (1.0 / math.sqrt(kappa), 8.0 / math.sqrt(kappa)) if lo < p < hi]
    val, _ = quad(f, lo, hi, points=pts or None, epsabs=1e-14, epsrel=1e-12, limit=200)
    return val


def vmf_geodesic_cdf(epsilon: float, kappa: float, d: int) -> float:
    """P(d_g(x, mu) <= epsilon) for x ~ vMF(mu, kappa) on S^d.

    Ratio of the integrals of exp(kappa cos t) sin^{d-1} t over [0, epsilon]
    and [0, pi], evaluated by adaptive quadrature; the normalizing constant
    of the density cancels.
    """
    if not 0.0 <= epsilon <= math.pi:
        raise DomainError("epsilon must lie in [0, pi]")
    if kappa <= 0.0:
        raise DomainError("kappa must be positive")
    if d < 2:
        raise DomainError("d must be at least 2")
    if epsilon == 0.0:
        return 0.0
    f = _vmf_radial_density(kappa, d)
    total = _vmf_integrate(f, 0.0, math.pi, kappa)
    if epsilon == math.pi:
        return 1.0
    return min(_vmf_integrate(f, 0.0, epsilon, kappa) / total, 1.0)


def _vmf_cdf_s2_closed(epsilon: float, kappa: float) -> float:
    """Closed form on S^2, used as an internal cross-check of the quadrature:
    (e^kappa - e^{kappa cos eps}) / (e^kappa - e^{-kappa})."""
    num = -math.expm1(kappa * (math.cos(epsilon) - 1.0))
    den = -math.expm1(-2.0 * kappa)
    return num / den


def vmf_confidence_radius(level: float, kappa: float, d: int) -> float:
    """Geodesic radius of the symmetric confidence region of mass ``level``.

    Root of ``vmf_geodesic_cdf(r) = level`` by bracketing bisection; the
    round trip through the CDF holds to 1e-9.
    """
    if not 0.0 < level < 1.0:
        raise DomainError("level must lie in (0, 1)")
    if kappa <= 0.0:
        raise DomainError("kappa must be positive")
    if d < 2:
        raise DomainError("d must be at least 2")
    f = _vmf_radial_density(kappa, d)
    total = _vmf_integrate(f, 0.0, math.pi, kappa)

    def shifted(r):
        return _vmf_integrate(f, 0.0, r, kappa) / total - level

    return float(brentq(shifted, 1e-12, math.pi - 1e-12, xtol=1e-12, rtol=1e-15))


def monte_carlo_second_moment(distances: np.ndarray) -> float:
    """Plain Monte-Carlo estimate of E rho^2 from sampled distances."""
    d = np.asarray(distances, dtype=float)
    if d.size == 0:
        raise DomainError("need at least one sampled distance")
    return float(np.mean(d * d))
