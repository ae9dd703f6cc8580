"""Direct imaging: moment transfer, influence-function estimator, and its CRB.

The camera sees only even radial moments of the image, phi = C theta, with C
lower triangular in the even object moments.  The roughness estimator built
from the first row pair of C^-1 has an asymptotic variance that grows as
1/sigma^2, so direct imaging cannot resolve sub-diffraction roughness.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, SingularParametrizationError, UnidentifiableError
from .optics import OpticalConfig
from .sources import (
    MomentKind,
    MomentVector,
    SourceDistribution,
    axial_moment,
    image_moments_di,
    roughness,
)

CENTERING_TOLERANCE = 1e-9

__all__ = [
    "Target",
    "DiCrbReport",
    "c_matrix",
    "c_inverse",
    "u_matrix",
    "di_moment_crb",
    "di_roughness_crb",
    "di_report",
    "di_influence_function",
    "di_influence_estimate",
    "require_centered_spread",
    "target_gradient",
]


class Target(str, enum.Enum):
    ROUGHNESS = "roughness"
    THETA2 = "theta2"
    MEAN_HEIGHT = "mean-height-noop"


def _check_order(K: int) -> None:
    if K < 0:
        raise InvalidArgumentError(f"truncation must be nonnegative, got {K}")


def c_matrix(cfg: OpticalConfig, K: int) -> np.ndarray:
    """[C]_ij = i! (w0^2/2)^i binom(i, j) / z_R^(2j), for i, j = 0..K."""
    _check_order(K)
    half_w2 = cfg.omega0**2 / 2.0
    rows = np.array([math.factorial(i) * half_w2**i for i in range(K + 1)])
    cols = np.array([cfg.rayleigh_range ** (-2 * j) for j in range(K + 1)])
    pascal = np.array([[math.comb(i, j) for j in range(K + 1)] for i in range(K + 1)], dtype=float)
    return rows[:, None] * pascal * cols[None, :]


def c_inverse(cfg: OpticalConfig, K: int) -> np.ndarray:
    """[C^-1]_ij = (-1)^(i-j) binom(i, j) (2/w0^2)^j / j! * z_R^(2i).

    Lower triangular, like C itself.
    """
    _check_order(K)
    two_over_w2 = 2.0 / cfg.omega0**2
    rows = np.array([cfg.rayleigh_range ** (2 * i) for i in range(K + 1)])
    cols = np.array([two_over_w2**j / math.factorial(j) for j in range(K + 1)])
    signed = np.array([[(-1) ** (i - j) * math.comb(i, j) for j in range(K + 1)]
                       for i in range(K + 1)], dtype=float)
    return rows[:, None] * signed * cols[None, :]


def u_matrix(phi0: MomentVector, K: int) -> np.ndarray:
    """Covariance of (r^0, r^2, ..., r^2K) under the reference image density."""
    _check_order(K)
    if phi0.kind is not MomentKind.IMAGE_PHI:
        raise InvalidArgumentError(f"expected image moments, got {phi0.kind.value}")
    if phi0.order < 2 * K:
        raise InvalidArgumentError(
            f"U of order {K} needs image moments up to phi_{4 * K}, have phi_{2 * phi0.order}")
    phi = phi0.values
    idx = np.arange(K + 1)
    u = phi[idx[:, None] + idx[None, :]] - np.outer(phi[: K + 1], phi[: K + 1])
    return 0.5 * (u + u.T)


def di_moment_crb(dist0: SourceDistribution, cfg: OpticalConfig, K: int) -> np.ndarray:
    """Asymptotic covariance C^-1 U C^-T of the even-moment estimators."""
    if K < 1:
        raise InvalidArgumentError(f"moment CRB needs K >= 1, got {K}")
    phi0 = image_moments_di(dist0, cfg, 2 * K)
    cinv = c_inverse(cfg, K)
    v = cinv @ u_matrix(phi0, K) @ cinv.T
    return 0.5 * (v + v.T)


def require_centered_spread(dist: SourceDistribution) -> float:
    """Return sigma for a centered distribution or raise.

    Both channels only see even moments, so roughness is taken as sqrt(theta_2)
    with the mean pinned to zero.
    """
    sigma = roughness(dist)
    if sigma == 0.0:
        raise SingularParametrizationError(
            "roughness is zero: d(sigma)/d(theta_2) = 1/(2 sigma) is undefined")
    mean = axial_moment(dist, 1)
    if abs(mean) > CENTERING_TOLERANCE * sigma:
        raise InvalidArgumentError(
            f"distribution must be centered (theta_1 = 0), got theta_1 = {mean!r}")
    return sigma


def di_roughness_crb(dist0: SourceDistribution, cfg: OpticalConfig) -> float:
    """Asymptotic rescaled variance of the direct-imaging roughness estimator.

    Equals z_R^4 (phi_4 - phi_2^2) / sigma^2 for w0 = 1.
    """
    sigma = require_centered_spread(dist0)
    return float(di_moment_crb(dist0, cfg, 1)[1, 1] / (4.0 * sigma**2))


def target_gradient(dist0: SourceDistribution, target: Target, K: int) -> tuple[float, np.ndarray]:
    """Reference value beta_0 and its gradient with respect to (theta_0, theta_2, ...)."""
    target = Target(target)
    grad = np.zeros(K + 1)
    if target is Target.MEAN_HEIGHT:
        raise UnidentifiableError(
            "mean height is unidentifiable: the channel only reveals even axial moments")
    if K < 1:
        raise InvalidArgumentError(f"estimator needs K >= 1, got {K}")
    theta2 = axial_moment(dist0, 2)
    if target is Target.THETA2:
        grad[1] = 1.0
        return theta2, grad
    sigma = require_centered_spread(dist0)
    grad[1] = 1.0 / (2.0 * sigma)
    return sigma, grad


def di_influence_function(r, dist0: SourceDistribution, cfg: OpticalConfig,
                          target: Target | str = Target.ROUGHNESS, K: int = 1) -> np.ndarray:
    """Influence function evaluated at radial detections ``r``."""
    _, grad = target_gradient(dist0, target, K)
    coef = grad @ c_inverse(cfg, K)
    phi0 = image_moments_di(dist0, cfg, K).values
    r2 = np.asarray(r, dtype=float) ** 2
    return np.polynomial.polynomial.polyval(r2, coef) - coef @ phi0


def di_influence_estimate(samples, dist0: SourceDistribution, cfg: OpticalConfig,
                          target: Target | str = Target.ROUGHNESS, K: int = 1) -> float:
    """beta_hat = beta_0 + mean influence over detected radii."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise InvalidArgumentError("no detections to estimate from")
    beta0, grad = target_gradient(dist0, target, K)
    coef = grad @ c_inverse(cfg, K)
    phi0 = image_moments_di(dist0, cfg, K).values
    r2 = samples**2
    power_means = np.empty(K + 1)
    power = np.ones_like(r2)
    for j in range(K + 1):
        power_means[j] = power.mean()
        power = power * r2
    return float(beta0 + coef @ (power_means - phi0))


@dataclass(frozen=True)
class DiCrbReport:
    order: int
    c_matrix: np.ndarray
    c_inverse: np.ndarray
    u_matrix: np.ndarray
    moment_crb: np.ndarray
    roughness_crb: float

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "layout": "row-major",
            "c_matrix": self.c_matrix.tolist(),
            "c_inverse": self.c_inverse.tolist(),
            "u_matrix": self.u_matrix.tolist(),
            "moment_crb": self.moment_crb.tolist(),
            "roughness_crb": self.roughness_crb,
        }


def di_report(dist0: SourceDistribution, cfg: OpticalConfig, K: int = 1) -> DiCrbReport:
    phi0 = image_moments_di(dist0, cfg, 2 * K)
    return DiCrbReport(
        order=K,
        c_matrix=c_matrix(cfg, K),
        c_inverse=c_inverse(cfg, K),
        u_matrix=u_matrix(phi0, K),
        moment_crb=di_moment_crb(dist0, cfg, K),
        roughness_crb=di_roughness_crb(dist0, cfg),
    )
