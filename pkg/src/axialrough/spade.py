"""Spatial-mode demultiplexing in the radial Laguerre-Gauss basis.

Mode populations are linear in the even object moments, f = W theta, with W
upper triangular.  Counting photons per mode and averaging the W^-1 row for
theta_2 gives a roughness estimator whose variance tends to z_R^2, the
quantum limit, as the source spread shrinks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .direct_imaging import Target, target_gradient, require_centered_spread
from .errors import InvalidArgumentError
from .optics import OpticalConfig, geometric_ratio
from .sources import (
    MomentKind,
    MomentVector,
    SourceDistribution,
    axial_moment,
    mode_intensities_spade,
)

TAIL_TOLERANCE = 1e-14

__all__ = [
    "SpadeCrbReport",
    "w_matrix",
    "w_inverse",
    "d_matrix",
    "mode_truncation",
    "moment_truncation",
    "spade_moment_crb",
    "spade_moment_crb_product",
    "spade_roughness_crb",
    "spade_report",
    "spade_influence_function",
    "spade_influence_estimate",
    "histogram",
]


def _scale_powers(cfg: OpticalConfig, K: int, sign: float) -> np.ndarray:
    # (2 z_R)^(sign * 2k), built from logs so large K does not overflow midway
    k = np.arange(K + 1)
    return np.exp(sign * 2.0 * k * math.log(2.0 * cfg.rayleigh_range))


def w_matrix(cfg: OpticalConfig, K: int) -> np.ndarray:
    """[W]_qk = (-1)^(k-q) binom(k, q) / (2 z_R)^(2k)."""
    if K < 0:
        raise InvalidArgumentError(f"truncation must be nonnegative, got {K}")
    signed = np.array([[(-1) ** (k - q) * math.comb(k, q) for k in range(K + 1)]
                       for q in range(K + 1)], dtype=float)
    return signed * _scale_powers(cfg, K, -1.0)[None, :]


def w_inverse(cfg: OpticalConfig, K: int, n_modes: int | None = None) -> np.ndarray:
    """[W^-1]_kq = (2 z_R)^(2k) binom(q, k), rows k = 0..K, columns q = 0..n_modes.

    Square and upper triangular when ``n_modes`` equals ``K`` (the default).
    A wider block is what maps a full mode histogram onto moments.
    """
    if K < 0:
        raise InvalidArgumentError(f"truncation must be nonnegative, got {K}")
    n_modes = K if n_modes is None else n_modes
    binom = np.array([[math.comb(q, k) for q in range(n_modes + 1)]
                      for k in range(K + 1)], dtype=float)
    return _scale_powers(cfg, K, 1.0)[:, None] * binom


def d_matrix(f: MomentVector, Q: int | None = None) -> np.ndarray:
    """Categorical covariance diag(f) - f f^T over modes 0..Q."""
    if f.kind is not MomentKind.MODE_F:
        raise InvalidArgumentError(f"expected mode intensities, got {f.kind.value}")
    Q = f.order if Q is None else Q
    if Q > f.order:
        raise InvalidArgumentError(f"need f up to mode {Q}, have {f.order}")
    fq = f.values[: Q + 1]
    return np.diag(fq) - np.outer(fq, fq)


def mode_truncation(dist: SourceDistribution, cfg: OpticalConfig,
                    tol: float = TAIL_TOLERANCE) -> int:
    """Smallest Q with sum_i p_i xi_i^(Q+1) below ``tol``."""
    xi = geometric_ratio(dist.z(), cfg)
    p = dist.p()
    active = (p > 0) & (xi > 0)
    if not np.any(active):
        return 0
    # per-source bound p xi^(Q+1) < tol / N, which caps the sum
    need = (np.log(tol / dist.size) - np.log(p[active])) / np.log(xi[active]) - 1.0
    Q = max(int(math.ceil(need.max())), 0)
    while math.fsum(p * xi ** (Q + 1)) >= tol:
        Q += 1
    while Q > 0 and math.fsum(p * xi ** Q) < tol:
        Q -= 1
    return Q


def moment_truncation(dist: SourceDistribution, cfg: OpticalConfig, K: int,
                      tol: float = TAIL_TOLERANCE) -> int:
    """Mode cutoff for order-K moment covariances.

    Mode q enters [W^-1 D W^-T]_KK with weight f_q (2 z_R)^(4K) binom(q, K)^2,
    which grows with q long after f_q alone is negligible. Terms are compared
    in log space and summation stops once they fall below ``tol`` relative to
    the running total and keep shrinking.
    """
    Q0 = max(mode_truncation(dist, cfg, tol), K)
    xi = geometric_ratio(dist.z(), cfg)
    p = dist.p()
    active = (p > 0) & (xi > 0)
    if not np.any(active):
        return Q0
    log_pf = np.log(p[active]) + np.log1p(-xi[active])
    log_xi = np.log(xi[active])
    log_scale = 4.0 * K * math.log(2.0 * cfg.rayleigh_range)

    def log_term(q):
        log_binom = math.lgamma(q + 1) - math.lgamma(K + 1) - math.lgamma(q - K + 1)
        return float(np.logaddexp.reduce(log_pf + q * log_xi)) + 2.0 * log_binom + log_scale

    log_total = -math.inf
    q = K
    previous = math.inf
    while True:
        current = log_term(q)
        log_total = np.logaddexp(log_total, current)
        if q >= Q0 and current < previous and current - log_total < math.log(tol):
            return q
        previous = current
        q += 1


def spade_moment_crb(dist: SourceDistribution, cfg: OpticalConfig, K: int) -> np.ndarray:
    """Closed-form asymptotic covariance of the even-moment estimators, i, j = 0..K.

    [V]_ij = sum_{k <= min(i,j)} binom(i+j-k, j) binom(j, k) (2 z_R)^(2k) theta_{2(i+j-k)}
             - theta_{2i} theta_{2j}
    """
    if K < 0:
        raise InvalidArgumentError(f"truncation must be nonnegative, got {K}")
    theta = [axial_moment(dist, 2 * l) for l in range(2 * K + 1)]
    scale = _scale_powers(cfg, K, 1.0)
    v = np.empty((K + 1, K + 1))
    for i in range(K + 1):
        for j in range(i, K + 1):
            acc = math.fsum(math.comb(i + j - k, j) * math.comb(j, k) * scale[k] * theta[i + j - k]
                            for k in range(min(i, j) + 1))
            v[i, j] = v[j, i] = acc - theta[i] * theta[j]
    return v


def spade_moment_crb_product(dist: SourceDistribution, cfg: OpticalConfig, K: int,
                             n_modes: int | None = None) -> np.ndarray:
    """The same covariance evaluated as W^-1 D W^-T over a finite set of modes."""
    Q = moment_truncation(dist, cfg, K) if n_modes is None else max(n_modes, K)
    f = mode_intensities_spade(dist, cfg, Q)
    winv = w_inverse(cfg, K, Q)
    v = winv @ d_matrix(f, Q) @ winv.T
    return 0.5 * (v + v.T)


def spade_roughness_crb(dist: SourceDistribution, cfg: OpticalConfig) -> float:
    """z_R^2 + theta_4 / (2 theta_2) - theta_2 / 4 for a centered distribution."""
    sigma = require_centered_spread(dist)
    return float(spade_moment_crb(dist, cfg, 1)[1, 1] / (4.0 * sigma**2))


def _outcome_weights(grad: np.ndarray, cfg: OpticalConfig, n_modes: int) -> np.ndarray:
    return grad @ w_inverse(cfg, len(grad) - 1, n_modes)


def spade_influence_function(q, dist0: SourceDistribution, cfg: OpticalConfig,
                             target: Target | str = Target.ROUGHNESS, K: int = 1) -> np.ndarray:
    """Influence function at mode outcomes ``q``.

    The centering term uses W^-1 f_0 = theta_0, which holds exactly for the
    untruncated mode vector.
    """
    _, grad = target_gradient(dist0, target, K)
    q = np.asarray(q, dtype=int)
    weights = _outcome_weights(grad, cfg, int(q.max(initial=0)))
    theta0 = np.array([axial_moment(dist0, 2 * k) for k in range(K + 1)])
    return weights[q] - grad @ theta0


def histogram(q_samples, n_modes: int) -> tuple[np.ndarray, int]:
    """Counts for modes 0..n_modes plus the number of outcomes beyond them."""
    q_samples = np.asarray(q_samples, dtype=np.int64)
    counts = np.bincount(q_samples, minlength=n_modes + 1)
    return counts[: n_modes + 1], int(counts[n_modes + 1:].sum())


def spade_influence_estimate(counts, dist0: SourceDistribution, cfg: OpticalConfig,
                             target: Target | str = Target.ROUGHNESS, K: int = 1,
                             linearized: bool = True) -> float:
    """Estimate from a mode histogram ``counts[q]``.

    With ``linearized=False`` and a roughness target, returns the plug-in
    sqrt(max(theta2_hat, 0)) instead of the affine update around sigma_0.
    """
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if counts.ndim != 1 or total <= 0:
        raise InvalidArgumentError("histogram is empty")
    if np.any(counts < 0):
        raise InvalidArgumentError("histogram counts must be nonnegative")
    target = Target(target)
    beta0, grad = target_gradient(dist0, target, K)
    theta0 = np.array([axial_moment(dist0, 2 * k) for k in range(K + 1)])
    weights = _outcome_weights(grad, cfg, len(counts) - 1)
    shift = float(weights @ counts / total - grad @ theta0)
    if target is Target.ROUGHNESS and not linearized:
        theta2_hat = theta0[1] + shift * 2.0 * beta0
        return math.sqrt(max(theta2_hat, 0.0))
    return beta0 + shift


@dataclass(frozen=True)
class SpadeCrbReport:
    order: int
    modes: int
    w_matrix: np.ndarray
    w_inverse: np.ndarray
    d_matrix: np.ndarray
    moment_crb: np.ndarray
    roughness_crb: float

    def to_dict(self) -> dict:
        return {
            "order": self.order,
            "modes": self.modes,
            "layout": "row-major",
            "w_matrix": self.w_matrix.tolist(),
            "w_inverse": self.w_inverse.tolist(),
            "d_matrix": self.d_matrix.tolist(),
            "moment_crb": self.moment_crb.tolist(),
            "roughness_crb": self.roughness_crb,
        }


def spade_report(dist: SourceDistribution, cfg: OpticalConfig, K: int = 1) -> SpadeCrbReport:
    Q = max(mode_truncation(dist, cfg), K)
    return SpadeCrbReport(
        order=K,
        modes=Q,
        w_matrix=w_matrix(cfg, K),
        w_inverse=w_inverse(cfg, K),
        d_matrix=d_matrix(mode_intensities_spade(dist, cfg, Q)),
        moment_crb=spade_moment_crb(dist, cfg, K),
        roughness_crb=spade_roughness_crb(dist, cfg),
    )
