"""Quantum Fisher information for axial source displacements.

The photon state is the mixture sum_j p_j |psi_{z_j}><psi_{z_j}|, produced by
Kraus operators sqrt(p_j) exp(-i z_j G) acting on the focused field.  The QFI
matrix follows from the trace norm of the metrology matrix
M_ij = Tr[K_i(z)^dag K_j(z + dz) rho_0] via dz^T K dz = 8 (1 - ||M||_1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, SingularParametrizationError
from .optics import OpticalConfig, field_overlap, generator_variance
from .sources import SourceDistribution, axial_moment, roughness

JACOBIAN_CONDITION_LIMIT = 1e12

__all__ = [
    "QfiReport",
    "metrology_matrix",
    "trace_norm",
    "metrology_matrix_qfi",
    "qfi_displacements_closed_form",
    "moment_jacobian",
    "inverse_qfi_moments",
    "quantum_bound_mean",
    "quantum_bound_roughness",
    "qfi_report",
]


def metrology_matrix(dist: SourceDistribution, cfg: OpticalConfig, dz) -> np.ndarray:
    """M_ij = sqrt(p_i p_j) <psi_{z_i} | psi_{z_j + dz_j}>."""
    z = dist.z()
    dz = np.broadcast_to(np.asarray(dz, dtype=float), z.shape)
    sqrt_p = np.sqrt(dist.p())
    return np.outer(sqrt_p, sqrt_p) * field_overlap(z[:, None], (z + dz)[None, :], cfg)


def trace_norm(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False).sum())


def metrology_matrix_qfi(dist: SourceDistribution, cfg: OpticalConfig,
                         dz: float = 1e-4) -> np.ndarray:
    """Numerical QFI matrix in the source-position parameters.

    Diagonal entries come from probing each coordinate direction, off-diagonal
    ones from the pair directions e_i + e_j by polarization.
    """
    if not dz > 0:
        raise InvalidArgumentError(f"finite-difference step must be positive, got {dz}")
    n = dist.size

    def quad_form(direction: np.ndarray) -> float:
        return 8.0 * (1.0 - trace_norm(metrology_matrix(dist, cfg, dz * direction))) / dz**2

    eye = np.eye(n)
    diag = np.array([quad_form(eye[i]) for i in range(n)])
    qfi = np.diag(diag)
    for i in range(n):
        for j in range(i + 1, n):
            pair = quad_form(eye[i] + eye[j])
            qfi[i, j] = qfi[j, i] = 0.5 * (pair - diag[i] - diag[j])
    return qfi


def qfi_displacements_closed_form(dist: SourceDistribution, cfg: OpticalConfig) -> np.ndarray:
    """Leading-order QFI matrix 4 Var(G) diag(p) for sources near focus."""
    return 4.0 * generator_variance(cfg) * np.diag(dist.p())


def moment_jacobian(dist: SourceDistribution, K: int) -> np.ndarray:
    """J_ij = d theta_j / d z_i = j p_i z_i^(j-1) for j = 1..K."""
    z, p = dist.z(), dist.p()
    j = np.arange(1, K + 1)
    return j[None, :] * p[:, None] * z[:, None] ** (j[None, :] - 1)


def inverse_qfi_moments(dist: SourceDistribution, cfg: OpticalConfig, K: int,
                        method: str = "closed-form") -> np.ndarray:
    """Inverse QFI matrix for the moments theta_1..theta_K near focus.

    ``method="closed-form"`` gives [K^-1]_ij = i j theta_{i+j-2} / (4 Var(G)).
    ``method="jacobian"`` pushes the inverse position QFI through J^T K^-1 J and
    needs as many sources as moments; a singular Jacobian (coincident
    positions) falls back to the closed form with a warning.
    """
    if K < 1:
        raise InvalidArgumentError(f"need at least one moment, got K={K}")
    scale = 4.0 * generator_variance(cfg)
    if method == "jacobian":
        if dist.size != K:
            raise InvalidArgumentError(
                f"jacobian route needs N == K, got N={dist.size}, K={K}")
        jac = moment_jacobian(dist, K)
        if np.linalg.cond(jac) > JACOBIAN_CONDITION_LIMIT or np.any(dist.p() == 0):
            warnings.warn("moment Jacobian is singular; using the closed form",
                          RuntimeWarning, stacklevel=2)
        else:
            kinv = np.diag(1.0 / dist.p()) / scale
            out = jac.T @ kinv @ jac
            return 0.5 * (out + out.T)
    elif method != "closed-form":
        raise InvalidArgumentError(f"unknown method {method!r}")
    theta = [axial_moment(dist, l) for l in range(2 * K - 1)]
    idx = np.arange(1, K + 1)
    table = np.array(theta)[idx[:, None] + idx[None, :] - 2]
    return np.outer(idx, idx) * table / scale


def quantum_bound_mean(cfg: OpticalConfig) -> float:
    """Quantum limit on the rescaled variance of the mean height: 1/(4 Var(G))."""
    return 1.0 / (4.0 * generator_variance(cfg))


def quantum_bound_roughness(dist: SourceDistribution, cfg: OpticalConfig) -> float:
    """Quantum limit for sigma via the chain rule through (theta_1, theta_2)."""
    sigma = roughness(dist)
    if sigma == 0.0:
        raise SingularParametrizationError(
            "roughness is zero: d(sigma)/d(theta_2) = 1/(2 sigma) is undefined")
    theta1 = axial_moment(dist, 1)
    grad = np.array([-theta1 / sigma, 1.0 / (2.0 * sigma)])
    return float(grad @ inverse_qfi_moments(dist, cfg, 2) @ grad)


@dataclass(frozen=True)
class QfiReport:
    displacement_qfi: np.ndarray
    inverse_moment_qfi: np.ndarray
    bound_mean: float
    bound_roughness: float
    max_displacement: float
    step: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "displacement_qfi": self.displacement_qfi.tolist(),
            "inverse_moment_qfi": self.inverse_moment_qfi.tolist(),
            "bound_mean": self.bound_mean,
            "bound_roughness": self.bound_roughness,
            "max_displacement": self.max_displacement,
            "step": self.step,
            "notes": list(self.notes),
        }


def qfi_report(dist: SourceDistribution, cfg: OpticalConfig, K: int = 2,
               dz: float | None = None) -> QfiReport:
    """Bundle the QFI quantities; ``dz`` switches to the numerical QFI matrix."""
    notes = []
    zmax = float(np.max(np.abs(dist.z())))
    if zmax > 0.3 * cfg.rayleigh_range:
        notes.append(f"max |z| = {zmax:g} exceeds 0.3 z_R; near-focus approximation is loose")
    qfi = (qfi_displacements_closed_form(dist, cfg) if dz is None
           else metrology_matrix_qfi(dist, cfg, dz))
    sigma = roughness(dist)
    bound_sigma = quantum_bound_roughness(dist, cfg) if sigma > 0 else math.nan
    if sigma == 0:
        notes.append("roughness is zero; roughness bound undefined")
    return QfiReport(
        displacement_qfi=qfi,
        inverse_moment_qfi=inverse_qfi_moments(dist, cfg, K),
        bound_mean=quantum_bound_mean(cfg),
        bound_roughness=bound_sigma,
        max_displacement=zmax,
        step=dz,
        notes=notes,
    )
