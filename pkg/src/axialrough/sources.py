"""Discrete axial source distributions and the moment vectors they induce."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .optics import OpticalConfig, geometric_ratio, mode_overlap_prob

DEFAULT_TRUNCATION = 20
WEIGHT_TOLERANCE = 1e-12

__all__ = [
    "DEFAULT_TRUNCATION",
    "MomentKind",
    "MomentVector",
    "SourceDistribution",
    "axial_moment",
    "axial_moments",
    "roughness",
    "image_moments_di",
    "mode_intensities_spade",
    "mode_tail_mass",
]


@dataclass(frozen=True)
class SourceDistribution:
    """Point sources at axial positions ``positions`` with relative intensities ``weights``."""

    positions: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        pos = tuple(float(z) for z in self.positions)
        wts = tuple(float(p) for p in self.weights)
        if not pos:
            raise InvalidArgumentError("distribution needs at least one source")
        if len(pos) != len(wts):
            raise InvalidArgumentError(
                f"positions ({len(pos)}) and weights ({len(wts)}) differ in length")
        if not all(math.isfinite(z) for z in pos):
            raise InvalidArgumentError("positions must be finite")
        if any(not math.isfinite(p) or p < 0 for p in wts):
            raise InvalidArgumentError("weights must be finite and nonnegative")
        total = math.fsum(wts)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise InvalidArgumentError(f"weights sum to {total!r}, expected 1")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", wts)

    @classmethod
    def symmetric_pair(cls, s: float) -> "SourceDistribution":
        """Two equally bright sources at -s and +s."""
        return cls((-s, s), (0.5, 0.5))

    @property
    def size(self) -> int:
        return len(self.positions)

    def z(self) -> np.ndarray:
        return np.array(self.positions)

    def p(self) -> np.ndarray:
        return np.array(self.weights)

    def scaled(self, factor: float) -> "SourceDistribution":
        return SourceDistribution(tuple(factor * z for z in self.positions), self.weights)

    def to_dict(self) -> dict:
        return {"positions": list(self.positions), "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, data: dict) -> "SourceDistribution":
        return cls(tuple(data["positions"]), tuple(data["weights"]))


class MomentKind(str, enum.Enum):
    OBJECT_THETA = "object-theta"
    IMAGE_PHI = "image-phi"
    MODE_F = "mode-f"


@dataclass(frozen=True)
class MomentVector:
    """A truncated moment sequence.

    ``values[j]`` holds theta_j for object moments, phi_{2j} for image moments
    and f_j for mode intensities; ``order`` is the last index kept.
    """

    kind: MomentKind
    values: np.ndarray = field(repr=False)
    order: int = 0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "kind", MomentKind(self.kind))
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or len(vals) != self.order + 1:
            raise InvalidArgumentError(f"expected {self.order + 1} values, got shape {vals.shape}")
        if self.kind is MomentKind.OBJECT_THETA and vals[0] != 1.0:
            raise InvalidArgumentError("object moments must start with theta_0 = 1")
        if self.kind is not MomentKind.OBJECT_THETA and vals[0] > 1.0 + 1e-12:
            raise InvalidArgumentError("zeroth entry cannot exceed 1")
        if self.kind is MomentKind.MODE_F and np.any(vals < 0):
            raise InvalidArgumentError("mode intensities must be nonnegative")

    def __getitem__(self, index):
        return self.values[index]

    def __len__(self):
        return len(self.values)


def axial_moment(dist: SourceDistribution, order: int) -> float:
    """theta_l = sum_i p_i z_i^l, accumulated with compensated summation."""
    if order < 0:
        raise InvalidArgumentError(f"moment order must be nonnegative, got {order}")
    if order == 0:
        return 1.0
    return math.fsum(p * z**order for z, p in zip(dist.positions, dist.weights))


def axial_moments(dist: SourceDistribution, max_order: int) -> MomentVector:
    """All object moments theta_0 .. theta_{max_order}."""
    values = [axial_moment(dist, l) for l in range(max_order + 1)]
    return MomentVector(MomentKind.OBJECT_THETA, values, max_order)


def roughness(dist: SourceDistribution) -> float:
    """Root-mean-square axial spread sqrt(theta_2 - theta_1^2).

    Computed about the mean rather than from raw moments so that the result
    stays translation invariant to rounding.
    """
    mean = axial_moment(dist, 1)
    var = math.fsum(p * (z - mean) ** 2 for z, p in zip(dist.positions, dist.weights))
    return math.sqrt(max(var, 0.0))


def image_moments_di(dist: SourceDistribution, cfg: OpticalConfig,
                     K: int = DEFAULT_TRUNCATION) -> MomentVector:
    """Even radial moments phi_0, phi_2, ..., phi_{2K} of the direct-imaging intensity."""
    from .direct_imaging import c_matrix

    if K < 0:
        raise InvalidArgumentError(f"truncation must be nonnegative, got {K}")
    theta_even = np.array([axial_moment(dist, 2 * k) for k in range(K + 1)])
    phi = c_matrix(cfg, K) @ theta_even
    phi[0] = 1.0
    return MomentVector(MomentKind.IMAGE_PHI, phi, K)


def mode_intensities_spade(dist: SourceDistribution, cfg: OpticalConfig,
                           K: int = DEFAULT_TRUNCATION) -> MomentVector:
    """Laguerre-Gauss mode populations f_0 .. f_K."""
    if K < 0:
        raise InvalidArgumentError(f"truncation must be nonnegative, got {K}")
    q = np.arange(K + 1)[:, None]
    table = mode_overlap_prob(q, dist.z()[None, :], cfg)
    f = table @ dist.p()
    return MomentVector(MomentKind.MODE_F, np.clip(f, 0.0, None), K)


def mode_tail_mass(dist: SourceDistribution, cfg: OpticalConfig, K: int) -> float:
    """Population left beyond mode K: sum_i p_i xi_i^(K+1)."""
    xi = geometric_ratio(dist.z(), cfg)
    return math.fsum(dist.p() * np.power(xi, K + 1))
