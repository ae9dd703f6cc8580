"""Gaussian-beam imaging model for axially displaced point sources.

All lengths share the unit of ``omega0`` (the focal beam waist).  Only the
rotationally symmetric part of the problem is modelled: sources sit on the
optical axis and the Laguerre-Gauss basis is restricted to azimuthal index 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidArgumentError

__all__ = [
    "OpticalConfig",
    "beam_width",
    "psf_intensity",
    "psf_field",
    "lg_mode",
    "field_overlap",
    "geometric_ratio",
    "mode_overlap_prob",
    "generator_variance",
]


@dataclass(frozen=True)
class OpticalConfig:
    """Beam geometry.  ``wave_number`` is derived so that z_R = k w0^2 / 2."""

    rayleigh_range: float = 1.0
    omega0: float = 1.0

    def __post_init__(self):
        for name in ("rayleigh_range", "omega0"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def wave_number(self) -> float:
        return 2.0 * self.rayleigh_range / self.omega0**2

    def to_dict(self) -> dict:
        return {"rayleigh_range": self.rayleigh_range, "omega0": self.omega0}

    @classmethod
    def from_dict(cls, data: dict) -> "OpticalConfig":
        return cls(rayleigh_range=float(data.get("rayleigh_range", 1.0)),
                   omega0=float(data.get("omega0", 1.0)))


def beam_width(z, cfg: OpticalConfig):
    """Beam radius w(z) = w0 sqrt(1 + z^2/z_R^2)."""
    z = np.asarray(z, dtype=float)
    out = cfg.omega0 * np.hypot(1.0, z / cfg.rayleigh_range)
    return out[()] if out.ndim == 0 else out


def psf_intensity(r, z, cfg: OpticalConfig):
    """Detection density |psi(r, z)|^2 per unit image-plane area."""
    w2 = beam_width(z, cfg) ** 2
    r = np.asarray(r, dtype=float)
    out = 2.0 / (np.pi * w2) * np.exp(-2.0 * r**2 / w2)
    return out[()] if np.ndim(out) == 0 else out


def psf_field(r, z, cfg: OpticalConfig):
    """Complex field of a source displaced by ``z``, including the Gouy phase.

    The Gouy phase is a global factor and drops out of every intensity; it is
    kept so that overlaps between different ``z`` match the propagator
    exp(-i z G) applied to the focused field.
    """
    zr = cfg.rayleigh_range
    r = np.asarray(r, dtype=float)
    w = beam_width(z, cfg)
    inv_curvature = z / (z**2 + zr**2)
    amp = math.sqrt(2.0 / math.pi) / w * np.exp(-(r**2) / w**2)
    phase = -0.5 * cfg.wave_number * r**2 * inv_curvature + math.atan2(z, zr)
    return amp * np.exp(1j * phase)


def lg_mode(q: int, r, cfg: OpticalConfig):
    """Radial Laguerre-Gauss mode (azimuthal index 0) at the focal plane."""
    if q < 0:
        raise InvalidArgumentError(f"mode index must be nonnegative, got {q}")
    w0 = cfg.omega0
    r = np.asarray(r, dtype=float)
    return (math.sqrt(2.0 / (math.pi * w0**2))
            * special.eval_laguerre(q, 2.0 * r**2 / w0**2) * np.exp(-(r**2) / w0**2))


def field_overlap(z_a, z_b, cfg: OpticalConfig):
    """<psi_{z_a}|psi_{z_b}> in closed form.

    Depends on z_b - z_a only: 2 z_R / (2 z_R + i (z_a - z_b)).
    """
    two_zr = 2.0 * cfg.rayleigh_range
    return two_zr / (two_zr + 1j * (np.asarray(z_a, dtype=float) - np.asarray(z_b, dtype=float)))


def geometric_ratio(z, cfg: OpticalConfig):
    """xi(z) = z^2 / (z^2 + 4 z_R^2); mode occupation is geometric in xi."""
    z = np.asarray(z, dtype=float)
    z2 = z * z
    out = z2 / (z2 + 4.0 * cfg.rayleigh_range**2)
    return out[()] if out.ndim == 0 else out


def mode_overlap_prob(q, z, cfg: OpticalConfig):
    """Probability H(q; z) that a photon from depth ``z`` lands in LG mode ``q``.

    Evaluated as exp(q ln xi + ln(1 - xi)) so that large ``q`` underflows
    gracefully to 0 instead of producing NaN.
    """
    q = np.asarray(q)
    if np.any(q < 0):
        raise InvalidArgumentError("mode index must be nonnegative")
    z = np.asarray(z, dtype=float)
    z2 = z * z
    four_zr2 = 4.0 * cfg.rayleigh_range**2
    log_keep = np.log(four_zr2) - np.log(z2 + four_zr2)  # ln(1 - xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_xi = np.log(z2) - np.log(z2 + four_zr2)
        # 0 * log(0) must read as log(1) for the fundamental mode
        exponent = np.where(q == 0, 0.0, q * log_xi)
    out = np.exp(exponent + log_keep)
    return out[()] if out.ndim == 0 else out


def generator_variance(cfg: OpticalConfig) -> float:
    """Variance of the paraxial propagation generator on the focused field."""
    return 1.0 / (4.0 * cfg.rayleigh_range**2)
