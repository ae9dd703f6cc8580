"""Photon-level simulation of both measurement channels.

Every repetition draws from its own stream spawned off one SeedSequence, so
results do not depend on how repetitions are spread over worker threads.
"""

from __future__ import annotations

import csv
import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .direct_imaging import Target, di_influence_estimate, di_roughness_crb, di_moment_crb
from .errors import InvalidArgumentError, UnidentifiableError
from .optics import OpticalConfig, beam_width, geometric_ratio
from .quantum_bounds import quantum_bound_mean, quantum_bound_roughness
from .sources import SourceDistribution, axial_moment, roughness
from .spade import (
    histogram,
    mode_truncation,
    spade_influence_estimate,
    spade_moment_crb,
    spade_roughness_crb,
)

LOW_CONFIDENCE_REPETITIONS = 30

__all__ = [
    "Channel",
    "EstimatorError",
    "ExperimentConfig",
    "ExperimentResult",
    "repetition_rngs",
    "sample_source",
    "sample_source_counts",
    "sample_di_photon",
    "sample_spade_photon",
    "simulate_di_radii",
    "simulate_spade_histogram",
    "run_experiment",
    "write_estimates_csv",
]


class Channel(str, enum.Enum):
    DIRECT_IMAGING = "direct-imaging"
    SPADE = "spade"


class EstimatorError(RuntimeError):
    """An estimator could not be formed during a simulation run."""


@dataclass(frozen=True)
class ExperimentConfig:
    distribution: SourceDistribution
    optics: OpticalConfig = field(default_factory=OpticalConfig)
    channel: Channel = Channel.SPADE
    photons_per_run: int = 1_000_000
    repetitions: int = 200
    seed: int = 1
    estimator_target: Target = Target.ROUGHNESS
    reference: SourceDistribution | None = None

    def __post_init__(self):
        object.__setattr__(self, "channel", Channel(self.channel))
        object.__setattr__(self, "estimator_target", Target(self.estimator_target))
        for name in ("photons_per_run", "repetitions"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise InvalidArgumentError(f"{name} must be a positive integer, got {value!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) \
                or not 0 <= self.seed < 2**64:
            raise InvalidArgumentError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def reference_distribution(self) -> SourceDistribution:
        """Expansion point of the influence function; the truth unless a pilot is given."""
        return self.distribution if self.reference is None else self.reference

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.to_dict(),
            "optics": self.optics.to_dict(),
            "channel": self.channel.value,
            "photons_per_run": int(self.photons_per_run),
            "repetitions": int(self.repetitions),
            "seed": int(self.seed),
            "estimator_target": self.estimator_target.value,
            "reference": None if self.reference is None else self.reference.to_dict(),
        }


@dataclass
class ExperimentResult:
    estimates: np.ndarray
    empirical_rescaled_variance: float
    analytic_crb: float
    quantum_bound: float
    metadata: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.empirical_rescaled_variance / self.analytic_crb

    def to_dict(self, include_timing: bool = False) -> dict:
        meta = dict(self.metadata)
        if not include_timing:
            meta.pop("wall_time_s", None)
        return {
            "estimates": [float(x) for x in self.estimates],
            "empirical_rescaled_variance": self.empirical_rescaled_variance,
            "analytic_crb": self.analytic_crb,
            "quantum_bound": self.quantum_bound,
            "ratio": self.ratio,
            "metadata": meta,
        }


def repetition_rngs(seed: int, repetitions: int) -> list[np.random.Generator]:
    """One independent PCG64 stream per repetition index."""
    children = np.random.SeedSequence(seed).spawn(repetitions)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def sample_source(dist: SourceDistribution, rng: np.random.Generator) -> float:
    """Axial position of the emitter of a single photon."""
    return dist.positions[rng.choice(dist.size, p=dist.p())]


def sample_source_counts(dist: SourceDistribution, m: int, rng: np.random.Generator) -> np.ndarray:
    """How many of ``m`` photons come from each source."""
    return rng.multinomial(m, dist.p())


def sample_di_photon(z: float, cfg: OpticalConfig, rng: np.random.Generator, size=None):
    """Radial detection coordinate, drawn by inverting P(r <= R) = 1 - exp(-2R^2/w^2)."""
    u = 1.0 - rng.random(size)  # in (0, 1]
    return beam_width(z, cfg) * np.sqrt(-np.log(u) / 2.0)


def sample_spade_photon(z: float, cfg: OpticalConfig, rng: np.random.Generator, size=None):
    """Laguerre-Gauss mode index, geometric with ratio xi(z) on {0, 1, ...}."""
    xi = float(geometric_ratio(z, cfg))
    return rng.geometric(1.0 - xi, size) - 1


def simulate_di_radii(dist: SourceDistribution, cfg: OpticalConfig, m: int,
                      rng: np.random.Generator) -> np.ndarray:
    counts = sample_source_counts(dist, m, rng)
    return np.concatenate([sample_di_photon(z, cfg, rng, n)
                           for z, n in zip(dist.positions, counts)])


def simulate_spade_histogram(dist: SourceDistribution, cfg: OpticalConfig, m: int,
                             rng: np.random.Generator, n_modes: int | None = None
                             ) -> tuple[np.ndarray, int]:
    """Mode histogram over 0..n_modes and the overflow count beyond it."""
    n_modes = mode_truncation(dist, cfg) if n_modes is None else n_modes
    counts = sample_source_counts(dist, m, rng)
    q = np.concatenate([sample_spade_photon(z, cfg, rng, n)
                        for z, n in zip(dist.positions, counts)])
    return histogram(q, n_modes)


def _one_repetition(config: ExperimentConfig, rng: np.random.Generator, n_modes: int) -> float:
    dist, cfg = config.distribution, config.optics
    ref, target = config.reference_distribution, config.estimator_target
    m = config.photons_per_run
    if config.channel is Channel.DIRECT_IMAGING:
        radii = simulate_di_radii(dist, cfg, m, rng)
        return di_influence_estimate(radii, ref, cfg, target)
    counts, overflow = simulate_spade_histogram(dist, cfg, m, rng, n_modes)
    if overflow:
        raise EstimatorError(f"{overflow} photons landed beyond mode {n_modes}")
    return spade_influence_estimate(counts, ref, cfg, target)


def _analytic_bounds(config: ExperimentConfig) -> tuple[float, float]:
    ref, cfg = config.reference_distribution, config.optics
    spade = config.channel is Channel.SPADE
    if config.estimator_target is Target.THETA2:
        crb = (spade_moment_crb(ref, cfg, 1) if spade else di_moment_crb(ref, cfg, 1))[1, 1]
        # theta_2 = sigma^2, so the quantum bound maps by (2 sigma)^2
        return float(crb), 4.0 * axial_moment(ref, 2) * quantum_bound_mean(cfg)
    crb = spade_roughness_crb(ref, cfg) if spade else di_roughness_crb(ref, cfg)
    return crb, quantum_bound_roughness(ref, cfg)


def run_experiment(config: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Repeat the measurement ``repetitions`` times and compare m Var(beta_hat) with the CRB."""
    if threads < 1:
        raise InvalidArgumentError(f"threads must be >= 1, got {threads}")
    start = time.perf_counter()
    try:
        analytic, quantum = _analytic_bounds(config)
        # validates the target before any photons are drawn
        n_modes = mode_truncation(config.distribution, config.optics)
        rngs = repetition_rngs(config.seed, config.repetitions)
        estimates = np.empty(config.repetitions)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_one_repetition, config, rng, n_modes) for rng in rngs]
            for i, fut in enumerate(futures):
                estimates[i] = fut.result()
    except (EstimatorError, UnidentifiableError):
        raise
    except (ValueError, ArithmeticError) as exc:
        raise EstimatorError(str(exc)) from exc

    flags = []
    if config.repetitions < 2:
        variance = 0.0
        flags.append("insufficient repetitions")
    else:
        variance = float(config.photons_per_run * np.var(estimates, ddof=1))
    if config.repetitions < LOW_CONFIDENCE_REPETITIONS:
        flags.append("low confidence")
    truth = _true_value(config)
    metadata = {
        "config": config.to_dict(),
        "flags": flags,
        "mean_estimate": float(np.mean(estimates)),
        "true_value": truth,
        "bias": float(np.mean(estimates) - truth) if math.isfinite(truth) else math.nan,
        "mode_truncation": n_modes if config.channel is Channel.SPADE else None,
        "wall_time_s": time.perf_counter() - start,
    }
    return ExperimentResult(estimates, variance, analytic, quantum, metadata)


def _true_value(config: ExperimentConfig) -> float:
    if config.estimator_target is Target.THETA2:
        return axial_moment(config.distribution, 2)
    return roughness(config.distribution)


def write_estimates_csv(result: ExperimentResult, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["repetition", "estimate"])
    for i, value in enumerate(result.estimates):
        writer.writerow([i, f"{value:.12g}"])
