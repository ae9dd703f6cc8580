"""Bound tables over a one-dimensional parameter grid."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import replace

from .direct_imaging import di_roughness_crb
from .errors import SingularParametrizationError
from .montecarlo import Channel, ExperimentConfig, run_experiment
from .optics import OpticalConfig
from .quantum_bounds import quantum_bound_roughness
from .sources import SourceDistribution, roughness
from .spade import spade_roughness_crb

COLUMNS = ("value", "quantum_roughness", "spade_roughness", "di_roughness",
           "empirical_rescaled_variance", "status")

__all__ = ["COLUMNS", "scan_rows", "format_csv", "parse_csv"]


def _point(axis: str, value: float, base: ExperimentConfig) -> ExperimentConfig:
    if axis == "separation":
        return replace(base, distribution=SourceDistribution.symmetric_pair(value), reference=None)
    if axis == "rayleigh-range":
        # hold positions fixed in units of z_R
        factor = value / base.optics.rayleigh_range
        optics = OpticalConfig(rayleigh_range=value, omega0=base.optics.omega0)
        ref = None if base.reference is None else base.reference.scaled(factor)
        return replace(base, optics=optics, distribution=base.distribution.scaled(factor), reference=ref)
    if axis == "photons":
        return replace(base, photons_per_run=int(value))
    raise ValueError(f"unknown scan axis {axis!r}")


def scan_rows(axis: str, values, base: ExperimentConfig, empirical: bool = False,
              threads: int = 1) -> list[dict]:
    """One row per grid value; zero-spread points are flagged instead of aborting."""
    rows = []
    for value in values:
        point = _point(axis, value, base)
        ref, cfg = point.reference_distribution, point.optics
        row = {"value": float(value), "quantum_roughness": cfg.rayleigh_range**2,
               "empirical_rescaled_variance": None, "status": "ok"}
        if roughness(ref) == 0.0:
            row.update(spade_roughness=math.nan, di_roughness=math.inf, status="divergent")
            rows.append(row)
            continue
        try:
            row["quantum_roughness"] = quantum_bound_roughness(ref, cfg)
            row["spade_roughness"] = spade_roughness_crb(ref, cfg)
            row["di_roughness"] = di_roughness_crb(ref, cfg)
        except SingularParametrizationError:
            row.update(spade_roughness=math.nan, di_roughness=math.inf, status="divergent")
            rows.append(row)
            continue
        if empirical:
            result = run_experiment(point, threads=threads)
            row["empirical_rescaled_variance"] = result.empirical_rescaled_variance
        rows.append(row)
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{value:.12g}"


def format_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in COLUMNS])
    return out.getvalue()


def parse_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != COLUMNS:
        raise ValueError(f"unexpected header {reader.fieldnames}")
    rows = []
    for raw in reader:
        row = {}
        for key in COLUMNS:
            cell = raw[key]
            if key == "status":
                row[key] = cell
            else:
                row[key] = None if cell == "" else float(cell)
        rows.append(row)
    return rows
