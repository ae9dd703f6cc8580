"""Run configuration loading and validation."""

from __future__ import annotations

import copy
import enum
import json
from dataclasses import dataclass

import jsonschema

from .direct_imaging import Target
from .errors import InvalidArgumentError
from .montecarlo import Channel, ExperimentConfig
from .optics import OpticalConfig
from .sources import DEFAULT_TRUNCATION, SourceDistribution

MAX_MATRIX_ORDER = 64

DEFAULTS = {
    "optics": {"rayleigh_range": 1.0, "omega0": 1.0},
    "distribution": {"positions": [-0.05, 0.05], "weights": [0.5, 0.5]},
    "reference": None,
    "channel": "spade",
    "photons_per_run": 1_000_000,
    "repetitions": 200,
    "seed": 1,
    "estimator_target": "roughness",
    "truncation": DEFAULT_TRUNCATION,
    "scan": None,
}

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_DISTRIBUTION = {
    "type": "object",
    "required": ["positions", "weights"],
    "properties": {"positions": _NUMBER_LIST, "weights": _NUMBER_LIST},
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "optics": {
            "type": "object",
            "properties": {
                "rayleigh_range": {"type": "number", "exclusiveMinimum": 0},
                "omega0": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "distribution": _DISTRIBUTION,
        "reference": {"oneOf": [{"type": "null"}, _DISTRIBUTION]},
        "channel": {"enum": [c.value for c in Channel]},
        "photons_per_run": {"type": "integer", "minimum": 1},
        "repetitions": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "estimator_target": {"enum": [t.value for t in Target]},
        "truncation": {"type": "integer", "minimum": 0},
        "scan": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["axis", "values"],
                    "properties": {
                        "axis": {"enum": ["separation", "photons", "rayleigh-range"]},
                        "values": {"type": "array", "items": {"type": "number"}, "minItems": 2},
                        "empirical": {"type": "boolean"},
                    },
                    "additionalProperties": False,
                },
            ]
        },
    },
    "additionalProperties": False,
}


class Command(str, enum.Enum):
    BOUNDS = "bounds"
    MATRICES = "matrices"
    SIMULATE = "simulate"
    SCAN = "scan"


def _pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path) if path else "/"


def validate_document(doc) -> None:
    """Raise InvalidArgumentError naming the offending JSON pointer."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(doc))
    if error is None:
        return
    path = list(error.absolute_path)
    if error.validator == "required":
        missing = [name for name in error.validator_value if name not in error.instance]
        path.append(missing[0])
    raise InvalidArgumentError(f"invalid config at {_pointer(path)}: {error.message}")


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_document(text: str) -> dict:
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise InvalidArgumentError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InvalidArgumentError("invalid config at /: top level must be an object")
    validate_document(doc)
    return doc


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved invocation.  ``resolved`` is the materialized JSON document."""

    command: Command
    resolved: dict
    output_path: str | None = None
    output_format: str = "json"

    def __post_init__(self):
        object.__setattr__(self, "command", Command(self.command))
        if self.output_format not in ("json", "csv"):
            raise InvalidArgumentError(f"unknown format {self.output_format!r}")
        if self.output_format == "csv" and self.command not in (Command.SCAN, Command.SIMULATE):
            raise InvalidArgumentError("csv output is only available for scan and simulate")
        if self.command is Command.SCAN:
            scan = self.resolved.get("scan")
            if not scan:
                raise InvalidArgumentError("invalid config at /scan: scan command needs a scan block")
            values = scan["values"]
            diffs = [b - a for a, b in zip(values, values[1:])]
            if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
                raise InvalidArgumentError("invalid config at /scan/values: grid must be strictly monotone")
            if scan["axis"] == "photons" and any(v < 1 or v != int(v) for v in values):
                raise InvalidArgumentError("invalid config at /scan/values: photon counts must be positive integers")
            if scan["axis"] == "rayleigh-range" and any(v <= 0 for v in values):
                raise InvalidArgumentError("invalid config at /scan/values: Rayleigh ranges must be positive")
        if self.command is Command.MATRICES and self.truncation > MAX_MATRIX_ORDER:
            raise InvalidArgumentError(
                f"truncation {self.truncation} exceeds {MAX_MATRIX_ORDER}; factorial entries would overflow")

    @classmethod
    def build(cls, command, document: dict | None = None, overrides: dict | None = None,
              output_path=None, output_format="json") -> "RunConfig":
        """Defaults, then the file document, then flag overrides."""
        resolved = merge(DEFAULTS, document or {})
        resolved = merge(resolved, overrides or {})
        validate_document(resolved)
        if resolved.get("scan") is not None:
            resolved["scan"].setdefault("empirical", False)
        return cls(command, resolved, output_path, output_format)

    @property
    def optics(self) -> OpticalConfig:
        return OpticalConfig.from_dict(self.resolved["optics"])

    @property
    def distribution(self) -> SourceDistribution:
        return SourceDistribution.from_dict(self.resolved["distribution"])

    @property
    def truncation(self) -> int:
        return int(self.resolved["truncation"])

    @property
    def experiment(self) -> ExperimentConfig:
        doc = self.resolved
        ref = doc.get("reference")
        return ExperimentConfig(
            distribution=self.distribution,
            optics=self.optics,
            channel=doc["channel"],
            photons_per_run=doc["photons_per_run"],
            repetitions=doc["repetitions"],
            seed=doc["seed"],
            estimator_target=doc["estimator_target"],
            reference=None if ref is None else SourceDistribution.from_dict(ref),
        )

    def to_dict(self) -> dict:
        # output path and thread count do not affect results and stay out,
        # so that identical runs serialize identically
        return {"command": self.command.value, **copy.deepcopy(self.resolved)}
