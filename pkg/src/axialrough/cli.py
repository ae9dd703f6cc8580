"""Command-line entry point.

    axialrough <command> [--config PATH] [--seed U64] [--threads N] [--out PATH] [--format json|csv]

Exit codes: 0 success, 1 validation or parse error, 2 singular
parametrization (zero roughness), 3 estimator failure during simulation.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .config import Command, RunConfig, load_document
from .direct_imaging import c_inverse, c_matrix, di_roughness_crb
from .errors import InvalidArgumentError, SingularParametrizationError, UnidentifiableError
from .montecarlo import EstimatorError, run_experiment, write_estimates_csv
from .quantum_bounds import quantum_bound_mean, quantum_bound_roughness
from .scan import format_csv, scan_rows
from .spade import spade_roughness_crb, w_inverse, w_matrix

EXIT_OK, EXIT_INVALID, EXIT_SINGULAR, EXIT_ESTIMATOR = 0, 1, 2, 3


def _units(run: RunConfig) -> str:
    return f"lengths in units of omega0 (omega0 = {run.optics.omega0:g})"


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _document(run: RunConfig, payload: dict) -> dict:
    return {"config": run.to_dict(), "units": _units(run), **payload}


def cmd_bounds(run: RunConfig) -> dict:
    dist, cfg = run.distribution, run.optics
    return _document(run, {
        "quantum": {"mean": quantum_bound_mean(cfg), "roughness": quantum_bound_roughness(dist, cfg)},
        "direct_imaging": {"roughness": di_roughness_crb(dist, cfg)},
        "spade": {"roughness": spade_roughness_crb(dist, cfg)},
    })


def cmd_matrices(run: RunConfig) -> dict:
    cfg, K = run.optics, run.truncation
    c, ci, w, wi = c_matrix(cfg, K), c_inverse(cfg, K), w_matrix(cfg, K), w_inverse(cfg, K)
    eye = np.eye(K + 1)
    return _document(run, {
        "order": K,
        "layout": "row-major",
        "c_matrix": c.tolist(),
        "c_inverse": ci.tolist(),
        "w_matrix": w.tolist(),
        "w_inverse": wi.tolist(),
        "residuals": {
            "c_times_c_inverse": float(np.abs(c @ ci - eye).max()),
            "w_times_w_inverse": float(np.abs(w @ wi - eye).max()),
        },
    })


def cmd_simulate(run: RunConfig, threads: int = 1):
    result = run_experiment(run.experiment, threads=threads)
    exp = run.experiment
    print(f"channel={exp.channel.value} m={exp.photons_per_run} reps={exp.repetitions} "
          f"mVar={result.empirical_rescaled_variance:.6g} crb={result.analytic_crb:.6g} "
          f"ratio={result.ratio:.4f}", file=sys.stderr)
    return result


def cmd_scan(run: RunConfig, threads: int = 1) -> list[dict]:
    scan = run.resolved["scan"]
    empirical = scan["empirical"] or scan["axis"] == "photons"
    return scan_rows(scan["axis"], scan["values"], run.experiment, empirical, threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="axialrough",
        description="Precision limits for axial roughness estimation of incoherent point sources.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("command", choices=[c.value for c in Command])
    parser.add_argument("--config", help="JSON config file, '-' for stdin")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threads", type=int, default=1, help="worker cap for simulations")
    parser.add_argument("--out", help="output file (default stdout)")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--truncation", type=int)
    parser.add_argument("--channel", choices=["spade", "direct-imaging"])
    parser.add_argument("--photons", type=int, dest="photons_per_run")
    parser.add_argument("--repetitions", type=int)
    parser.add_argument("--rayleigh-range", type=float, dest="rayleigh_range")
    return parser


def _overrides(args) -> dict:
    out = {}
    for key in ("seed", "truncation", "channel", "photons_per_run", "repetitions"):
        value = getattr(args, key)
        if value is not None:
            out[key] = value
    if args.rayleigh_range is not None:
        out["optics"] = {"rayleigh_range": args.rayleigh_range}
    return out


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise InvalidArgumentError("--threads must be >= 1")
        document = {}
        if args.config:
            if args.config == "-":
                text = sys.stdin.read()
            else:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            document = load_document(text)
        run = RunConfig.build(args.command, document, _overrides(args), args.out, args.format)
        command = run.command
        if command is Command.BOUNDS:
            payload = cmd_bounds(run)
        elif command is Command.MATRICES:
            payload = cmd_matrices(run)
        elif command is Command.SIMULATE:
            result = cmd_simulate(run, args.threads)
            if run.output_format == "csv":
                buf = io.StringIO()
                write_estimates_csv(result, buf)
                _emit(buf.getvalue(), run.output_path)
                return EXIT_OK
            payload = _document(run, {"result": result.to_dict()})
        else:
            rows = cmd_scan(run, args.threads)
            if run.output_format == "csv":
                _emit(format_csv(rows), run.output_path)
                return EXIT_OK
            payload = _document(run, {"rows": rows})
        _emit(json.dumps(_json_safe(payload), indent=2) + "\n", run.output_path)
        return EXIT_OK
    except EstimatorError as exc:
        print(f"error: estimator failure: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except SingularParametrizationError as exc:
        print(f"error: singular parametrization: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except UnidentifiableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATOR
    except (InvalidArgumentError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
