"""Deterministic command-line driver for the experiment suite.

Every subcommand reads an optional flat JSON config, applies the command-line
overrides, runs one experiment, and writes a JSON report plus per-replica CSV
tables into the output directory.  Outputs embed the config and its sha256
digest and contain no timestamps or environment state, so rerunning the same
config, seed, and thread count reproduces every file byte for byte (and the
thread count itself never changes the numbers, only the wall time).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, DomainError
from .experiments import (
    ExperimentResult,
    bounds_experiment,
    config_digest,
    moment_calibration_experiment,
    simulate_experiment,
    tanaka_experiment,
    theorem1_experiment,
    theorem2_experiment,
)

# Allowed config keys and their defaults, per subcommand.  Keys absent here
# are rejected so a typo cannot silently fall back to a default.
_DEFAULTS = {
    "bounds": {"rel_tol": 1e-6, "sweep_seed": 0, "sweep_points": 2000},
    "moments": {
        "n_init": 2000,
        "dt": None,
        "t": 1.0,
        "replicas": 1000,
        "seed": 0,
    },
    "tanaka": {
        "d": None,
        "anchors": [0.2],
        "t": 1.0,
        "n_init": 200,
        "dt": 1e-4,
        "replicas": 500,
        "seed": 0,
        "epsilon": "auto",
    },
    "theorem1": {
        "anchors": [0.3, 0.2, 0.1],
        "t": 1.0,
        "n_init": 200,
        "dt": 1e-4,
        "replicas": 500,
        "seed": 0,
        "epsilon": "auto",
    },
    "theorem2": {
        "anchors": [0.3, 0.2, 0.1, 0.05],
        "t": 1.0,
        "n_init": 200,
        "dt": 1e-4,
        "replicas": 500,
        "seed": 0,
        "epsilon": "auto",
    },
    "simulate": {
        "d": 3,
        "n_init": 200,
        "dt": 1e-3,
        "t": 1.0,
        "replicas": 100,
        "seed": 0,
        "gaussian_scale": 1.0,
        "run_to_extinction": False,
    },
}

_RUNNERS = {
    "bounds": bounds_experiment,
    "moments": moment_calibration_experiment,
    "tanaka": tanaka_experiment,
    "theorem1": theorem1_experiment,
    "theorem2": theorem2_experiment,
    "simulate": simulate_experiment,
}


def _fmt_cell(value) -> str:
    """Fixed-width rendering: 17 significant digits for floats."""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.16e}"
    return str(value)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    try:
        loaded = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(loaded, dict):
        raise ConfigError(f"config file {path!r} must hold a JSON object")
    return loaded


def _merge(command: str, file_config: dict, args: argparse.Namespace) -> dict:
    allowed = _DEFAULTS[command]
    unknown = sorted(set(file_config) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown config keys for {command!r}: {unknown}; "
            f"allowed: {sorted(allowed)}"
        )
    merged = dict(allowed)
    merged.update(file_config)
    if getattr(args, "dim", None) is not None:
        merged["d"] = args.dim
    if args.seed is not None:
        key = "sweep_seed" if command == "bounds" else "seed"
        merged[key] = args.seed
    if args.replicas is not None:
        if "replicas" not in allowed:
            raise ConfigError(f"{command!r} takes no --replicas override")
        merged["replicas"] = args.replicas
    if command == "tanaka" and merged.get("d") is None:
        raise ConfigError("tanaka requires --dim {2,3} (or 'd' in the config)")
    if "anchors" in merged:
        merged["anchors"] = tuple(float(r) for r in merged["anchors"])
    return merged


def _write_outputs(out_dir: Path, result: ExperimentResult) -> list[Path]:
    digest = config_digest(result.config)
    seed = result.config.get("seed", result.config.get("sweep_seed"))
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    payload = {
        "experiment": result.name,
        "config": result.config,
        "config_sha256": digest,
        "seed": seed,
        "report": result.report,
    }
    report_path = out_dir / f"{result.name}_report.json"
    report_path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    written.append(report_path)

    for stem, (header, rows) in result.tables.items():
        csv_path = out_dir / f"{result.name}_{stem}.csv"
        lines = [f"# experiment={result.name} config_sha256={digest} seed={seed}"]
        lines.append(",".join(header))
        for row in rows:
            lines.append(",".join(_fmt_cell(cell) for cell in row))
        with open(csv_path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        written.append(csv_path)
    return written


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sbmlab",
        description=(
            "Branching-particle laboratory for measure-valued local times: "
            "analytic bound checks, moment calibration, decomposition "
            "residuals, fluctuation and boundedness experiments."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "bounds": "quadrature confirmation of the analytic inequalities",
        "moments": "Monte Carlo terminal moments vs the analytic oracles",
        "tanaka": "local-time decomposition residuals and isometry ratios",
        "theorem1": "normalized fluctuation statistic at shrinking anchors",
        "theorem2": "L1 boundedness of centered planar local times",
        "simulate": "raw ensemble summaries (optionally to extinction)",
    }
    for name, desc in descriptions.items():
        cmd = sub.add_parser(name, help=desc, description=desc)
        cmd.add_argument("--config", metavar="PATH", help="flat JSON config file")
        cmd.add_argument("--seed", type=int, help="root seed (overrides config)")
        cmd.add_argument(
            "--replicas", type=int, help="replica count (overrides config)"
        )
        cmd.add_argument(
            "--out", metavar="DIR", default="sbmlab_results", help="output directory"
        )
        cmd.add_argument(
            "--threads",
            type=int,
            default=1,
            help="worker processes; never changes the numbers",
        )
        if name == "tanaka":
            cmd.add_argument("--dim", type=int, choices=(2, 3), help="dimension")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        merged = _merge(args.command, _load_config(args.config), args)
        runner = _RUNNERS[args.command]
        kwargs = dict(merged)
        if args.command != "bounds":
            kwargs["threads"] = args.threads
        result = runner(**kwargs)
        written = _write_outputs(Path(args.out), result)
    except (ConfigError, DomainError) as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc)}}
        print(json.dumps(error, sort_keys=True))
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
