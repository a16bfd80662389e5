"""Command-line entry point: ``straggler-lab {analytic,simulate,sweep,calibrate}``.

Exit codes: 0 success, 1 calibration failure, 2 usage/config error,
3 domain/model error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__, analytic, calibrate, sim, sweep
from .errors import ConfigError, DomainError
from .model import config_from_dict

EXIT_OK = 0
EXIT_CALIBRATION = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

SEED_ENV = "STRAGGLER_LAB_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("job configuration (flags override --config)")
    g.add_argument("--config", type=Path, help="JSON config file")
    g.add_argument("--k", type=int)
    g.add_argument("--scheme", choices=("rep", "coded"))
    g.add_argument("--c", type=int, help="replicas per straggling task")
    g.add_argument("--n", type=int, help="code length")
    g.add_argument("--delta", type=float)
    g.add_argument("--dist", choices=("exp", "sexp", "pareto"))
    g.add_argument("--mu", type=float)
    g.add_argument("--D", type=float, help="job-level SExp shift, divided by k")
    g.add_argument("--per-task-shift", type=float, dest="shift",
                   help="per-task SExp shift, used as is")
    g.add_argument("--lambda", type=float, dest="lam")
    g.add_argument("--alpha", type=float)


def _load_json(path: Path) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def resolve_config_dict(args: argparse.Namespace) -> dict:
    doc: dict = dict(_load_json(args.config)) if args.config else {}
    if args.k is not None:
        doc["k"] = args.k
    if args.delta is not None:
        doc["delta"] = args.delta

    scheme = dict(doc.get("scheme") or {})
    if args.scheme is not None and args.scheme != scheme.get("type"):
        scheme = {"type": args.scheme}
    if args.c is not None:
        scheme["c"] = args.c
    if args.n is not None:
        scheme["n"] = args.n
    if scheme:
        doc["scheme"] = scheme

    dist = dict(doc.get("dist") or {})
    if args.dist is not None and args.dist != dist.get("type"):
        dist = {"type": args.dist}
    for key, value in (("mu", args.mu), ("D", args.D), ("shift", args.shift),
                       ("lambda", args.lam), ("alpha", args.alpha)):
        if value is not None:
            dist[key] = value
    if args.shift is not None:
        dist.pop("D", None)
    if dist:
        doc["dist"] = dist
    return doc


def _write_manifest(path: Path, args: argparse.Namespace, config: Any, seed: Optional[int],
                    outputs: Sequence[Path]) -> None:
    manifest = {
        "command": args.command,
        "argv": list(args.argv),
        "config": config,
        "seed": seed,
        "tool": "straggler-lab",
        "version": __version__,
        "outputs": [str(p) for p in outputs],
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _emit(payload: dict, args: argparse.Namespace, config: Any, seed: Optional[int]) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        outputs = [out]
        if getattr(args, "trace_out", None):
            outputs.append(Path(args.trace_out))
        _write_manifest(out.with_suffix(".manifest.json"), args, config, seed, outputs)


def cmd_analytic(args: argparse.Namespace) -> int:
    doc = resolve_config_dict(args)
    config = config_from_dict(doc)
    m = analytic.analytic_metrics(config, q_variant=args.q_variant, orientation=args.orientation)
    bad = [name for name in analytic.FIELDS if not math.isfinite(getattr(m, name))]
    if bad:
        raise DomainError(f"{', '.join(bad)} infinite for this configuration (Pareto alpha <= 1)")
    _emit({"config": config.to_dict(), "metrics": m.to_dict()}, args, config.to_dict(), None)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.reps < 2:
        raise ConfigError("--reps must be at least 2 to report standard errors")
    seed = _default_seed() if args.seed is None else args.seed
    config = config_from_dict(resolve_config_dict(args))
    est = sim.estimate(config, args.reps, seed, parallel=args.parallel)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8", newline="") as fh:
            sim.write_trace_csv(sim.iter_traces(config, seed, min(args.trace_reps, args.reps)), fh)
    _emit({"config": config.to_dict(), "estimate": est.to_dict()}, args, config.to_dict(), seed)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    if (args.spec is None) == (args.preset is None):
        raise ConfigError("give exactly one of a spec file or --preset")
    doc = sweep.preset(args.preset) if args.preset else _load_json(args.spec)
    if not isinstance(doc, dict):
        raise ConfigError("sweep spec must be a JSON object")
    overrides: dict = {}
    if args.reps is not None:
        if args.reps < 2:
            raise ConfigError("--reps must be at least 2")
        overrides["replications"] = args.reps
    seed = args.seed
    if seed is None and SEED_ENV in os.environ:
        seed = _default_seed()
    if seed is not None:
        overrides["seed"] = seed
    if args.engine is not None:
        overrides["engine"] = args.engine
    try:
        entries = sweep.entries_from_file_dict(doc, overrides)
    except KeyError as exc:
        raise ConfigError(f"sweep spec is missing field {exc.args[0]!r}") from None
    result = sweep.execute(entries, parallel=args.parallel)

    prefix = Path(args.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_suffix(".csv")
    json_path = prefix.with_suffix(".json")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        sweep.write_csv(result, fh)
    with open(json_path, "w", encoding="utf-8") as fh:
        sweep.write_json(result, fh)
    _write_manifest(prefix.with_suffix(".manifest.json"), args, {"spec": doc, "overrides": overrides},
                    seed, [csv_path, json_path])
    print(f"wrote {len(result.rows)} rows to {csv_path} and {json_path}")
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    seed = _default_seed() if args.seed is None else args.seed
    if args.reps < 2:
        raise ConfigError("--reps must be at least 2")
    report = calibrate.run(replications=args.reps, seed=seed, parallel=args.parallel)
    sys.stdout.write(calibrate.format_report(report))
    return EXIT_OK if report.passed else EXIT_CALIBRATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="straggler-lab",
        description="Latency and cost of delayed replicated/coded redundancy.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form expected latency and cost")
    _add_config_flags(p)
    p.add_argument("--q-variant", choices=analytic.Q_VARIANTS, default="printed")
    p.add_argument("--orientation", choices=analytic.ORIENTATIONS, default="resolved")
    p.add_argument("--out", help="also write the JSON here, with a manifest")
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="Monte Carlo estimate")
    _add_config_flags(p)
    p.add_argument("--reps", type=int, default=200_000)
    p.add_argument("--seed", type=int, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--trace-out", help="CSV of per-task records")
    p.add_argument("--trace-reps", type=int, default=100,
                   help="replications included in the trace (default 100)")
    p.add_argument("--out", help="also write the JSON here, with a manifest")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="run a sweep spec or preset, write CSV + JSON + manifest")
    p.add_argument("spec", nargs="?", type=Path)
    p.add_argument("--preset", choices=("fig2", "fig3", "fig4"))
    p.add_argument("--out", default="sweep", help="output path prefix (default ./sweep)")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--engine", choices=sweep.ENGINES)
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate", help="analytic vs simulation calibration table")
    p.add_argument("--reps", type=int, default=200_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    if getattr(args, "parallel", 1) < 1:
        parser.error("--parallel must be at least 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"straggler-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"straggler-lab: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
