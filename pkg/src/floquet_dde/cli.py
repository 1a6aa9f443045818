"""Command line entry point: ``floquet-dde {simulate,bundle,verify,sweep} --config FILE``.

Exit codes: 0 success, 1 battery failure, 2 invalid configuration,
3 bundle invariant failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from pydantic import ValidationError

from .config import (
    RunConfig, build_cocycle, build_initial, build_start, config_dict,
)
from .floquet_bundle import BundleError, FloquetBundle
from .oracles import FaultyCocycle, battery_passed, run_identity_battery
from .serialize import write_csv, write_json

EXIT_OK = 0
EXIT_BATTERY = 1
EXIT_CONFIG = 2
EXIT_BUNDLE = 3


class ConfigError(Exception):
    pass


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "config"
        msg = err["msg"].removeprefix("Value error, ")
        lines.append(f"{loc}: {msg}")
    return "; ".join(lines)


def _resolve(args) -> RunConfig:
    try:
        raw = json.loads(Path(args.config).read_text()) if args.config else {}
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    if args.seed is not None:
        raw.setdefault("run", {})["seed"] = args.seed
    if args.out is not None:
        raw.setdefault("output", {})["dir"] = args.out
    if getattr(args, "vary", None):
        raw.setdefault("sweep", {})["axis"] = args.vary
    try:
        cfg = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from exc
    try:
        build_cocycle(cfg)
        build_initial(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run(cfg: RunConfig, out: Path) -> None:
    if "json" in cfg.output.formats:
        write_json(out / "run.json", config_dict(cfg))


def cmd_simulate(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    cocycle = build_cocycle(cfg)
    rec = cocycle.trajectory(build_start(cfg), build_initial(cfg), float(cfg.run.horizon))
    if "csv" in cfg.output.formats:
        write_csv(out / "trajectory.csv", ["t", "z"], zip(rec.times, rec.heads))
    _write_run(cfg, out)
    return EXIT_OK


def compute_bundle(cfg: RunConfig):
    bundle = FloquetBundle(build_cocycle(cfg), cfg.run.tol, cfg.run.max_pullback)
    return bundle.report(build_start(cfg), cfg.run.horizon, cfg.run.seed)


def cmd_bundle(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    _write_run(cfg, out)
    try:
        report, orbit = compute_bundle(cfg)
    except BundleError as exc:
        print(f"bundle failure: {exc}", file=sys.stderr)
        return EXIT_BUNDLE
    if "json" in cfg.output.formats:
        write_json(out / "bundle.json", report.to_dict())
    if "csv" in cfg.output.formats:
        diag = orbit.pullback
        write_csv(out / "pullback_decay.csv", ["s", "d_s"], zip(diag.depths, diag.distances))
    bad = report.invariant_failures()
    if bad:
        print("bundle invariant failure: " + ", ".join(bad), file=sys.stderr)
        return EXIT_BUNDLE
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    cls = FaultyCocycle if cfg.verify.inject_fault else None
    cocycle = build_cocycle(cfg, cls) if cls else build_cocycle(cfg)
    results = run_identity_battery(cocycle, build_start(cfg), seed=cfg.run.seed,
                                   samples=cfg.verify.samples, tol=cfg.run.tol,
                                   max_pullback=cfg.run.max_pullback)
    write_json(out / "battery.json", [r.to_dict() for r in results])
    _write_run(cfg, out)
    if battery_passed(results):
        return EXIT_OK
    for r in results:
        if not r.passed:
            print(f"FAILED {r.name}: residual {r.value:.3e} > {r.tolerance:.1e}; witness {json.dumps(r.witness)}",
                  file=sys.stderr)
    return EXIT_BATTERY


SWEEP_FIELDS = ("lambda1", "lambda1_dual", "lambda2", "sigma", "pair_ww", "pullback_iters",
                "contraction_rate", "temperedness_slope", "grid_m", "p", "horizon", "seed")


def _sweep_configs(cfg: RunConfig) -> list[RunConfig]:
    base = config_dict(cfg)
    configs = []
    for value in cfg.sweep.values:
        raw = json.loads(json.dumps(base))
        if cfg.sweep.axis == "grid_m":
            raw["grid"]["m"] = int(value)
            if isinstance(raw["initial"]["tail"], list):
                raw["initial"]["tail"] = 0.0
        elif cfg.sweep.axis == "horizon":
            raw["run"]["horizon"] = int(value)
        else:
            raw["coeffs"][cfg.sweep.coeff_name] = float(value)
        try:
            configs.append(RunConfig.model_validate(raw))
        except ValidationError as exc:
            raise ConfigError(f"sweep value {value}: {_format_validation(exc)}") from exc
    return configs


def cmd_sweep(cfg: RunConfig, threads: int = 1) -> int:
    out = _outdir(cfg)
    configs = _sweep_configs(cfg)

    def job(c):
        try:
            return compute_bundle(c)[0]
        except BundleError as exc:
            return exc

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        reports = list(pool.map(job, configs))
    failed = [r for r in reports if isinstance(r, BundleError)]
    rows = []
    for value, rep in zip(cfg.sweep.values, reports):
        if isinstance(rep, BundleError):
            continue
        rows.append([value] + [getattr(rep, f) for f in SWEEP_FIELDS])
    write_csv(out / "sweep.csv", ["axis_value"] + list(SWEEP_FIELDS), rows)
    _write_run(cfg, out)
    bad = [r for r in reports if not isinstance(r, BundleError) and r.invariant_failures()]
    if failed or bad:
        for exc in failed:
            print(f"bundle failure: {exc}", file=sys.stderr)
        return EXIT_BUNDLE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="floquet-dde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "bundle", "verify", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int, help="run seed (overrides run.seed)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
        if name == "sweep":
            p.add_argument("--vary", choices=("grid_m", "horizon", "coefficient"),
                           help="sweep axis (overrides sweep.axis)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not (0 <= args.seed < 2 ** 64):
        print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _resolve(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "bundle":
            return cmd_bundle(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        return cmd_sweep(cfg, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
