"""Command line front end.

    ebs-sim run   scenario.txt --out results/ --seed 3
    ebs-sim sweep scenario.txt --out results/ --jobs 4
    ebs-sim check scenario.txt --strict
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .metrics import export_csv
from .params import build_report
from .scenario import (ScenarioConfig, ScenarioError, apply_override,
                       build_topology, parse_scenario, resolved_text,
                       run_config)


def _schemes(cfg: ScenarioConfig) -> list[str]:
    return ["ebs", "mrf"] if cfg.mrf is not None else ["ebs"]


def _run_one(cfg: ScenarioConfig, scheme: str, seed: int, out_dir: str,
             name: str, trace: bool) -> dict:
    """Worker: one simulation run, exported to CSV.  Top level for pickling."""
    result = run_config(cfg, scheme=scheme, seed=seed, trace=trace)
    path = os.path.join(out_dir, name)
    export_csv(result.series, path)
    steady = result.series.steady_state()
    row = {"file": name, "scheme": scheme, "seed": seed}
    row.update(steady)
    row["warnings"] = "; ".join(result.warnings)
    if trace and result.trace:
        trace_path = path[:-4] + ".trace.txt"
        with open(trace_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(result.trace) + "\n")
    return row


_SUMMARY_FIELDS = ("file", "scheme", "seed", "parameter", "value",
                   "dphi_literal", "dphi_circular", "dplus", "duty_pct",
                   "thr_pct", "steady_pct", "flaps", "warnings")


def _write_summary(out_dir: str, rows: list[dict]) -> None:
    path = os.path.join(out_dir, "summary.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=_SUMMARY_FIELDS,
                                restval="", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _execute(jobs: int, tasks: list[tuple]) -> list[dict]:
    if jobs <= 1 or len(tasks) <= 1:
        return [_run_one(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(_run_one, *t) for t in tasks]
        return [f.result() for f in futures]


def _prepare_out(out_dir: str, cfg: ScenarioConfig) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved-config.txt"), "w",
              encoding="utf-8") as fh:
        fh.write(resolved_text(cfg))


def _cleanup(out_dir: str, rows: list[dict]) -> None:
    # drop partial outputs so a failed invocation leaves no half-written set
    for row in rows:
        try:
            os.remove(os.path.join(out_dir, row["file"]))
        except OSError:
            pass
    for name in ("summary.csv", "resolved-config.txt"):
        try:
            os.remove(os.path.join(out_dir, name))
        except OSError:
            pass


def cmd_run(args: argparse.Namespace) -> int:
    cfg = parse_scenario(args.scenario)
    if args.seed is not None:
        cfg = apply_override(cfg, "run.seed", args.seed)
    _prepare_out(args.out, cfg)
    tasks = [(cfg, scheme, cfg.seed, args.out, f"{scheme}_seed{cfg.seed}.csv",
              args.trace) for scheme in _schemes(cfg)]
    rows = []
    try:
        rows = _execute(args.jobs, tasks)
    except Exception:
        _cleanup(args.out, rows)
        raise
    _write_summary(args.out, rows)
    for row in rows:
        print(f"{row['scheme']} seed={row['seed']}: "
              f"dphi_circular={row['dphi_circular']:.6f} "
              f"duty={row['duty_pct']:.2f}% thr={row['thr_pct']:.2f}% "
              f"flaps={row['flaps']}")
        if row["warnings"]:
            print(f"  warning: {row['warnings']}", file=sys.stderr)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = parse_scenario(args.scenario)
    if cfg.sweep is None:
        raise ScenarioError(f"{args.scenario}: no sweep.parameter defined")
    if args.seed is not None:
        cfg = apply_override(cfg, "run.seed", args.seed)
    _prepare_out(args.out, cfg)
    short = cfg.sweep.parameter.split(".")[-1]
    tasks = []
    meta = []
    for value in cfg.sweep.values:
        point = apply_override(cfg, cfg.sweep.parameter, value)
        for scheme in _schemes(point):
            name = f"{scheme}_{short}={value}_seed{point.seed}.csv"
            tasks.append((point, scheme, point.seed, args.out, name, args.trace))
            meta.append((cfg.sweep.parameter, value))
    rows = []
    try:
        rows = _execute(args.jobs, tasks)
    except Exception:
        _cleanup(args.out, rows)
        raise
    for row, (param, value) in zip(rows, meta):
        row["parameter"] = param
        row["value"] = value
    _write_summary(args.out, rows)
    for row in rows:
        print(f"{row['scheme']} {short}={row['value']}: "
              f"dphi_circular={row['dphi_circular']:.6f} "
              f"duty={row['duty_pct']:.2f}% thr={row['thr_pct']:.2f}% "
              f"flaps={row['flaps']}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    cfg = parse_scenario(args.scenario)
    topology = build_topology(cfg.topology)
    nu = cfg.delay.worst_case()
    report = build_report(epsilon=cfg.protocol.epsilon, sigma=cfg.protocol.sigma,
                          t=cfg.protocol.period_t, c0=cfg.protocol.c0, nu=nu,
                          s_th=cfg.protocol.s_th, topology=topology,
                          adaptive=cfg.protocol.adaptive_c)
    for line in report.lines():
        print(line)
    if args.strict and not report.stable:
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ebs-sim",
        description="Duty-cycled firefly synchronization simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("scenario", help="scenario file")
        p.add_argument("--seed", type=int, default=None,
                       help="override run.seed")
        if out:
            p.add_argument("--out", default="results",
                           help="output directory (default: results)")
            p.add_argument("--trace", action="store_true",
                           help="write per-event trace files")
            p.add_argument("--jobs", type=int, default=1,
                           help="parallel worker processes")

    p_run = sub.add_parser("run", help="execute a scenario once")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="execute a scenario's sweep")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("check", help="print parameter analysis")
    common(p_check, out=False)
    p_check.add_argument("--strict", action="store_true",
                         help="exit with status 2 if the configuration is unstable")
    p_check.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
