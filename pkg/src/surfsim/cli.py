"""Command line entry point.

Verbs:
  run           one seeded simulation; metric CSVs, figures, optional trace log
  sweep         cross-product of parameter overrides and seeds, aggregated CSVs
  validate      parse and check a config, print the resolved summary
  trace-replay  recompute metrics from a saved trace log
"""

import argparse
import itertools
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ScenarioConfig, apply_override, from_dict, parse_and_validate
from .engine import run_dissemination
from .errors import ConfigError
from .metrics import aggregate_runs, compute_report
from .trace import read_trace, write_trace


def _load_config(path: str) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_and_validate(text)


def _parse_seeds(spec: str) -> list[int]:
    if ":" in spec:
        lo, hi = spec.split(":", 1)
        lo, hi = int(lo), int(hi)
        if hi <= lo:
            raise ConfigError(f"empty seed range {spec!r}")
        return list(range(lo, hi))
    return [int(s) for s in spec.split(",")]


def _parse_sweep_values(text: str):
    values = []
    for token in text.split(","):
        try:
            values.append(json.loads(token))
        except json.JSONDecodeError:
            values.append(token)
    return values


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = run_dissemination(cfg, seed)
    report = compute_report(trace)

    from .report import render_run_figures, write_manifest, write_run_csvs
    outputs = write_run_csvs(report, out)
    if args.emit_trace:
        write_trace(trace, out / "trace.log")
        outputs.append("trace.log")
    if not args.no_figures:
        outputs += [f"figures/{name}" for name in render_run_figures(report, out / "figures")]
    write_manifest(out, "run", cfg, [seed], None, outputs)
    flag = " (truncated)" if trace.truncated else ""
    print(f"run finished: {len(trace.slots)} slots, "
          f"{len(trace.messages)} messages{flag}; wrote {out}")
    return 0


def _sweep_worker(payload):
    index, raw, seed, trace_path = payload
    cfg = from_dict(raw)
    trace = run_dissemination(cfg, seed)
    if trace_path is not None:
        write_trace(trace, trace_path)
    return index, seed, compute_report(trace)


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    base_raw = cfg.to_dict()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    sweep_keys = []
    sweep_values = []
    for item in args.sweep or []:
        key, _, values = item.partition("=")
        if not values:
            raise ConfigError(f"--sweep expects KEY=V1,V2,..., got {item!r}")
        sweep_keys.append(key)
        sweep_values.append(_parse_sweep_values(values))
    seeds = _parse_seeds(args.seeds) if args.seeds else [cfg.seed]

    cells = []
    for combo in itertools.product(*sweep_values) if sweep_keys else [()]:
        raw = base_raw
        for key, value in zip(sweep_keys, combo):
            raw = apply_override(raw, key, value)
        from_dict(raw)  # fail before any run if the cell is invalid
        cells.append((dict(zip(sweep_keys, combo)), raw))

    jobs = []
    for index, (_extra, raw) in enumerate(cells):
        for seed in seeds:
            trace_path = None
            if args.emit_trace:
                trace_dir = out / "traces"
                trace_dir.mkdir(parents=True, exist_ok=True)
                trace_path = trace_dir / f"cell{index:03d}_seed{seed}.log"
            jobs.append((index, raw, seed, trace_path))

    results = {}
    failed = None
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            try:
                for index, seed, report in pool.map(_sweep_worker, jobs):
                    results[(index, seed)] = report
            except Exception as exc:  # noqa: BLE001 - reported below
                failed = exc
    else:
        for payload in jobs:
            try:
                index, seed, report = _sweep_worker(payload)
            except Exception as exc:  # noqa: BLE001
                failed = exc
                break
            results[(index, seed)] = report
    if failed is not None:
        done = sorted({i for i, _ in results})
        print(f"sweep aborted: {failed}", file=sys.stderr)
        print(f"completed cells before failure: {done}", file=sys.stderr)
        return 1

    aggregated = []
    for index, (extra, _raw) in enumerate(cells):
        reports = [results[(index, seed)] for seed in sorted(seeds)]
        aggregated.append((extra, aggregate_runs(reports)))

    from .report import render_sweep_figures, write_manifest, write_sweep_csvs
    outputs = write_sweep_csvs(aggregated, out)
    if not args.no_figures:
        outputs += [f"figures/{name}"
                    for name in render_sweep_figures(aggregated, out / "figures")]
    sweep_spec = {"params": {k: v for k, v in zip(sweep_keys, sweep_values)},
                  "seeds": seeds}
    write_manifest(out, "sweep", cfg, seeds, sweep_spec, outputs)
    print(f"sweep finished: {len(cells)} cells x {len(seeds)} seeds; wrote {out}")
    return 0


def cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    print(f"config OK: strategy={cfg.strategy} N={cfg.node_count} "
          f"Ch={cfg.channel_count} ttl={cfg.ttl} seed={cfg.seed}")
    return 0


def cmd_trace_replay(args) -> int:
    trace = read_trace(args.trace)
    report = compute_report(trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    from .report import render_run_figures, write_manifest, write_run_csvs
    outputs = write_run_csvs(report, out)
    if not args.no_figures:
        outputs += [f"figures/{name}" for name in render_run_figures(report, out / "figures")]
    cfg = from_dict(trace.meta["config"])
    write_manifest(out, "trace-replay", cfg, [trace.seed], None, outputs)
    print(f"replayed {args.trace}; wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="surfsim",
        description="Cognitive radio dissemination simulator (SURF, RD, SB, CA)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="one seeded simulation")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int, default=None,
                     help="override the seed in the config")
    run.add_argument("--out", required=True)
    run.add_argument("--emit-trace", action="store_true",
                     help="also write the per-slot event log")
    run.add_argument("--no-figures", action="store_true")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="parameter x seed cross-product")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--sweep", action="append", metavar="KEY=V1,V2",
                       help="config key to sweep (dotted paths allowed); repeatable")
    sweep.add_argument("--seeds", default=None, metavar="A:B|A,B,C",
                       help="seed range (half-open) or list; default: config seed")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.add_argument("--emit-trace", action="store_true")
    sweep.add_argument("--no-figures", action="store_true")
    sweep.set_defaults(func=cmd_sweep)

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("--config", required=True)
    val.set_defaults(func=cmd_validate)

    replay = sub.add_parser("trace-replay", help="recompute metrics from a trace log")
    replay.add_argument("--trace", required=True)
    replay.add_argument("--out", required=True)
    replay.add_argument("--no-figures", action="store_true")
    replay.set_defaults(func=cmd_trace_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
