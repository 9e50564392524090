"""Command-line front end: beasst {field,seek,mission,bench,ratio}."""
from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from .bench import emit_report, parse_method, parse_methods, run_trials
from .config import ConfigError, ScenarioConfig, build_world, disturbance_for, parse_config, seek_mode, substream
from .entropy import PrelecParams, gradient_ratio, log_weight_gradient_scale, prelec_weight
from .fields import dump_grid, field_gradient
from .grid import format_map
from .mission import mission_trace_to_csv, run_mission
from .seeker import seek_trajectory, trace_to_csv


def _alpha_list(text: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("alphas must be positive")
    return vals


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path


def _load(args) -> ScenarioConfig:
    cfg = parse_config(args.config[0] if isinstance(args.config, list) else args.config)
    if args.seed is not None:
        cfg.scenario.seed = args.seed
    return cfg


# ------------------------------------------------------------------ subcommands

def cmd_field(args) -> int:
    cfg = _load(args)
    world, _ = build_world(cfg)
    truth = world.grid
    res = truth.resolution
    _write(args.out, "map.txt", format_map(truth))
    for i, fld in enumerate(world.fields):
        p = fld.strength_grid(truth)
        gnorm = np.zeros_like(p)
        for r, c in truth.free_cells():
            gnorm[r, c] = float(np.hypot(*field_gradient(fld, truth.cell_to_world((r, c)), cfg.seeker.grad_h)))
        params = fld.params()
        _write(args.out, f"field_s{i}_p.txt", dump_grid(p, res, fld.kind, params, "p"))
        for a in args.alpha:
            pre = PrelecParams(a, 1.0)
            w = prelec_weight(p, pre)
            g = np.where(truth.truth, 0.0, log_weight_gradient_scale(p, pre) * gnorm)
            tag = f"a{a:g}"
            _write(args.out, f"field_s{i}_w_{tag}.txt", dump_grid(w, res, fld.kind, {**params, "alpha": a}, "w"))
            _write(args.out, f"field_s{i}_gradlogw_{tag}.txt",
                   dump_grid(g, res, fld.kind, {**params, "alpha": a}, "grad_log_w"))
    print(f"wrote field dumps for {len(world.fields)} source(s) to {args.out}")
    return 0


def cmd_seek(args) -> int:
    cfg = _load(args)
    world, start = build_world(cfg)
    world.grid.reveal_all()
    fld = world.fields[0]
    grid = world.grid if cfg.seek.collisions else None
    trace = seek_trajectory(start, fld, cfg.seeker, seek_mode(cfg.seek.mode), disturbance_for(cfg, cfg.seed),
                            cfg.seek.max_steps, grid)
    _write(args.out, "seek_trace.csv", trace_to_csv(trace))
    print(f"converged={trace.converged} steps={trace.steps} path_length={trace.path_length:.3f}")
    return 0


def cmd_mission(args) -> int:
    cfg = _load(args)
    method = parse_method(args.method or "beasst_adaptive")
    world, start = build_world(cfg)
    out = run_mission(world, start, method.strategy(), cfg.seeker, cfg.exploration, cfg.mission,
                      rng=substream(cfg.seed, "trials"))
    _write(args.out, "mission_trace.csv", mission_trace_to_csv(out.trace))
    m = out.metrics
    print(f"success={m.success} ticks={m.steps} path_length={m.path_length:.3f} "
          f"time_per_source={m.time_per_source}")
    if not m.success:
        reason = out.state.failed or "tick budget exhausted"
        print(f"mission failed: {reason}", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    results = {}
    methods = parse_methods(args.method) if args.method else None
    for path in args.config:
        cfg = parse_config(path)
        seed = cfg.seed if args.seed is None else args.seed
        n = args.trials or cfg.trials.n_trials
        ms = methods or parse_methods(cfg.trials.methods)
        name = cfg.scenario.name
        if name in results:
            raise ConfigError(f"[scenario] name: duplicate scenario name {name!r}")
        results[name] = run_trials(cfg, ms, n, seed, workers=args.workers)
    csv_text, table = emit_report(results)
    _write(args.out, "bench_report.csv", csv_text)
    print(table, end="")
    return 0


def ratio_table(alphas, n_points: int = 1000) -> str:
    """CSV of the gradient ratio over an interior p grid, one column per alpha."""
    p = np.linspace(0.0, 1.0, n_points + 2)[1:-1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p"] + [f"ratio_a{a:g}" for a in alphas])
    cols = [gradient_ratio(p, PrelecParams(a, 1.0)) for a in alphas]
    for i, pi in enumerate(p):
        w.writerow([repr(float(pi))] + [repr(float(c[i])) for c in cols])
    return buf.getvalue()


def cmd_ratio(args) -> int:
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    _write(args.out, "ratio.csv", ratio_table(args.alpha, args.points))
    print(f"wrote ratio curves for alpha={args.alpha} to {args.out}")
    return 0


# ------------------------------------------------------------------ entry

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="beasst", description="Behavioral-entropy source seeking simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True, many=False):
        if needs_config:
            p.add_argument("--config", required=True, action="append" if many else "store", metavar="PATH")
        p.add_argument("--seed", type=int, default=None, help="overrides [scenario] seed")
        p.add_argument("--out", type=Path, default=Path("out"), metavar="DIR")

    p = sub.add_parser("field", help="grid dumps of p, w(p) and |grad log w|")
    common(p)
    p.add_argument("--alpha", type=_alpha_list, default=[1.0, 2.0], metavar="LIST")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("seek", help="single seek trajectory from the configured start")
    common(p)
    p.set_defaults(func=cmd_seek)

    p = sub.add_parser("mission", help="full explore/seek mission")
    common(p)
    p.add_argument("--method", default=None, help="method tag (default beasst_adaptive)")
    p.set_defaults(func=cmd_mission)

    p = sub.add_parser("bench", help="paired-trial comparison; repeat --config for a suite")
    common(p, many=True)
    p.add_argument("--method", default=None, metavar="LIST")
    p.add_argument("--trials", type=int, default=None, metavar="N")
    p.add_argument("--workers", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("ratio", help="gradient ratio curves over a p grid")
    common(p, needs_config=False)
    p.add_argument("--alpha", type=_alpha_list, default=[0.8, 1.0, 2.0], metavar="LIST")
    p.add_argument("--points", type=int, default=1000)
    p.set_defaults(func=cmd_ratio)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
