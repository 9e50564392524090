"""Paired-trial method comparison: run, aggregate, report."""
from __future__ import annotations

import csv
import io
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, build_world, substream
from .entropy import PrelecParams
from .mission import RunMetrics, Strategy, run_mission

METHOD_TAGS = ("beasst_adaptive", "behavior_fixed", "shannon", "random_frontier")
DEFAULT_METHODS = ("beasst_adaptive", "shannon", "behavior_fixed(0.8)", "behavior_fixed(2.0)",
                   "random_frontier")


@dataclass(frozen=True)
class MethodId:
    tag: str
    alpha: float | None = None
    notes: str = ""

    def __post_init__(self):
        if self.tag not in METHOD_TAGS:
            raise ValueError(f"unknown method {self.tag!r}")
        if (self.tag == "behavior_fixed") != (self.alpha is not None):
            raise ValueError("behavior_fixed needs an alpha; other methods take none")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def label(self) -> str:
        return f"behavior_fixed({self.alpha:g})" if self.tag == "behavior_fixed" else self.tag

    def strategy(self) -> Strategy:
        if self.tag == "beasst_adaptive":
            return Strategy("adaptive", "gp_utility", "shannon")
        if self.tag == "shannon":
            return Strategy(PrelecParams(1.0, 1.0), "gp_utility", "shannon")
        if self.tag == "behavior_fixed":
            return Strategy(PrelecParams(self.alpha, 1.0), "gp_utility", "behavioral", self.alpha)
        return Strategy(PrelecParams(1.0, 1.0), "random", "variance")


def parse_method(text: str) -> MethodId:
    text = text.strip()
    m = re.fullmatch(r"behavior_fixed\(\s*([^)]+?)\s*\)", text)
    if m:
        try:
            return MethodId("behavior_fixed", float(m.group(1)))
        except ValueError:
            raise ValueError(f"bad alpha in {text!r}") from None
    return MethodId(text)


def parse_methods(items) -> list[MethodId]:
    if isinstance(items, str):
        items = re.split(r",(?![^(]*\))", items)
    return [parse_method(t) for t in items if t.strip()]


def run_one(cfg: ScenarioConfig, method: MethodId, seed: int) -> RunMetrics:
    """One mission of ``method`` on the world drawn from ``seed``."""
    world, start = build_world(cfg, seed)
    out = run_mission(world, start, method.strategy(), cfg.seeker, cfg.exploration, cfg.mission,
                      rng=substream(seed, "trials"))
    return out.metrics


def _run_job(job):
    return run_one(*job)


def run_trials(cfg: ScenarioConfig, methods, n_trials: int, base_seed: int,
               workers: int = 1) -> dict[str, list[RunMetrics]]:
    """Trial i uses seed base_seed + i for every method (paired design).

    Results are keyed by method label in the given order, one entry per
    trial; ``workers`` > 1 farms missions out to processes without
    changing any number.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    methods = [m if isinstance(m, MethodId) else parse_method(m) for m in methods]
    jobs = [(cfg, m, base_seed + i) for m in methods for i in range(n_trials)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            flat = list(pool.map(_run_job, jobs))
    else:
        flat = [_run_job(j) for j in jobs]
    return {m.label: flat[k * n_trials:(k + 1) * n_trials] for k, m in enumerate(methods)}


@dataclass
class Aggregate:
    n: int
    n_success: int
    length_mean: float
    length_std: float
    steps_mean: float
    steps_std: float

    @property
    def failure_rate(self) -> float:
        return 1.0 - self.n_success / self.n

    @property
    def success_rate(self) -> float:
        return self.n_success / self.n

    @property
    def defined(self) -> bool:
        return self.n_success > 0


def _mean_std(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0


def aggregate(metrics: list[RunMetrics]) -> Aggregate:
    """Mean and sample std over successful runs; NaN when none succeeded."""
    if not metrics:
        raise ValueError("aggregate needs at least one run")
    ok = [m for m in metrics if m.success]
    if not ok:
        nan = float("nan")
        return Aggregate(len(metrics), 0, nan, nan, nan, nan)
    lm, ls = _mean_std([m.path_length for m in ok])
    sm, ss = _mean_std([m.steps for m in ok])
    return Aggregate(len(metrics), len(ok), lm, ls, sm, ss)


REPORT_COLUMNS = ["scenario", "method", "n_trials", "success_rate",
                  "length_mean", "length_std", "steps_mean", "steps_std"]


def report_rows(results) -> list[dict]:
    """Flatten {scenario: {method: [RunMetrics]}} into report rows, in insertion order."""
    rows = []
    for scenario, per_method in results.items():
        for method, runs in per_method.items():
            a = aggregate(runs)
            rows.append({"scenario": scenario, "method": method, "n_trials": a.n,
                         "success_rate": a.success_rate, "length_mean": a.length_mean,
                         "length_std": a.length_std, "steps_mean": a.steps_mean,
                         "steps_std": a.steps_std})
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([repr(float(r[c])) if isinstance(r[c], float) else r[c] for c in REPORT_COLUMNS])
    return buf.getvalue()


def parse_report(text: str) -> list[dict]:
    rows = []
    for r in csv.DictReader(io.StringIO(text)):
        rows.append({"scenario": r["scenario"], "method": r["method"], "n_trials": int(r["n_trials"]),
                     **{c: float(r[c]) for c in REPORT_COLUMNS[3:]}})
    return rows


def _pm(mu: float, sd: float, digits: int) -> str:
    if math.isnan(mu):
        return "undefined"
    return f"{mu:.{digits}f} ± {sd:.{digits}f}"


def format_table(rows: list[dict]) -> str:
    head = ["scenario", "method", "n", "success", "path length (m)", "ticks"]
    body = [[r["scenario"], r["method"], str(r["n_trials"]), f"{r['success_rate']:.2f}",
             _pm(r["length_mean"], r["length_std"], 1), _pm(r["steps_mean"], r["steps_std"], 1)]
            for r in rows]
    widths = [max(len(x) for x in col) for col in zip(head, *body)]
    lines = ["  ".join(x.ljust(w) for x, w in zip(head, widths)).rstrip(),
             "  ".join("-" * w for w in widths)]
    lines += ["  ".join(x.ljust(w) for x, w in zip(row, widths)).rstrip() for row in body]
    return "\n".join(lines) + "\n"


def emit_report(results) -> tuple[str, str]:
    """(CSV text, human-readable table) for {scenario: {method: [RunMetrics]}}."""
    rows = report_rows(results)
    return rows_to_csv(rows), format_table(rows)
