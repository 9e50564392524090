"""Explore/seek mission loop over a partially known grid with several sources."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import P_FLOOR, PrelecParams
from .exploration import ExplorationParams, select_frontier
from .fields import SignalField
from .grid import UNKNOWN, OccupancyGrid, a_star_path, extract_frontiers, raycast_sense
from .seeker import SeekerParams, behavioral_step


@dataclass
class MissionParams:
    tau: float = 0.05
    tick_budget: int = 20000
    sensor_range: float = 6.0
    n_rays: int = 180
    stall_ticks: int = 15
    stall_cooldown: int = 40
    max_retries: int = 8

    def __post_init__(self):
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.tick_budget < 1 or self.n_rays < 4:
            raise ValueError("tick_budget must be >= 1 and n_rays >= 4")
        if not self.sensor_range > 0:
            raise ValueError("sensor_range must be positive")


@dataclass(frozen=True)
class Strategy:
    """How a mission explores and seeks.

    ``seek`` is "adaptive" or fixed PrelecParams; ``frontier_mode`` is one
    of gp_utility / nearest / random; ``uncertainty`` picks the frontier
    uncertainty term (variance, shannon or behavioral at behavior_alpha).
    """

    seek: object = "adaptive"
    frontier_mode: str = "gp_utility"
    uncertainty: str = "variance"
    behavior_alpha: float = 1.0

    def prelec(self) -> PrelecParams | None:
        return None if self.seek == "adaptive" else self.seek


@dataclass
class World:
    grid: OccupancyGrid
    sources: list
    fields: list

    def __post_init__(self):
        if len(self.sources) != len(self.fields):
            raise ValueError("one field per source is required")
        self.sources = [np.asarray(s, dtype=float) for s in self.sources]


@dataclass
class VirtualFrontier:
    source_id: int
    point: np.ndarray
    strength: float


@dataclass
class MissionState:
    pose: np.ndarray
    mode: str = "explore"
    s_detected: int = 0
    active_source: int | None = None
    virtual_frontiers: list = field(default_factory=list)
    found_sources: set = field(default_factory=set)
    tick: int = 0
    heading: float | None = None
    path: list = field(default_factory=list)
    target: tuple | None = None
    path_length: float = 0.0
    time_per_source: list = field(default_factory=list)
    cooldown: dict = field(default_factory=dict)
    stall_count: dict = field(default_factory=dict)
    seek_best: float = 0.0
    sightings: dict = field(default_factory=dict)
    seek_since: int = 0
    failed: str | None = None
    events: list = field(default_factory=list)


@dataclass
class RunMetrics:
    path_length: float = 0.0
    steps: int = 0
    success: bool = False
    time_per_source: list = field(default_factory=list)


@dataclass
class MissionOutcome:
    metrics: RunMetrics
    trace: list
    state: MissionState


TRACE_COLUMNS = ["tick", "mode", "x", "y", "best_p", "alpha", "s_detected", "action"]


def sense_sources(pose, fields: list[SignalField], found) -> np.ndarray:
    """One normalized reading per source; found sources read P_FLOOR."""
    return np.array([P_FLOOR if i in found else f.strength(pose) for i, f in enumerate(fields)])


def _upsert_virtual(state: MissionState, sid: int, point, strength: float) -> None:
    for vf in state.virtual_frontiers:
        if vf.source_id == sid:
            if strength > vf.strength:
                vf.point, vf.strength = np.array(point, dtype=float), strength
            return
    state.virtual_frontiers.append(VirtualFrontier(sid, np.array(point, dtype=float), strength))


def _drop_virtual(state: MissionState, sid: int) -> None:
    state.virtual_frontiers = [vf for vf in state.virtual_frontiers if vf.source_id != sid]


def _move(state: MissionState, new_pose) -> None:
    new_pose = np.asarray(new_pose, dtype=float)
    d = new_pose - state.pose
    n = float(np.hypot(*d))
    if n > 0:
        state.path_length += n
        state.heading = math.atan2(d[1], d[0])
    state.pose = new_pose


def _defer(state: MissionState, sid: int, params: MissionParams) -> None:
    """Put a source on cooldown and remember its best sighting as a virtual frontier."""
    k = state.stall_count.get(sid, 0) + 1
    state.stall_count[sid] = k
    state.cooldown[sid] = state.tick + params.stall_cooldown * k
    if sid in state.sightings:
        point, strength = state.sightings[sid]
        _upsert_virtual(state, sid, point, strength)
    if k > params.max_retries:
        state.failed = f"source {sid} deferred {k} times without being reached"


def _is_frontier_cell(grid: OccupancyGrid, cell) -> bool:
    if not grid.is_known_free(cell):
        return False
    r, c = cell
    for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
        if grid.in_bounds((nr, nc)) and grid.known[nr, nc] == UNKNOWN:
            return True
    return False


def _plan_explore(state: MissionState, world: World, strategy: Strategy,
                  explore_params: ExplorationParams, rng) -> str | None:
    """Set state.path/target; returns the action label or None if nothing is left."""
    grid = world.grid
    # deferred sources first, strongest last-seen reading wins
    for vf in sorted(state.virtual_frontiers, key=lambda v: (-v.strength, v.source_id)):
        if vf.source_id in state.found_sources or state.cooldown.get(vf.source_id, -1) > state.tick:
            continue
        planned = a_star_path(grid, state.pose, vf.point)
        if planned is None:
            _drop_virtual(state, vf.source_id)
            continue
        state.path = planned[0][1:]
        state.target = ("virtual", vf.source_id)
        return "to_virtual_frontier"
    frontiers = extract_frontiers(grid)
    while frontiers:
        chosen, used = select_frontier(grid, frontiers, state.pose, strategy.frontier_mode,
                                       explore_params, state.heading, rng)
        if chosen is None:
            return None
        planned = a_star_path(grid, state.pose, grid.cell_to_world(chosen.anchor_cell()))
        if planned is not None:
            state.path = planned[0][1:]
            state.target = ("frontier", chosen.anchor_cell())
            return f"explore_{used}"
        frontiers = [f for f in frontiers if f is not chosen]
    return None


def _target_stale(state: MissionState, grid: OccupancyGrid) -> bool:
    if not state.path or state.target is None:
        return True
    kind, key = state.target
    return kind == "frontier" and not _is_frontier_cell(grid, key)


def mission_tick(state: MissionState, world: World, strategy: Strategy, seeker: SeekerParams,
                 explore_params: ExplorationParams, params: MissionParams, rng) -> dict:
    """Advance the mission by one decision; mutates state and world.grid."""
    grid = world.grid
    readings = sense_sources(state.pose, world.fields, state.found_sources)
    eligible = [i for i in range(len(world.fields))
                if i not in state.found_sources and readings[i] > params.tau
                and state.cooldown.get(i, -1) <= state.tick]
    alpha = float("nan")
    best_p = float(max(readings)) if len(readings) else P_FLOOR
    for i, r in enumerate(readings):
        if i not in state.found_sources and r > params.tau and r > state.sightings.get(i, (None, 0.0))[1]:
            state.sightings[i] = (state.pose.copy(), float(r))

    if eligible:
        best = max(eligible, key=lambda i: (readings[i], -i))
        for i in eligible:
            if i != best:
                _upsert_virtual(state, i, state.pose, float(readings[i]))
        if state.mode != "seek" or state.active_source != best:
            state.events.append((state.tick, "explore->seek" if state.mode != "seek" else "switch", best))
            state.seek_best, state.seek_since = float(readings[best]), state.tick
        state.mode, state.active_source = "seek", best
        state.path, state.target = [], None
        nxt, rec = behavioral_step(state.pose, world.fields[best], seeker, strategy.prelec(), None, grid)
        alpha = rec.alpha
        best_p = float(readings[best])
        action = "seek"
        if best_p > state.seek_best:
            state.seek_best, state.seek_since = best_p, state.tick
        _move(state, nxt)
        if float(np.hypot(*(state.pose - world.sources[best]))) <= seeker.eps_converge:
            state.found_sources.add(best)
            state.s_detected = len(state.found_sources)
            state.time_per_source.append(state.tick + 1)
            _drop_virtual(state, best)
            state.active_source = None
            state.events.append((state.tick, "found", best))
            action = "source_found"
        elif rec.signal_lost or state.tick - state.seek_since >= params.stall_ticks:
            _defer(state, best, params)
            state.active_source = None
            state.events.append((state.tick, "seek_stalled", best))
            action = "seek_stalled"
    else:
        if state.mode == "seek":
            lost = state.active_source
            state.events.append((state.tick, "seek->explore", lost))
            if lost is not None:
                # reading fell below tau mid-seek: defer this source like a stall
                _defer(state, lost, params)
            state.active_source = None
        state.mode = "explore"
        action = "explore_step"
        if _target_stale(state, grid):
            planned = _plan_explore(state, world, strategy, explore_params, rng)
            if planned is None and state.cooldown:
                # nothing left to explore: retry deferred sources right away
                state.cooldown.clear()
                planned = _plan_explore(state, world, strategy, explore_params, rng)
            if planned is None:
                state.failed = "trapped: no signal, no virtual frontier, no reachable frontier"
                action = "failed"
            else:
                action = planned
        if state.path:
            _move(state, state.path.pop(0))
            if not state.path and state.target and state.target[0] == "virtual":
                _drop_virtual(state, state.target[1])
                state.target = None

    raycast_sense(grid, state.pose, params.sensor_range, params.n_rays)
    record = {"tick": state.tick, "mode": state.mode, "x": float(state.pose[0]), "y": float(state.pose[1]),
              "best_p": best_p, "alpha": alpha, "s_detected": state.s_detected, "action": action}
    state.tick += 1
    return record


def run_mission(world: World, start, strategy: Strategy, seeker: SeekerParams,
                explore_params: ExplorationParams | None = None, params: MissionParams | None = None,
                rng: np.random.Generator | None = None) -> MissionOutcome:
    """Loop mission ticks until every source is found, failure or budget."""
    params = params or MissionParams()
    explore_params = explore_params or ExplorationParams()
    if strategy.uncertainty != explore_params.uncertainty or \
            strategy.behavior_alpha != explore_params.behavior_alpha:
        explore_params = ExplorationParams(**{**explore_params.__dict__,
                                              "uncertainty": strategy.uncertainty,
                                              "behavior_alpha": strategy.behavior_alpha})
    rng = rng if rng is not None else np.random.default_rng(0)
    if not world.grid.is_free_point(start):
        raise ValueError(f"start {tuple(start)} is not on a free cell")
    state = MissionState(pose=np.asarray(start, dtype=float))
    raycast_sense(world.grid, state.pose, params.sensor_range, params.n_rays)
    n_sources = len(world.sources)
    trace = []
    while state.s_detected < n_sources and state.failed is None and state.tick < params.tick_budget:
        trace.append(mission_tick(state, world, strategy, seeker, explore_params, params, rng))
    metrics = RunMetrics(state.path_length, state.tick, state.s_detected == n_sources,
                         list(state.time_per_source))
    return MissionOutcome(metrics, trace, state)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def mission_trace_to_csv(trace: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for row in trace:
        w.writerow([_fmt(row[c]) for c in TRACE_COLUMNS])
    return buf.getvalue()


def mission_trace_from_csv(text: str) -> list[dict]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        out.append({"tick": int(row["tick"]), "mode": row["mode"], "x": float(row["x"]),
                    "y": float(row["y"]), "best_p": float(row["best_p"]), "alpha": float(row["alpha"]),
                    "s_detected": int(row["s_detected"]), "action": row["action"]})
    return out
