"""Scenario configuration: sectioned key = value text, validation and world building.

A scenario file looks like::

    [scenario]
    name = four_rooms
    seed = 7

    [map]
    kind = rooms
    rows = 2
    cols = 2

    [sources]
    placement = random_rooms
    count = 2

Every section and key is optional; missing ones take the defaults of the
dataclasses below. Unknown sections or keys are rejected. Points are
written ``x,y`` and point lists ``x,y; x,y``.
"""
from __future__ import annotations

import configparser
import dataclasses
import io
import re
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exploration import ExplorationParams
from .fields import ExpDecayField, LogNormalField, PathLossField
from .grid import OccupancyGrid, corridor_maze, load_map, open_arena, room_layout, room_of
from .mission import MissionParams, World
from .seeker import DisturbanceModel, SeekerParams


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending key."""


def substream(seed: int, name: str, *extra: int) -> np.random.Generator:
    """Independent generator for one named use of a scenario seed."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode()), *map(int, extra)])


@dataclass
class ScenarioSpec:
    name: str = "scenario"
    seed: int = 0


@dataclass
class MapSpec:
    kind: str = "rooms"  # rooms | maze | arena | file
    resolution: float = 1.0
    rows: int = 2
    cols: int = 2
    room_size: int = 14
    door_width: int = 2
    width: int = 40
    height: int = 40
    cells_w: int = 6
    cells_h: int = 6
    corridor: int = 2
    path: str = ""


@dataclass
class FieldSpec:
    kind: str = "exp_decay"  # exp_decay | path_loss | log_normal
    kappa: float = 0.2
    l0_dbm: float = -40.0
    n_exp: float = 1.5
    wall_db: float = 6.0
    fading_sigma: float = 1.0
    sigma: float = 1.0
    scale: float = 8.0
    skew: float = 1.6
    aspect: float = 0.7
    angle: float = 0.5


@dataclass
class SourcesSpec:
    placement: str = "random_rooms"  # fixed | random_rooms | random_free
    points: list = field(default_factory=list)
    count: int = 2
    margin: int = 2


@dataclass
class StartSpec:
    placement: str = "empty_room"  # fixed | empty_room | random_free
    point: list = field(default_factory=list)
    min_distance: float = 10.0


@dataclass
class SeekSpec:
    mode: str = "adaptive"  # adaptive | alpha,beta
    max_steps: int = 1000
    collisions: bool = True


@dataclass
class DisturbanceSpec:
    omega_bar: float = 0.0
    kind: str = "none"
    direction: float = 0.0


@dataclass
class TrialsSpec:
    n_trials: int = 10
    methods: list = field(default_factory=lambda: [
        "beasst_adaptive", "shannon", "behavior_fixed(0.8)", "behavior_fixed(2.0)", "random_frontier"])


@dataclass
class ScenarioConfig:
    scenario: ScenarioSpec = dataclasses.field(default_factory=ScenarioSpec)
    map: MapSpec = dataclasses.field(default_factory=MapSpec)
    field: FieldSpec = dataclasses.field(default_factory=FieldSpec)
    sources: SourcesSpec = dataclasses.field(default_factory=SourcesSpec)
    start: StartSpec = dataclasses.field(default_factory=StartSpec)
    seeker: SeekerParams = dataclasses.field(default_factory=lambda: SeekerParams(max_backtracks=3))
    seek: SeekSpec = dataclasses.field(default_factory=SeekSpec)
    disturbance: DisturbanceSpec = dataclasses.field(default_factory=DisturbanceSpec)
    exploration: ExplorationParams = dataclasses.field(default_factory=ExplorationParams)
    mission: MissionParams = dataclasses.field(default_factory=MissionParams)
    trials: TrialsSpec = dataclasses.field(default_factory=TrialsSpec)

    @property
    def n_sources(self) -> int:
        return len(self.sources.points) if self.sources.placement == "fixed" else self.sources.count

    @property
    def seed(self) -> int:
        return self.scenario.seed


SECTIONS = [f.name for f in dataclasses.fields(ScenarioConfig)]
_POINT_KEYS = {("start", "point")}
_POINT_LIST_KEYS = {("sources", "points")}
_STR_LIST_KEYS = {("trials", "methods")}


# ------------------------------------------------------------------ values

def _parse_point(text: str, where: str) -> list:
    parts = [t.strip() for t in text.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"{where}: expected 'x,y', got {text!r}")
    try:
        return [float(parts[0]), float(parts[1])]
    except ValueError:
        raise ConfigError(f"{where}: expected numbers in {text!r}") from None


def _parse_value(section: str, key: str, text: str, default):
    where = f"[{section}] {key}"
    text = text.strip()
    if (section, key) in _POINT_KEYS:
        return [] if not text else _parse_point(text, where)
    if (section, key) in _POINT_LIST_KEYS:
        return [_parse_point(t, where) for t in text.split(";") if t.strip()]
    if (section, key) in _STR_LIST_KEYS:
        return [t for t in (s.strip() for s in re.split(r",(?![^(]*\))", text)) if t]
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "yes", "no", "1", "0"):
                raise ValueError
            return low in ("true", "yes", "1")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"{where}: invalid value {text!r}") from None
    return text


def _format_value(section: str, key: str, value) -> str:
    if (section, key) in _POINT_KEYS:
        return ",".join(repr(float(v)) for v in value)
    if (section, key) in _POINT_LIST_KEYS:
        return "; ".join(",".join(repr(float(v)) for v in p) for p in value)
    if (section, key) in _STR_LIST_KEYS:
        return ", ".join(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


# ------------------------------------------------------------------ parse / serialize

def parse_config_text(text: str, base_dir=None) -> ScenarioConfig:
    """Parse and validate; a relative ``[map] path`` is taken from ``base_dir``."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";;"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    defaults = ScenarioConfig()
    built = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
    for section in SECTIONS:
        proto = getattr(defaults, section)
        names = {f.name for f in dataclasses.fields(proto)}
        kw = {}
        if cp.has_section(section):
            for key, raw in cp.items(section):
                if key not in names:
                    raise ConfigError(f"unknown key [{section}] {key}")
                kw[key] = _parse_value(section, key, raw, getattr(proto, key))
        try:
            built[section] = dataclasses.replace(proto, **kw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {exc}") from None
    cfg = ScenarioConfig(**built)
    if cfg.map.kind == "file" and cfg.map.path and base_dir is not None and not Path(cfg.map.path).is_absolute():
        cfg.map.path = str(Path(base_dir) / cfg.map.path)
    validate(cfg)
    return cfg


def parse_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, Path(path).parent)


def serialize_config(cfg: ScenarioConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for section in SECTIONS:
        part = getattr(cfg, section)
        cp[section] = {f.name: _format_value(section, f.name, getattr(part, f.name))
                       for f in dataclasses.fields(part)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


# ------------------------------------------------------------------ validation

def validate(cfg: ScenarioConfig) -> None:
    m = cfg.map
    if m.kind not in ("rooms", "maze", "arena", "file"):
        raise ConfigError(f"[map] kind: unknown map kind {m.kind!r}")
    if not m.resolution > 0:
        raise ConfigError("[map] resolution must be positive")
    if m.kind == "file" and not m.path:
        raise ConfigError("[map] path is required when kind = file")
    if cfg.field.kind not in ("exp_decay", "path_loss", "log_normal"):
        raise ConfigError(f"[field] kind: unknown field kind {cfg.field.kind!r}")
    s = cfg.sources
    if s.placement not in ("fixed", "random_rooms", "random_free"):
        raise ConfigError(f"[sources] placement: unknown placement {s.placement!r}")
    if s.placement == "fixed" and not s.points:
        raise ConfigError("[sources] points: required when placement = fixed")
    if s.placement != "fixed" and s.count < 1:
        raise ConfigError("[sources] count must be at least 1")
    if s.placement == "random_rooms" and m.kind != "rooms":
        raise ConfigError("[sources] placement: random_rooms needs [map] kind = rooms")
    if s.placement == "random_rooms" and s.count > m.rows * m.cols:
        raise ConfigError("[sources] count exceeds the number of rooms")
    st = cfg.start
    if st.placement not in ("fixed", "empty_room", "random_free"):
        raise ConfigError(f"[start] placement: unknown placement {st.placement!r}")
    if st.placement == "fixed" and not st.point:
        raise ConfigError("[start] point: required when placement = fixed")
    if st.placement == "empty_room" and m.kind != "rooms":
        raise ConfigError("[start] placement: empty_room needs [map] kind = rooms")
    try:
        seek_mode(cfg.seek.mode)
    except ValueError as exc:
        raise ConfigError(f"[seek] mode: {exc}") from None
    if cfg.trials.n_trials < 1:
        raise ConfigError("[trials] n_trials must be at least 1")
    try:
        DisturbanceModel(cfg.disturbance.omega_bar, cfg.disturbance.kind)
    except ValueError as exc:
        raise ConfigError(f"[disturbance] {exc}") from None
    from .bench import parse_method  # bench imports this module
    for tag in cfg.trials.methods:
        try:
            parse_method(tag)
        except ValueError as exc:
            raise ConfigError(f"[trials] methods: {exc}") from None
    # fixed points can be checked without drawing any randomness
    if s.placement == "fixed" or st.placement == "fixed":
        grid = build_grid(cfg, cfg.seed)
        if s.placement == "fixed":
            for i, p in enumerate(s.points):
                if not grid.is_free_point(p):
                    raise ConfigError(f"[sources] points: source {i} at {tuple(p)} is not on a free cell")
        if st.placement == "fixed" and not grid.is_free_point(st.point):
            raise ConfigError(f"[start] point: {tuple(st.point)} is not on a free cell")


def seek_mode(text: str):
    """"adaptive" or an (alpha, beta) tuple parsed from "a,b"."""
    text = text.strip()
    if text == "adaptive":
        return "adaptive"
    try:
        a, b = (float(t) for t in text.split(","))
    except ValueError:
        raise ValueError(f"expected 'adaptive' or 'alpha,beta', got {text!r}") from None
    if not (a > 0 and b > 0):
        raise ValueError("alpha and beta must be positive")
    return (a, b)


# ------------------------------------------------------------------ world building

def build_grid(cfg: ScenarioConfig, seed: int) -> OccupancyGrid:
    m = cfg.map
    rng = substream(seed, "map")
    if m.kind == "rooms":
        return room_layout(m.rows, m.cols, m.room_size, m.resolution, m.door_width, rng)
    if m.kind == "maze":
        return corridor_maze(m.cells_w, m.cells_h, m.corridor, m.resolution, rng)
    if m.kind == "arena":
        return open_arena(m.width, m.height, m.resolution)
    try:
        return load_map(m.path)
    except OSError as exc:
        raise ConfigError(f"[map] path: cannot read {m.path}: {exc.strerror}") from None


def _interior_cells(grid: OccupancyGrid, cfg: ScenarioConfig, margin: int) -> dict:
    """Free cells keyed by room, at least ``margin`` cells away from any wall."""
    m = cfg.map
    pitch = m.room_size + 1
    rooms: dict = {}
    for r, c in grid.free_cells():
        room = room_of(grid.height, grid.width, m.room_size, (r, c))
        if room is None:
            continue
        if min(r % pitch, c % pitch, pitch - r % pitch, pitch - c % pitch) <= margin:
            continue
        rooms.setdefault(room, []).append((int(r), int(c)))
    return rooms


def place_sources(cfg: ScenarioConfig, grid: OccupancyGrid, seed: int) -> list:
    s = cfg.sources
    if s.placement == "fixed":
        return [np.array(p, dtype=float) for p in s.points]
    rng = substream(seed, "placement")
    if s.placement == "random_rooms":
        rooms = _interior_cells(grid, cfg, s.margin)
        keys = sorted(rooms)
        chosen = rng.choice(len(keys), size=s.count, replace=False)
        out = []
        for k in chosen:
            cells = rooms[keys[int(k)]]
            out.append(grid.cell_to_world(cells[int(rng.integers(len(cells)))]))
        return out
    free = grid.free_cells()
    picks = rng.choice(len(free), size=s.count, replace=False)
    return [grid.cell_to_world(tuple(free[int(i)])) for i in picks]


def place_start(cfg: ScenarioConfig, grid: OccupancyGrid, sources: list, seed: int) -> np.ndarray:
    st = cfg.start
    if st.placement == "fixed":
        return np.array(st.point, dtype=float)
    rng = substream(seed, "start")
    if st.placement == "empty_room":
        rooms = _interior_cells(grid, cfg, 1)
        taken = {room_of(grid.height, grid.width, cfg.map.room_size, grid.world_to_cell(s)) for s in sources}
        keys = [k for k in sorted(rooms) if k not in taken]
        if not keys:
            raise ConfigError("[start] placement: every room holds a source")
        cells = rooms[keys[int(rng.integers(len(keys)))]]
        return grid.cell_to_world(cells[int(rng.integers(len(cells)))])
    free = grid.free_cells()
    far = [tuple(c) for c in free
           if all(np.hypot(*(grid.cell_to_world(tuple(c)) - s)) >= st.min_distance for s in sources)]
    if not far:
        raise ConfigError("[start] min_distance: no free cell is far enough from the sources")
    return grid.cell_to_world(far[int(rng.integers(len(far)))])


def build_fields(cfg: ScenarioConfig, grid: OccupancyGrid, sources: list, seed: int) -> list:
    f = cfg.field
    if f.kind == "exp_decay":
        return [ExpDecayField(grid, [s], f.kappa) for s in sources]
    if f.kind == "path_loss":
        base = int(substream(seed, "fading").integers(2 ** 31))
        return [PathLossField(grid, s, f.l0_dbm, f.n_exp, f.wall_db, f.fading_sigma, seed=base + i)
                for i, s in enumerate(sources)]
    return [LogNormalField(s, f.sigma, f.scale, f.skew, f.aspect, f.angle, grid) for s in sources]


def build_world(cfg: ScenarioConfig, seed: int | None = None):
    """(World, start) for one seed; the grid starts fully unknown."""
    seed = cfg.seed if seed is None else seed
    truth = build_grid(cfg, seed)
    sources = place_sources(cfg, truth, seed)
    for i, s in enumerate(sources):
        if not truth.is_free_point(s):
            raise ConfigError(f"[sources] points: source {i} at {tuple(s)} is not on a free cell")
    start = place_start(cfg, truth, sources, seed)
    if not truth.is_free_point(start):
        raise ConfigError(f"[start] point: {tuple(start)} is not on a free cell")
    fields = build_fields(cfg, truth, sources, seed)
    return World(truth.fresh(), sources, fields), start


def disturbance_for(cfg: ScenarioConfig, seed: int) -> DisturbanceModel:
    d = cfg.disturbance
    stream_seed = int(substream(seed, "disturbance").integers(2 ** 31))
    return DisturbanceModel(d.omega_bar, d.kind, stream_seed, d.direction)
