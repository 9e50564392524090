"""Occupancy grid world: distances, A*, raycast sensing, frontiers, maps.

Cell (row, col) has its centre at world point (col*res, row*res). All
planning uses 8-connectivity with sqrt(2) diagonal cost, and a diagonal
move is only allowed when both orthogonal neighbours it squeezes between
are passable (no corner cutting).
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage

UNKNOWN, FREE, OCCUPIED = -1, 0, 1
SQRT2 = math.sqrt(2.0)

_MOVES = [
    (-1, 0, 1.0), (1, 0, 1.0), (0, -1, 1.0), (0, 1, 1.0),
    (-1, -1, SQRT2), (-1, 1, SQRT2), (1, -1, SQRT2), (1, 1, SQRT2),
]


class GridError(ValueError):
    pass


@dataclass
class OccupancyGrid:
    """Ground-truth occupancy plus the robot's partial map of it.

    ``truth`` is a bool array (True = occupied) of shape (height, width);
    ``known`` holds UNKNOWN/FREE/OCCUPIED per cell.
    """

    truth: np.ndarray
    resolution: float = 1.0
    known: np.ndarray = field(default=None)

    def __post_init__(self):
        self.truth = np.asarray(self.truth, dtype=bool)
        if self.truth.ndim != 2 or self.truth.size == 0:
            raise GridError("truth must be a non-empty 2-D array")
        if not self.resolution > 0:
            raise GridError("resolution must be positive")
        if self.known is None:
            self.known = np.full(self.truth.shape, UNKNOWN, dtype=np.int8)
        else:
            self.known = np.asarray(self.known, dtype=np.int8).copy()

    @classmethod
    def empty(cls, width: int, height: int, resolution: float = 1.0) -> "OccupancyGrid":
        return cls(np.zeros((height, width), dtype=bool), resolution)

    @property
    def height(self) -> int:
        return self.truth.shape[0]

    @property
    def width(self) -> int:
        return self.truth.shape[1]

    @property
    def shape(self):
        return self.truth.shape

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.truth.copy(), self.resolution, self.known.copy())

    def fresh(self) -> "OccupancyGrid":
        """Same world, nothing known yet."""
        return OccupancyGrid(self.truth.copy(), self.resolution)

    def reveal_all(self) -> None:
        self.known = np.where(self.truth, OCCUPIED, FREE).astype(np.int8)

    # coordinates
    def world_to_cell(self, point) -> tuple[int, int]:
        x, y = point
        return int(round(y / self.resolution)), int(round(x / self.resolution))

    def cell_to_world(self, cell) -> np.ndarray:
        r, c = cell
        return np.array([c * self.resolution, r * self.resolution])

    def in_bounds(self, cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def contains_point(self, point) -> bool:
        return self.in_bounds(self.world_to_cell(point))

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and not self.truth[cell]

    def is_free_point(self, point) -> bool:
        return self.is_free(self.world_to_cell(point))

    def is_known_free(self, cell) -> bool:
        return self.in_bounds(cell) and self.known[cell] == FREE

    def known_count(self) -> int:
        return int(np.count_nonzero(self.known != UNKNOWN))

    def free_cells(self) -> np.ndarray:
        return np.argwhere(~self.truth)

    def passable(self, use_known: bool = False) -> np.ndarray:
        return (self.known == FREE) if use_known else ~self.truth

    def nearest_free_cell(self, point, use_known: bool = False) -> tuple[int, int]:
        ok = self.passable(use_known)
        if not ok.any():
            raise GridError("grid has no free cells")
        cells = np.argwhere(ok)
        target = np.array(point)[::-1] / self.resolution
        i = int(np.argmin(((cells - target) ** 2).sum(axis=1)))
        return int(cells[i, 0]), int(cells[i, 1])


def _neighbours(passable: np.ndarray, r: int, c: int):
    h, w = passable.shape
    for dr, dc, cost in _MOVES:
        nr, nc = r + dr, c + dc
        if not (0 <= nr < h and 0 <= nc < w) or not passable[nr, nc]:
            continue
        if dr and dc and not (passable[r + dr, c] and passable[r, c + dc]):
            continue
        yield nr, nc, cost


def dijkstra_from_cells(passable: np.ndarray, starts, resolution: float = 1.0) -> np.ndarray:
    """Multi-source shortest-path distances (m); impassable/unreachable = inf."""
    dist = np.full(passable.shape, np.inf)
    heap = []
    for r, c in starts:
        if passable[r, c]:
            dist[r, c] = 0.0
            heap.append((0.0, r, c))
    heapq.heapify(heap)
    while heap:
        d, r, c = heapq.heappop(heap)
        if d > dist[r, c]:
            continue
        for nr, nc, cost in _neighbours(passable, r, c):
            nd = d + cost * resolution
            if nd < dist[nr, nc]:
                dist[nr, nc] = nd
                heapq.heappush(heap, (nd, nr, nc))
    return dist


def dijkstra_distance_map(grid: OccupancyGrid, sources, use_known: bool = False) -> list[np.ndarray]:
    """One shortest-path distance grid per source point."""
    passable = grid.passable(use_known)
    maps = []
    for s in sources:
        cell = grid.world_to_cell(s)
        if not grid.in_bounds(cell) or not passable[cell]:
            raise GridError(f"source {tuple(s)} lies on an occupied or out-of-bounds cell")
        maps.append(dijkstra_from_cells(passable, [cell], grid.resolution))
    return maps


def _octile(a, b) -> float:
    dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dr, dc) + (SQRT2 - 1.0) * min(dr, dc)


def a_star_cells(passable: np.ndarray, start, goal):
    """Cell path start..goal through passable cells, or None if unreachable."""
    start, goal = tuple(start), tuple(goal)
    h, w = passable.shape
    for r, c in (start, goal):
        if not (0 <= r < h and 0 <= c < w):
            return None
    if not (passable[start] and passable[goal]):
        return None
    g = {start: 0.0}
    came = {start: None}
    tie = 0
    heap = [(_octile(start, goal), tie, start)]
    closed = set()
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur == goal:
            path = []
            while cur is not None:
                path.append(cur)
                cur = came[cur]
            return path[::-1], g[goal]
        if cur in closed:
            continue
        closed.add(cur)
        for nr, nc, cost in _neighbours(passable, *cur):
            nxt = (nr, nc)
            ng = g[cur] + cost
            if ng < g.get(nxt, math.inf) - 1e-12:
                g[nxt] = ng
                came[nxt] = cur
                tie += 1
                heapq.heappush(heap, (ng + _octile(nxt, goal), tie, nxt))
    return None


def a_star_path(grid: OccupancyGrid, start, goal, use_known: bool = True):
    """World-point path from start to goal over known-free cells.

    Returns (points, cost_m), or None when the goal is unreachable.
    """
    res = a_star_cells(grid.passable(use_known), grid.world_to_cell(start), grid.world_to_cell(goal))
    if res is None:
        return None
    cells, cost = res
    return [grid.cell_to_world(c) for c in cells], cost * grid.resolution


def raycast_sense(grid: OccupancyGrid, pose, sensor_range: float, n_rays: int = 180) -> int:
    """Reveal cells visible from ``pose``; returns the number newly known.

    Rays march in quarter-cell increments, marking cells free until the
    first occupied cell, which is marked occupied and stops the ray.
    """
    before = grid.known_count()
    r0, c0 = grid.world_to_cell(pose)
    if grid.in_bounds((r0, c0)):
        grid.known[r0, c0] = OCCUPIED if grid.truth[r0, c0] else FREE
    step = grid.resolution / 4.0
    n_steps = max(1, int(math.ceil(sensor_range / step)))
    angles = np.linspace(0.0, 2 * np.pi, n_rays, endpoint=False)
    radii = step * np.arange(1, n_steps + 1)
    xs = pose[0] + np.cos(angles)[:, None] * radii[None, :]
    ys = pose[1] + np.sin(angles)[:, None] * radii[None, :]
    cols = np.rint(xs / grid.resolution).astype(int)
    rows = np.rint(ys / grid.resolution).astype(int)
    inside = (rows >= 0) & (rows < grid.height) & (cols >= 0) & (cols < grid.width)
    rr = np.where(inside, rows, 0)
    cc = np.where(inside, cols, 0)
    hit = inside & grid.truth[rr, cc]
    # a ray is alive up to and including its first hit, and only while inside
    blocked_before = np.cumsum(hit, axis=1) - hit > 0
    exited = np.cumsum(~inside, axis=1) > 0
    seen = inside & ~blocked_before & ~exited
    grid.known[rr[seen & ~hit], cc[seen & ~hit]] = FREE
    grid.known[rr[seen & hit], cc[seen & hit]] = OCCUPIED
    return grid.known_count() - before


@dataclass
class Frontier:
    """Connected frontier cells; ``centroid`` is a world point (m)."""

    cells: list
    centroid: np.ndarray
    centroid_cell: tuple

    @property
    def size(self) -> int:
        return len(self.cells)

    def anchor_cell(self) -> tuple[int, int]:
        """Member cell closest to the centroid (row-major tie-break)."""
        cells = np.array(self.cells)
        d = ((cells - np.array(self.centroid_cell)) ** 2).sum(axis=1)
        i = int(np.argmin(d))
        return int(cells[i, 0]), int(cells[i, 1])

    @property
    def key(self) -> tuple:
        return self.centroid_cell


def frontier_mask(grid: OccupancyGrid) -> np.ndarray:
    """Known-free cells with at least one 4-adjacent unknown cell."""
    unknown = grid.known == UNKNOWN
    adj = np.zeros_like(unknown)
    adj[1:, :] |= unknown[:-1, :]
    adj[:-1, :] |= unknown[1:, :]
    adj[:, 1:] |= unknown[:, :-1]
    adj[:, :-1] |= unknown[:, 1:]
    return (grid.known == FREE) & adj


def extract_frontiers(grid: OccupancyGrid) -> list[Frontier]:
    """8-connected components of frontier cells, ordered by centroid (row, col)."""
    mask = frontier_mask(grid)
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    out = []
    for k in range(1, n + 1):
        cells = np.argwhere(labels == k)
        mean_rc = cells.mean(axis=0)
        out.append(Frontier(
            [tuple(map(int, c)) for c in cells],
            np.array([mean_rc[1], mean_rc[0]]) * grid.resolution,
            (float(mean_rc[0]), float(mean_rc[1])),
        ))
    out.sort(key=lambda f: f.key)
    return out


# --------------------------------------------------------------------- maps

def parse_map(text: str) -> OccupancyGrid:
    """Map text: header ``W H RES`` then H rows of '.' (free) / '#' (wall)."""
    lines = [ln.rstrip("\n") for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise GridError("empty map file")
    try:
        w_s, h_s, res_s = lines[0].split()
        width, height, res = int(w_s), int(h_s), float(res_s)
    except ValueError as exc:
        raise GridError(f"bad map header {lines[0]!r}; expected 'W H RES'") from exc
    rows = lines[1:]
    if len(rows) != height:
        raise GridError(f"map header says {height} rows, found {len(rows)}")
    truth = np.zeros((height, width), dtype=bool)
    for r, row in enumerate(rows):
        row = row.strip()
        if len(row) != width:
            raise GridError(f"map row {r} has {len(row)} cells, expected {width}")
        for c, ch in enumerate(row):
            if ch not in ".#":
                raise GridError(f"unexpected map character {ch!r} at row {r}")
            truth[r, c] = ch == "#"
    return OccupancyGrid(truth, res)


def format_map(grid: OccupancyGrid) -> str:
    rows = ["".join("#" if v else "." for v in row) for row in grid.truth]
    return f"{grid.width} {grid.height} {grid.resolution:g}\n" + "\n".join(rows) + "\n"


def load_map(path) -> OccupancyGrid:
    return parse_map(Path(path).read_text())


def open_arena(width: int, height: int, resolution: float = 1.0, border: bool = True) -> OccupancyGrid:
    truth = np.zeros((height, width), dtype=bool)
    if border:
        truth[0, :] = truth[-1, :] = True
        truth[:, 0] = truth[:, -1] = True
    return OccupancyGrid(truth, resolution)


def room_layout(rows: int, cols: int, room_size: int, resolution: float = 1.0,
                door_width: int = 2, rng: np.random.Generator | None = None) -> OccupancyGrid:
    """rows x cols rooms of ``room_size`` interior cells, one door per shared wall.

    Door offsets along each wall are drawn from ``rng`` (centred when None).
    """
    if room_size < door_width + 2:
        raise GridError("room_size too small for the door width")
    h = rows * (room_size + 1) + 1
    w = cols * (room_size + 1) + 1
    truth = np.zeros((h, w), dtype=bool)
    for i in range(rows + 1):
        truth[i * (room_size + 1), :] = True
    for j in range(cols + 1):
        truth[:, j * (room_size + 1)] = True

    def offset():
        lo, hi = 1, room_size - door_width
        if rng is None:
            return (room_size - door_width) // 2 + 1
        return int(rng.integers(lo, hi + 1))

    for i in range(rows):
        for j in range(cols):
            top, left = i * (room_size + 1), j * (room_size + 1)
            if j + 1 < cols:  # door in the wall to the east
                o = offset()
                truth[top + o: top + o + door_width, left + room_size + 1] = False
            if i + 1 < rows:  # door in the wall to the south
                o = offset()
                truth[top + room_size + 1, left + o: left + o + door_width] = False
    return OccupancyGrid(truth, resolution)


def corridor_maze(cells_w: int, cells_h: int, corridor: int = 2, resolution: float = 1.0,
                  rng: np.random.Generator | None = None) -> OccupancyGrid:
    """Perfect maze (randomised DFS) with corridors ``corridor`` cells wide."""
    rng = rng if rng is not None else np.random.default_rng(0)
    pitch = corridor + 1
    h, w = cells_h * pitch + 1, cells_w * pitch + 1
    truth = np.ones((h, w), dtype=bool)
    seen = np.zeros((cells_h, cells_w), dtype=bool)

    def carve_cell(i, j):
        truth[i * pitch + 1: i * pitch + 1 + corridor, j * pitch + 1: j * pitch + 1 + corridor] = False

    stack = [(0, 0)]
    seen[0, 0] = True
    carve_cell(0, 0)
    while stack:
        i, j = stack[-1]
        options = [(i + di, j + dj) for di, dj in ((-1, 0), (1, 0), (0, -1), (0, 1))
                   if 0 <= i + di < cells_h and 0 <= j + dj < cells_w and not seen[i + di, j + dj]]
        if not options:
            stack.pop()
            continue
        ni, nj = options[int(rng.integers(len(options)))]
        seen[ni, nj] = True
        carve_cell(ni, nj)
        if ni != i:  # knock out the horizontal wall between them
            r = max(i, ni) * pitch
            truth[r, j * pitch + 1: j * pitch + 1 + corridor] = False
        else:
            c = max(j, nj) * pitch
            truth[i * pitch + 1: i * pitch + 1 + corridor, c] = False
        stack.append((ni, nj))
    return OccupancyGrid(truth, resolution)


def room_of(grid_rows: int, grid_cols: int, room_size: int, cell) -> tuple[int, int] | None:
    """Room index (i, j) containing a cell of a ``room_layout`` map, None on walls."""
    r, c = cell
    pitch = room_size + 1
    if r % pitch == 0 or c % pitch == 0:
        return None
    return r // pitch, c // pitch
