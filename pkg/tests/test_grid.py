import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beasst.grid import (
    FREE,
    OCCUPIED,
    UNKNOWN,
    GridError,
    OccupancyGrid,
    a_star_cells,
    a_star_path,
    corridor_maze,
    dijkstra_distance_map,
    dijkstra_from_cells,
    extract_frontiers,
    format_map,
    frontier_mask,
    open_arena,
    parse_map,
    raycast_sense,
    room_layout,
    room_of,
)

from oracles import bellman_ford_8, components_8, frontier_cells_scan

TWO_SQRT2 = 2.8284271247461900976


def random_grid(seed, h=12, w=15, density=0.25):
    rng = np.random.default_rng(seed)
    return OccupancyGrid(rng.random((h, w)) < density)


class TestCoordinates:
    def test_roundtrip(self):
        g = OccupancyGrid.empty(10, 8, 0.5)
        assert g.world_to_cell(g.cell_to_world((3, 7))) == (3, 7)
        np.testing.assert_array_equal(g.cell_to_world((2, 5)), [2.5, 1.0])

    def test_bad_grid(self):
        with pytest.raises(GridError):
            OccupancyGrid(np.zeros((0, 3), bool))
        with pytest.raises(GridError):
            OccupancyGrid(np.zeros((3, 3), bool), resolution=0.0)


class TestDijkstra:
    def test_straight(self):
        g = OccupancyGrid.empty(5, 5)
        (d,) = dijkstra_distance_map(g, [(0.0, 0.0)])
        assert d[0, 3] == 3.0

    def test_diagonal(self):
        g = OccupancyGrid.empty(5, 5)
        (d,) = dijkstra_distance_map(g, [(0.0, 0.0)])
        assert d[2, 2] == pytest.approx(TWO_SQRT2, rel=1e-15)
        oracle = bellman_ford_8(~g.truth, (0, 0))
        assert d[2, 2] == pytest.approx(oracle[2, 2], rel=1e-15)

    def test_wall_with_gap_detours(self):
        g = OccupancyGrid.empty(11, 11)
        g.truth[5, :] = True
        g.truth[5, 9] = False
        (d,) = dijkstra_distance_map(g, [(2.0, 2.0)])
        oracle = bellman_ford_8(~g.truth, (2, 2))
        np.testing.assert_allclose(d, oracle, rtol=1e-12)
        assert d[8, 2] > math.hypot(0, 6) + 1e-9
        assert math.isinf(d[5, 0])

    def test_source_on_wall(self):
        g = open_arena(6, 6)
        with pytest.raises(GridError):
            dijkstra_distance_map(g, [(0.0, 0.0)])

    def test_resolution_scales(self):
        g = OccupancyGrid.empty(6, 6, 0.25)
        (d,) = dijkstra_distance_map(g, [(0.0, 0.0)])
        assert d[0, 4] == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_oracle_random(self, seed):
        g = random_grid(seed)
        free = np.argwhere(~g.truth)
        start = tuple(free[len(free) // 2])
        d = dijkstra_from_cells(~g.truth, [start])
        np.testing.assert_allclose(d, bellman_ford_8(~g.truth, start), rtol=1e-12)

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_symmetry(self, seed):
        g = random_grid(seed, 10, 10)
        free = np.argwhere(~g.truth)
        if len(free) < 2:
            return
        rng = np.random.default_rng(seed)
        a, b = (tuple(free[i]) for i in rng.choice(len(free), 2, replace=False))
        da = dijkstra_from_cells(~g.truth, [a])
        db = dijkstra_from_cells(~g.truth, [b])
        assert da[b] == pytest.approx(db[a], rel=1e-12) or (math.isinf(da[b]) and math.isinf(db[a]))


class TestAStar:
    def test_start_is_goal(self):
        g = OccupancyGrid.empty(5, 5)
        g.reveal_all()
        pts, cost = a_star_path(g, (2.0, 2.0), (2.0, 2.0))
        assert len(pts) == 1 and cost == 0.0

    def test_corridor(self):
        g = OccupancyGrid.empty(10, 3)
        g.reveal_all()
        pts, cost = a_star_path(g, (0.0, 1.0), (9.0, 1.0))
        assert cost == 9.0
        assert all(p[1] == 1.0 for p in pts)

    def test_unreachable(self):
        g = OccupancyGrid.empty(7, 7)
        g.truth[:, 3] = True
        g.reveal_all()
        assert a_star_path(g, (0.0, 0.0), (6.0, 6.0)) is None

    def test_unknown_cells_not_used(self):
        g = OccupancyGrid.empty(7, 7)
        assert a_star_path(g, (0.0, 0.0), (6.0, 0.0)) is None

    def test_out_of_bounds(self):
        assert a_star_cells(np.ones((3, 3), bool), (0, 0), (5, 5)) is None

    def test_no_corner_cutting(self):
        free = np.ones((2, 2), bool)
        free[0, 1] = False
        # the diagonal would clip the wall corner, so the path goes round
        path, cost = a_star_cells(free, (0, 0), (1, 1))
        assert cost == 2.0 and len(path) == 3
        free[1, 0] = False
        assert a_star_cells(free, (0, 0), (1, 1)) is None

    def test_cost_equals_dijkstra_on_random_instances(self):
        checked = 0
        for seed in range(400):
            g = random_grid(seed)
            g.reveal_all()
            rng = np.random.default_rng(seed)
            free = np.argwhere(g.known == FREE)
            a, b = (tuple(free[i]) for i in rng.choice(len(free), 2, replace=False))
            res = a_star_cells(g.passable(True), a, b)
            (d,) = dijkstra_distance_map(g, [g.cell_to_world(a)], use_known=True)
            if res is None:
                assert math.isinf(d[b])
                continue
            cells, cost = res
            assert cost == pytest.approx(d[b], rel=1e-12)
            for (r0, c0), (r1, c1) in zip(cells, cells[1:]):
                assert max(abs(r1 - r0), abs(c1 - c0)) == 1
            checked += 1
            if checked == 50:
                break
        assert checked == 50


class TestRaycast:
    def test_idempotent(self):
        g = open_arena(20, 20)
        assert raycast_sense(g, (10.0, 10.0), 5.0) > 0
        assert raycast_sense(g, (10.0, 10.0), 5.0) == 0

    def test_reveals_whole_open_grid(self):
        g = OccupancyGrid.empty(9, 9)
        raycast_sense(g, (4.0, 4.0), 20.0, n_rays=720)
        assert g.known_count() == 81

    def test_occlusion(self):
        g = OccupancyGrid.empty(20, 20)
        g.truth[:, 10] = True
        raycast_sense(g, (8.0, 10.0), 15.0, n_rays=720)
        assert g.known[10, 10] == OCCUPIED
        assert np.all(g.known[:, 11:] == UNKNOWN)

    @given(st.integers(0, 10_000))
    @settings(max_examples=20, deadline=None)
    def test_never_contradicts_truth_and_monotone(self, seed):
        g = random_grid(seed, 15, 15, 0.2)
        rng = np.random.default_rng(seed)
        before = 0
        for _ in range(4):
            pose = rng.uniform(0, 14, 2)
            raycast_sense(g, pose, rng.uniform(1, 8), 90)
            known = g.known != UNKNOWN
            assert np.all((g.known[known] == OCCUPIED) == g.truth[known])
            assert g.known_count() >= before
            before = g.known_count()


class TestFrontiers:
    def test_fully_known(self):
        g = open_arena(8, 8)
        g.reveal_all()
        assert extract_frontiers(g) == []

    def test_half_revealed(self):
        g = OccupancyGrid.empty(10, 10)
        g.known[:, :5] = FREE
        fr = extract_frontiers(g)
        assert len(fr) == 1
        assert sorted(fr[0].cells) == [(r, 4) for r in range(10)]
        np.testing.assert_allclose(fr[0].centroid, [4.0, 4.5])

    def test_two_rooms_two_components(self):
        g = room_layout(1, 3, 6, rng=None)
        # reveal the middle room and its walls: its two doors give two frontier pieces
        g.known[:, 7:15] = np.where(g.truth[:, 7:15], OCCUPIED, FREE)
        fr = extract_frontiers(g)
        assert len(fr) == 2
        comps = components_8(frontier_cells_scan(g.known))
        assert sorted(sorted(c) for c in comps) == sorted(sorted(f.cells) for f in fr)

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_exhaustive_scan(self, seed):
        rng = np.random.default_rng(seed)
        h, w = rng.integers(3, 30, 2)
        g = OccupancyGrid(rng.random((h, w)) < 0.2)
        for _ in range(3):
            raycast_sense(g, rng.uniform(0, [w - 1, h - 1]), rng.uniform(1, 10), 60)
        scan = frontier_cells_scan(g.known)
        fr = extract_frontiers(g)
        assert set().union(*[set(f.cells) for f in fr]) == scan if fr else scan == set()
        assert sorted(sorted(c) for c in components_8(scan)) == sorted(sorted(f.cells) for f in fr)
        keys = [f.key for f in fr]
        assert keys == sorted(keys)

    def test_mask_dtype(self):
        g = OccupancyGrid.empty(4, 4)
        assert frontier_mask(g).dtype == bool


class TestMaps:
    def test_roundtrip(self):
        g = room_layout(2, 2, 5, 0.5, rng=np.random.default_rng(2))
        back = parse_map(format_map(g))
        assert np.array_equal(back.truth, g.truth) and back.resolution == 0.5

    @pytest.mark.parametrize("text", ["", "3 2\n...\n...", "3 2 1\n...\n", "3 2 1\n...\n.x.", "3 2 1\n...\n...."])
    def test_bad_maps(self, text):
        with pytest.raises(GridError):
            parse_map(text)

    def test_rooms_connected(self):
        g = room_layout(2, 4, 12, rng=np.random.default_rng(5))
        free = np.argwhere(~g.truth)
        d = dijkstra_from_cells(~g.truth, [tuple(free[0])])
        assert np.all(np.isfinite(d[~g.truth]))
        assert g.shape == (27, 53)
        assert room_of(27, 53, 12, (3, 20)) == (0, 1)
        assert room_of(27, 53, 12, (13, 20)) is None

    def test_rooms_seeded(self):
        a = room_layout(2, 2, 8, rng=np.random.default_rng(1))
        b = room_layout(2, 2, 8, rng=np.random.default_rng(1))
        assert np.array_equal(a.truth, b.truth)

    def test_maze_connected(self):
        g = corridor_maze(5, 4, 2, rng=np.random.default_rng(3))
        free = np.argwhere(~g.truth)
        d = dijkstra_from_cells(~g.truth, [tuple(free[0])])
        assert np.all(np.isfinite(d[~g.truth]))

    def test_room_too_small(self):
        with pytest.raises(GridError):
            room_layout(1, 1, 3, door_width=2)
