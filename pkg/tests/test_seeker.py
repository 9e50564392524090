import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from beasst.entropy import P_FLOOR, PrelecParams
from beasst.fields import ExpDecayField, FunctionField, LogNormalField
from beasst.grid import OccupancyGrid, open_arena
from beasst.seeker import (
    DisturbanceModel,
    SeekerParams,
    adaptive_alpha,
    behavioral_step,
    move_with_collisions,
    seek_trajectory,
    trace_from_csv,
    trace_to_csv,
)

from oracles import shannon_step


def lognormal(scale=4.0):
    return LogNormalField((30.0, 30.0), sigma=1.0, scale=scale, skew=1.6, aspect=0.7, angle=0.5)


def start_above(field, rng, tau=0.05, lo=2, hi=58):
    while True:
        s = rng.uniform(lo, hi, 2)
        if field.strength(s) >= tau:
            return s


class TestParams:
    def test_alpha_order_names_both(self):
        with pytest.raises(ValueError, match="alpha_min.*alpha_max"):
            SeekerParams(alpha_min=3.0, alpha_max=2.0)

    @pytest.mark.parametrize("kw", [dict(tau=0.0), dict(tau=1.0), dict(rho_p0=1.0), dict(gamma=0.0),
                                    dict(max_step=-1.0), dict(max_backtracks=-1), dict(rho_k=0.0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SeekerParams(**kw)

    def test_for_resolution(self):
        p = SeekerParams.for_resolution(0.5)
        assert (p.gamma, p.max_step, p.eps_converge, p.grad_h) == (0.5, 2.5, 0.75, 0.5)


class TestAdaptiveAlpha:
    def test_midpoint(self):
        p = SeekerParams()
        assert adaptive_alpha(p.rho_p0, p) == pytest.approx(1.5, rel=1e-15)

    def test_limits(self):
        p = SeekerParams(rho_k=500.0)
        assert adaptive_alpha(0.0, p) == pytest.approx(2.5, abs=1e-12)
        assert adaptive_alpha(1.0, p) == pytest.approx(0.5, abs=1e-12)

    def test_sweep_bounded_and_monotone(self):
        p = SeekerParams()
        vals = np.array([adaptive_alpha(x, p) for x in np.linspace(0, 1, 1000)])
        assert np.all((vals >= 0.5) & (vals <= 2.5))
        assert np.all(np.diff(vals) <= 0)

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_nonincreasing_pairs(self, a, b):
        p = SeekerParams()
        lo, hi = min(a, b), max(a, b)
        assert adaptive_alpha(hi, p) <= adaptive_alpha(lo, p)


class TestDisturbance:
    @given(st.floats(0, 10), st.integers(0, 2 ** 31), st.sampled_from(["none", "uniform_ball", "fixed_direction"]))
    def test_norm_bound(self, bar, seed, kind):
        d = DisturbanceModel(bar, kind, seed, direction=1.1)
        for _ in range(20):
            assert np.hypot(*d.sample()) <= bar * (1 + 1e-12)

    def test_seeded(self):
        a = DisturbanceModel(1.0, "uniform_ball", 3)
        b = DisturbanceModel(1.0, "uniform_ball", 3)
        assert all(np.array_equal(a.sample(), b.sample()) for _ in range(5))

    def test_rejects(self):
        with pytest.raises(ValueError):
            DisturbanceModel(-1.0)
        with pytest.raises(ValueError):
            DisturbanceModel(1.0, "gusty")


class TestStep:
    def test_at_source_small(self):
        grid = open_arena(40, 40)
        f = ExpDecayField(grid, [(20.0, 20.0)], kappa=0.2)
        for a in (1.0, 2.0):
            _, rec = behavioral_step((20.0, 20.0), f, SeekerParams(), PrelecParams(a, 1.0))
            assert rec.step_norm <= grid.resolution

    def test_shannon_matches_oracle(self):
        rng = np.random.default_rng(7)
        f = lognormal(8.0)
        p = SeekerParams(gamma=3.0)
        for _ in range(50):
            x = rng.uniform(5, 55, 2)
            nxt, _ = behavioral_step(x, f, p, PrelecParams(1, 1))
            np.testing.assert_allclose(nxt, shannon_step(x, f, p.gamma, p.max_step, p.grad_h), rtol=1e-12)

    def test_shannon_matches_oracle_sampled_gradient(self):
        f = FunctionField(lambda x: math.exp(-0.05 * math.hypot(x[0] - 3, x[1] + 2)), (3, -2))
        p = SeekerParams(gamma=2.0, grad_h=0.5)
        for x in [(10.0, 4.0), (-7.5, 1.0), (3.0, 12.0)]:
            nxt, _ = behavioral_step(x, f, p, PrelecParams(1, 1))
            np.testing.assert_allclose(nxt, shannon_step(x, f, 2.0, p.max_step, 0.5), rtol=1e-12)

    def test_closed_form_exp_1d(self):
        kappa, x0 = 0.1, 20.0
        f = FunctionField(lambda x: math.exp(-kappa * abs(x[0])), (0, 0))
        p = SeekerParams(gamma=1.0, max_step=1e9, grad_h=1e-5)
        _, rec = behavioral_step((x0, 0.0), f, p, PrelecParams(2.0, 1.0))
        want = 1.0 * 2.0 * kappa * (kappa * abs(x0)) ** (2.0 - 1) * math.copysign(1, -x0)
        assert want == pytest.approx(-0.4, rel=1e-15)
        assert rec.scale * rec.grad[0] == pytest.approx(want, rel=1e-4)
        assert rec.step[0] == pytest.approx(want, rel=1e-4)

    def test_clipped(self):
        f = lognormal(8.0)
        nxt, rec = behavioral_step((5.0, 5.0), f, SeekerParams(gamma=1e4), PrelecParams(1, 1))
        assert rec.clipped and rec.step_norm == pytest.approx(5.0)

    def test_signal_lost(self):
        f = FunctionField(lambda x: 0.0, (0, 0))
        nxt, rec = behavioral_step((1.0, 1.0), f, SeekerParams())
        assert rec.signal_lost and rec.p == P_FLOOR and np.array_equal(nxt, [1.0, 1.0])

    def test_backtracking_keeps_signal(self):
        f = lognormal(4.0)
        p = SeekerParams(gamma=50.0, max_backtracks=6)
        rng = np.random.default_rng(1)
        for _ in range(20):
            x = start_above(f, rng)
            nxt, _ = behavioral_step(x, f, p, PrelecParams(0.5, 1.0))
            assert f.strength(nxt) >= f.strength(x) or np.hypot(*(nxt - x)) <= 5.0 / 64 + 1e-9


class TestCollisions:
    def test_free_move(self):
        g = OccupancyGrid.empty(10, 10)
        end, blocked = move_with_collisions(g, (2.0, 2.0), np.array([3.0, 1.0]))
        assert not blocked and np.allclose(end, [5.0, 3.0])

    def test_stops_before_wall_and_slides(self):
        g = OccupancyGrid.empty(10, 10)
        g.truth[:, 6] = True
        end, blocked = move_with_collisions(g, (2.0, 2.0), np.array([6.0, 3.0]))
        assert blocked and g.is_free_point(end)
        assert end[0] < 5.5 + 1e-9

    def test_never_ends_on_wall(self):
        g = open_arena(20, 20)
        rng = np.random.default_rng(2)
        for _ in range(200):
            x = rng.uniform(1, 18, 2)
            if not g.is_free_point(x):
                continue
            end, _ = move_with_collisions(g, x, rng.normal(0, 8, 2))
            assert g.is_free_point(end)


class TestTrajectory:
    def test_start_at_source(self):
        f = lognormal()
        tr = seek_trajectory((30.0, 30.0), f, SeekerParams())
        assert tr.converged and tr.steps == 0 and len(tr.positions) == 1

    def test_budget_exhausted_is_not_error(self):
        f = lognormal(8.0)
        tr = seek_trajectory((5.0, 5.0), f, SeekerParams(), (2.5, 1.0), max_steps=3)
        assert not tr.converged and tr.steps == 3 and len(tr.positions) == 4

    def test_shannon_trajectory_pointwise(self):
        f = lognormal(8.0)
        p = SeekerParams(gamma=4.0)
        tr = seek_trajectory((8.0, 50.0), f, p, (1.0, 1.0), max_steps=200)
        x = np.array([8.0, 50.0])
        for pos in tr.positions[1:]:
            x = shannon_step(x, f, p.gamma, p.max_step, p.grad_h)
            np.testing.assert_allclose(pos, x, rtol=1e-12)

    def test_converged_within_eps(self):
        f = lognormal()
        p = SeekerParams(gamma=5.0, gamma_safe=5.0)
        tr = seek_trajectory((10.0, 40.0), f, p)
        assert tr.converged
        assert np.hypot(*(tr.final - f.peak)) <= p.eps_converge

    @pytest.mark.parametrize("mode", ["adaptive", (0.5, 1.0), (1.0, 1.0), (2.0, 1.0)])
    def test_lyapunov_descent(self, mode):
        f = lognormal()
        p = SeekerParams(gamma=5.0, gamma_safe=5.0)
        rng = np.random.default_rng(11)
        ok = total = 0
        for _ in range(5):
            tr = seek_trajectory(start_above(f, rng), f, p, mode, max_steps=1000)
            assert tr.converged
            dv = np.diff(tr.lyapunov_values)
            norms = np.array(tr.step_norms[1:])
            ok += np.count_nonzero(dv <= 1e-9)
            total += len(dv)
            assert np.all(dv[norms > p.eps_converge] < 0)
        assert ok >= 0.99 * total

    @pytest.mark.parametrize("mode", ["adaptive", (1.0, 1.0), (2.0, 1.0)])
    def test_equilibria_only_at_source(self, mode):
        f = lognormal()
        p = SeekerParams()
        prelec = None if mode == "adaptive" else PrelecParams(*mode)
        for x in np.arange(10.0, 50.01, 0.5):
            for y in np.arange(10.0, 50.01, 0.5):
                _, rec = behavioral_step((x, y), f, p, prelec)
                if rec.step_norm < 1e-6 * p.gamma:
                    assert math.hypot(x - 30, y - 30) <= p.eps_converge

    def test_collisions_respected(self):
        g = open_arena(30, 30)
        g.truth[5:25, 15] = True
        f = ExpDecayField(g, [(24.0, 15.0)], kappa=0.2)
        tr = seek_trajectory((6.0, 15.0), f, SeekerParams(), "adaptive", grid=g, max_steps=400)
        assert tr.converged
        assert all(g.is_free_point(x) for x in tr.positions)

    def test_far_start_adaptive_faster(self):
        f = LogNormalField((65.0, 60.0), sigma=1.0, scale=8.0, skew=1.6, aspect=0.7, angle=0.5)
        p = SeekerParams(gamma=10.0)
        ada = seek_trajectory((10.0, 10.0), f, p, "adaptive")
        sha = seek_trajectory((10.0, 10.0), f, p, (1.0, 1.0))
        assert ada.converged and sha.converged
        assert ada.steps < sha.steps

    def test_disturbance_spreads_terminal_error(self):
        # fixed alpha = 1 so the undisturbed run settles exactly on the peak
        f = lognormal()
        p = SeekerParams(gamma=5.0)
        means = []
        for frac in (0.0, 0.05, 0.1):
            d = [np.hypot(*(seek_trajectory(start_above(f, np.random.default_rng(s)), f, p, (1.0, 1.0),
                                            DisturbanceModel(frac * p.max_step, "uniform_ball", s),
                                            max_steps=150, stop_at_convergence=False).final - f.peak))
                 for s in range(50)]
            means.append(np.mean(d))
        assert means[0] < 1e-3
        assert means[0] <= means[1] <= means[2]

    def test_adaptive_chatters_inside_ball(self):
        # alpha_min < 1 keeps |grad log w| bounded away from zero at the peak, so
        # undisturbed adaptive runs circle the source instead of stopping on it
        f = lognormal()
        p = SeekerParams(gamma=5.0)
        tr = seek_trajectory((12.0, 40.0), f, p, "adaptive", max_steps=300, stop_at_convergence=False)
        tail = np.hypot(*(np.array(tr.positions[200:]) - f.peak).T)
        assert tail.max() <= 2 * p.eps_converge
        assert tail.mean() > 1e-3


class TestTraceCsv:
    def test_roundtrip(self):
        f = lognormal()
        tr = seek_trajectory((12.0, 41.0), f, SeekerParams(gamma=5.0), "adaptive")
        text = trace_to_csv(tr)
        assert text.splitlines()[0] == "step,x,y,p,alpha,V,step_norm"
        back = trace_from_csv(text)
        assert back.steps == tr.steps
        np.testing.assert_array_equal(np.array(back.positions), np.array(tr.positions))
        assert back.lyapunov_values == tr.lyapunov_values
        assert trace_to_csv(back) == text
