"""Behavioral-gradient source seeking: adaptive alpha, single steps, trajectories."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .entropy import (
    P_FLOOR,
    PrelecParams,
    log_weight_gradient_scale,
    lyapunov_value,
)
from .fields import SignalField, field_gradient
from .grid import OccupancyGrid


@dataclass
class SeekerParams:
    alpha_min: float = 0.5
    alpha_max: float = 2.5
    rho_k: float = 10.0
    rho_p0: float = 0.5
    gamma: float = 1.0
    gamma_safe: float = 1.0
    tau: float = 0.05
    max_step: float = 5.0
    eps_converge: float = 1.5
    grad_h: float = 1.0
    max_backtracks: int = 0

    def __post_init__(self):
        if not (self.alpha_min > 0 and self.alpha_max > 0):
            raise ValueError("alpha_min and alpha_max must be positive")
        if self.alpha_min > self.alpha_max:
            raise ValueError(f"alpha_min ({self.alpha_min}) exceeds alpha_max ({self.alpha_max})")
        if not self.rho_k > 0:
            raise ValueError("rho_k must be positive")
        if not 0 < self.rho_p0 < 1:
            raise ValueError("rho_p0 must lie in (0, 1)")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        for name in ("gamma", "gamma_safe", "max_step", "eps_converge", "grad_h"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_backtracks < 0:
            raise ValueError("max_backtracks must be nonnegative")

    @classmethod
    def for_resolution(cls, resolution: float, **overrides) -> "SeekerParams":
        """Defaults with lengths tied to the grid cell size."""
        kw = dict(gamma=resolution, gamma_safe=resolution, max_step=5 * resolution,
                  eps_converge=1.5 * resolution, grad_h=resolution)
        kw.update(overrides)
        return cls(**kw)


@dataclass
class DisturbanceModel:
    """Additive bounded disturbance; every sample has norm <= omega_bar."""

    omega_bar: float = 0.0
    kind: str = "none"
    seed: int = 0
    direction: float = 0.0

    def __post_init__(self):
        if self.omega_bar < 0:
            raise ValueError("omega_bar must be nonnegative")
        if self.kind not in ("none", "uniform_ball", "fixed_direction"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        self._rng = np.random.default_rng(self.seed)

    def sample(self) -> np.ndarray:
        if self.kind == "none" or self.omega_bar == 0.0:
            if self.kind == "uniform_ball":
                self._rng.random(2)  # keep the stream aligned across omega_bar values
            return np.zeros(2)
        if self.kind == "fixed_direction":
            return self.omega_bar * np.array([math.cos(self.direction), math.sin(self.direction)])
        u, v = self._rng.random(2)
        radius = self.omega_bar * math.sqrt(u)
        ang = 2 * math.pi * v
        return radius * np.array([math.cos(ang), math.sin(ang)])


def adaptive_alpha(p: float, params: SeekerParams) -> float:
    """alpha_max - (alpha_max - alpha_min) * logistic(p); nonincreasing in p."""
    z = params.rho_k * (p - params.rho_p0)
    rho = 1.0 / (1.0 + math.exp(-z)) if z > -700 else 0.0
    alpha = params.alpha_max - (params.alpha_max - params.alpha_min) * rho
    return min(max(alpha, params.alpha_min), params.alpha_max)


@dataclass
class StepRecord:
    p: float
    alpha: float
    scale: float
    grad: np.ndarray
    step: np.ndarray
    lyapunov: float
    saturated: bool = False
    clipped: bool = False
    blocked: bool = False
    signal_lost: bool = False

    @property
    def step_norm(self) -> float:
        return float(np.hypot(*self.step))


def move_with_collisions(grid: OccupancyGrid | None, x, step):
    """Advance along ``step``, stopping short of the first occupied cell.

    If the straight move is blocked, the larger axis-aligned component
    is tried so the robot slides along walls. Returns (point, blocked).
    """
    x = np.asarray(x, dtype=float)
    target = x + step
    if grid is None:
        return target, False

    def march(delta):
        n = max(1, int(math.ceil(float(np.hypot(*delta)) / (grid.resolution / 4.0))))
        last = x
        for i in range(1, n + 1):
            q = x + delta * (i / n)
            if not grid.is_free_point(q):
                return last, True
            last = q
        return last, False

    end, blocked = march(step)
    if not blocked:
        return end, False
    progress = float(np.hypot(*(end - x)))
    for axis in np.argsort(-np.abs(step)):
        delta = np.zeros(2)
        delta[axis] = step[axis]
        alt, _ = march(delta)
        if float(np.hypot(*(alt - x))) > progress + 1e-12:
            end, progress = alt, float(np.hypot(*(alt - x)))
    return end, True


def behavioral_step(x, field: SignalField, params: SeekerParams, prelec: PrelecParams | None = None,
                    disturbance: DisturbanceModel | None = None, grid: OccupancyGrid | None = None):
    """One discrete step x + gamma * (d log w / dp) * grad p (+ disturbance).

    ``prelec=None`` selects adaptive alpha (beta = 1). The control part
    is clipped to ``max_step``; the disturbance is added afterwards so its
    bound is preserved. With ``max_backtracks`` > 0 a move that lowers p
    is retried with the control part halved. Returns (next_point, StepRecord).
    """
    x = np.asarray(x, dtype=float)
    p = field.strength(x)
    if prelec is None:
        prelec = PrelecParams(adaptive_alpha(p, params), 1.0)
    v = lyapunov_value(p, prelec)
    if p <= P_FLOOR:
        rec = StepRecord(p, prelec.alpha, 0.0, np.zeros(2), np.zeros(2), v, signal_lost=True)
        return x.copy(), rec
    grad = field_gradient(field, x, params.grad_h)
    scale, saturated = log_weight_gradient_scale(p, prelec, return_saturated=True)
    if saturated:
        control = np.zeros(2)
    else:
        control = params.gamma * scale * grad
    norm = float(np.hypot(*control))
    clipped = norm > params.max_step
    if clipped:
        control = control * (params.max_step / norm)
    omega = disturbance.sample() if disturbance is not None else np.zeros(2)
    nxt, blocked = move_with_collisions(grid, x, control + omega)
    # optional safeguard: halve the control part while the move loses signal
    for _ in range(params.max_backtracks):
        if field.strength(nxt) >= p:
            break
        control = control * 0.5
        nxt, blocked = move_with_collisions(grid, x, control + omega)
    rec = StepRecord(p, prelec.alpha, scale, grad, nxt - x, v, saturated, clipped, blocked)
    return nxt, rec


@dataclass
class SeekTrace:
    positions: list = field(default_factory=list)
    p_values: list = field(default_factory=list)
    alpha_values: list = field(default_factory=list)
    lyapunov_values: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    converged: bool = False
    steps: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.positions[-1]

    @property
    def path_length(self) -> float:
        return float(sum(self.step_norms))


def _mode_prelec(mode) -> PrelecParams | None:
    if mode == "adaptive" or mode is None:
        return None
    if isinstance(mode, PrelecParams):
        return mode
    if isinstance(mode, tuple) and len(mode) == 2:
        return PrelecParams(*mode)
    raise ValueError(f"unknown seek mode {mode!r}")


def seek_trajectory(start, field: SignalField, params: SeekerParams, mode="adaptive",
                    disturbance: DisturbanceModel | None = None, max_steps: int = 1000,
                    grid: OccupancyGrid | None = None, stop_at_convergence: bool = True) -> SeekTrace:
    """Iterate ``behavioral_step`` from ``start`` toward ``field.peak``.

    ``mode`` is "adaptive", a PrelecParams, or an (alpha, beta) tuple.
    Converged means within ``eps_converge`` of the peak. Running out of
    steps is not an error: the trace comes back with converged=False.
    """
    prelec = _mode_prelec(mode)
    x = np.asarray(start, dtype=float)
    peak = np.asarray(field.peak, dtype=float)
    trace = SeekTrace()

    def record(point, p, alpha, v, norm):
        trace.positions.append(point)
        trace.p_values.append(p)
        trace.alpha_values.append(alpha)
        trace.lyapunov_values.append(v)
        trace.step_norms.append(norm)

    def at_peak(point):
        return float(np.hypot(*(point - peak))) <= params.eps_converge

    p0 = field.strength(x)
    pre = prelec or PrelecParams(adaptive_alpha(p0, params), 1.0)
    record(x.copy(), p0, pre.alpha, lyapunov_value(p0, pre), 0.0)
    if at_peak(x):
        trace.converged = True
        if stop_at_convergence:
            return trace
    for _ in range(max_steps):
        x, rec = behavioral_step(x, field, params, prelec, disturbance, grid)
        if rec.signal_lost:
            break
        trace.steps += 1
        p = field.strength(x)
        # V uses the alpha that produced this step so consecutive values compare
        record(x.copy(), p, rec.alpha, lyapunov_value(p, PrelecParams(rec.alpha, 1.0)
                                                      if prelec is None else prelec), rec.step_norm)
        trace.converged = at_peak(x)
        if trace.converged and stop_at_convergence:
            break
    return trace


TRACE_COLUMNS = ["step", "x", "y", "p", "alpha", "V", "step_norm"]


def trace_to_csv(trace: SeekTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for i, (pos, p, a, v, n) in enumerate(zip(trace.positions, trace.p_values, trace.alpha_values,
                                               trace.lyapunov_values, trace.step_norms)):
        w.writerow([i, repr(float(pos[0])), repr(float(pos[1])), repr(float(p)), repr(float(a)),
                    repr(float(v)), repr(float(n))])
    return buf.getvalue()


def trace_from_csv(text: str) -> SeekTrace:
    rows = list(csv.DictReader(io.StringIO(text)))
    trace = SeekTrace()
    for row in rows:
        trace.positions.append(np.array([float(row["x"]), float(row["y"])]))
        trace.p_values.append(float(row["p"]))
        trace.alpha_values.append(float(row["alpha"]))
        trace.lyapunov_values.append(float(row["V"]))
        trace.step_norms.append(float(row["step_norm"]))
    trace.steps = max(0, len(rows) - 1)
    return trace
