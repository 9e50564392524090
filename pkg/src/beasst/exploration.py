"""Small exact GP occupancy model and frontier scoring/selection."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.linalg import solve_triangular

from .entropy import PrelecParams, prelec_weight
from .grid import OCCUPIED, UNKNOWN, Frontier, OccupancyGrid, dijkstra_from_cells

LOG_2PIE = math.log(2 * math.pi * math.e)


class GPHyperparameterError(ValueError):
    pass


@dataclass
class ExplorationParams:
    lengthscale: float = 2.0  # cells
    signal_var: float = 1.0
    noise_var: float = 0.01
    jitter: float = 1e-8
    prior_mean: float = 0.5
    max_train: int = 512
    w_u: float = 0.5
    w_a: float = 0.3
    w_theta: float = 0.2
    r_hv: float = 5.0  # cells
    certain_var: float = 0.05
    uncertainty: str = "variance"  # variance | shannon | behavioral
    behavior_alpha: float = 1.0

    def __post_init__(self):
        for name in ("lengthscale", "signal_var", "noise_var", "r_hv"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.jitter < 0 or self.max_train < 1:
            raise ValueError("jitter must be nonnegative and max_train at least 1")
        if self.uncertainty not in ("variance", "shannon", "behavioral"):
            raise ValueError(f"unknown uncertainty measure {self.uncertainty!r}")

    @property
    def prior_var(self) -> float:
        return self.signal_var + self.noise_var

    @property
    def hv_threshold(self) -> float:
        return self.prior_var / 2.0


def se_kernel(a: np.ndarray, b: np.ndarray, lengthscale: float, signal_var: float) -> np.ndarray:
    d2 = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * a @ b.T
    return signal_var * np.exp(-0.5 * np.maximum(d2, 0.0) / lengthscale ** 2)


class GPOccupancyModel:
    """Exact GP regression of occupancy labels with a squared-exponential kernel.

    Predictive variance includes the observation noise, so the prior
    variance is signal_var + noise_var. ``lengthscale`` is in world units.
    """

    def __init__(self, lengthscale: float, signal_var: float, noise_var: float,
                 prior_mean: float = 0.5, jitter: float = 1e-8):
        self.lengthscale, self.signal_var, self.noise_var = lengthscale, signal_var, noise_var
        self.prior_mean, self.jitter = prior_mean, jitter
        self.X = np.zeros((0, 2))
        self.y = np.zeros(0)
        self._chol = None
        self._alpha = np.zeros(0)

    @property
    def prior_var(self) -> float:
        return self.signal_var + self.noise_var

    def fit(self, X, y) -> "GPOccupancyModel":
        X = np.asarray(X, dtype=float).reshape(-1, 2)
        y = np.asarray(y, dtype=float).reshape(-1)
        if len(X) != len(y):
            raise ValueError("X and y lengths differ")
        self.X, self.y = X, y
        if len(X) == 0:
            self._chol, self._alpha = None, np.zeros(0)
            return self
        K = se_kernel(X, X, self.lengthscale, self.signal_var)
        K[np.diag_indices_from(K)] += self.noise_var + self.jitter
        try:
            L = np.linalg.cholesky(K)
        except np.linalg.LinAlgError as exc:
            raise GPHyperparameterError("kernel matrix is not positive definite after jitter") from exc
        self._chol = L
        z = _tri_solve(L, y - self.prior_mean, lower=True)
        self._alpha = _tri_solve(L.T, z, lower=False)
        return self

    def predict(self, Xq):
        """Posterior mean and variance at query points, shape (m,) each."""
        Xq = np.asarray(Xq, dtype=float).reshape(-1, 2)
        if self._chol is None:
            return np.full(len(Xq), self.prior_mean), np.full(len(Xq), self.prior_var)
        Ks = se_kernel(Xq, self.X, self.lengthscale, self.signal_var)
        mu = self.prior_mean + Ks @ self._alpha
        v = _tri_solve(self._chol, Ks.T, lower=True)
        var = self.prior_var - (v * v).sum(axis=0)
        return mu, np.clip(var, 1e-300, self.prior_var)


def _tri_solve(L, b, lower: bool):
    return solve_triangular(L, b, lower=lower, check_finite=False)


def training_set(grid: OccupancyGrid, max_train: int):
    """Known cells (label 1 = occupied) on the coarsest lattice stride that fits."""
    known = grid.known != UNKNOWN
    stride = 1
    while True:
        mask = np.zeros_like(known)
        mask[::stride, ::stride] = known[::stride, ::stride]
        if np.count_nonzero(mask) <= max_train:
            break
        stride += 1
    cells = np.argwhere(mask)
    X = cells[:, ::-1] * grid.resolution
    y = (grid.known[mask] == OCCUPIED).astype(float)
    return X, y


def gp_fit(grid: OccupancyGrid, params: ExplorationParams) -> GPOccupancyModel:
    X, y = training_set(grid, params.max_train)
    model = GPOccupancyModel(params.lengthscale * grid.resolution, params.signal_var, params.noise_var,
                             params.prior_mean, params.jitter)
    return model.fit(X, y)


def gp_predict(model: GPOccupancyModel, x):
    mu, var = model.predict(np.asarray(x, dtype=float).reshape(1, 2))
    return float(mu[0]), float(var[0])


def cell_entropy(sigma2):
    """Differential entropy of N(mu, sigma2): 0.5*log(2*pi*e) + 0.5*log(sigma2)."""
    out = 0.5 * LOG_2PIE + 0.5 * np.log(sigma2)
    return out if np.ndim(out) else float(out)


def occupancy_entropy(mu, behavior: PrelecParams | None = None):
    """Binary entropy of the occupancy estimate, optionally Prelec-weighted."""
    q = np.clip(np.asarray(mu, dtype=float), 1e-6, 1 - 1e-6)
    ps = [q, 1 - q]
    if behavior is not None:
        ps = [prelec_weight(p, behavior) for p in ps]
    return sum(-p * np.log(p) for p in ps)


@dataclass
class FrontierScore:
    frontier: Frontier
    u_f: float
    a_f: float
    theta_f: float


def heading_change(pose, heading, target) -> float:
    """Angle in [0, pi] between the current heading and the bearing to target."""
    if heading is None:
        return 0.0
    d = np.asarray(target, dtype=float) - np.asarray(pose, dtype=float)
    if not np.any(d):
        return 0.0
    diff = math.atan2(d[1], d[0]) - heading
    return abs((diff + math.pi) % (2 * math.pi) - math.pi)


class GridPosterior:
    """GP mean/variance on grid cells, evaluated lazily for the cells asked for."""

    def __init__(self, grid: OccupancyGrid, model: GPOccupancyModel, cells_mask: np.ndarray | None = None):
        self.grid = grid
        self.model = model
        self.mu = np.full(grid.shape, model.prior_mean)
        self.var = np.full(grid.shape, model.prior_var)
        mask = np.ones(grid.shape, dtype=bool) if cells_mask is None else cells_mask
        cells = np.argwhere(mask)
        if len(cells):
            mu, var = model.predict(cells[:, ::-1] * grid.resolution)
            self.mu[mask] = mu
            self.var[mask] = var


def _disk_mask(shape, centre, radius) -> np.ndarray:
    rr, cc = np.ogrid[:shape[0], :shape[1]]
    return (rr - centre[0]) ** 2 + (cc - centre[1]) ** 2 <= radius ** 2


def score_frontier(post: GridPosterior, frontier: Frontier, pose, heading,
                   params: ExplorationParams) -> FrontierScore:
    rows, cols = np.array(frontier.cells).T
    if params.uncertainty == "variance":
        u = float(post.var[rows, cols].mean())
    elif params.uncertainty == "shannon":
        u = float(cell_entropy(post.var[rows, cols]).mean())
    else:
        u = float(occupancy_entropy(post.mu[rows, cols], PrelecParams(params.behavior_alpha)).mean())
    near = _disk_mask(post.grid.shape, frontier.centroid_cell, params.r_hv)
    a = float(np.count_nonzero(near & (post.var > params.hv_threshold)))
    theta = heading_change(pose, heading, frontier.centroid)
    return FrontierScore(frontier, u, a, theta)


def scoring_mask(grid: OccupancyGrid, frontiers: list[Frontier], params: ExplorationParams) -> np.ndarray:
    """Cells whose posterior the frontier scores depend on."""
    mask = np.zeros(grid.shape, dtype=bool)
    for f in frontiers:
        mask |= _disk_mask(grid.shape, f.centroid_cell, params.r_hv)
        rows, cols = np.array(f.cells).T
        mask[rows, cols] = True
    return mask


def _minmax(v: np.ndarray) -> np.ndarray:
    # spreads at rounding level carry no information; treat them as ties
    span = v.max() - v.min()
    if span <= 1e-9 * np.abs(v).max():
        return np.zeros_like(v)
    return (v - v.min()) / span


def utilities(scores: list[FrontierScore], params: ExplorationParams) -> np.ndarray:
    """w_u*norm(u) + w_a*norm(a) - w_theta*theta/pi over the candidate set."""
    u = np.array([s.u_f for s in scores], dtype=float)
    a = np.array([s.a_f for s in scores], dtype=float)
    th = np.array([s.theta_f for s in scores], dtype=float)
    return params.w_u * _minmax(u) + params.w_a * _minmax(a) - params.w_theta * th / math.pi


def _argmax_tiebreak(values, frontiers) -> int:
    best = None
    for i, v in enumerate(values):
        if best is None or v > values[best] + 1e-12 or (
                abs(v - values[best]) <= 1e-12 and frontiers[i].key < frontiers[best].key):
            best = i
    return best


def frontier_costs(grid: OccupancyGrid, pose, frontiers: list[Frontier]) -> np.ndarray:
    """Shortest known-free path cost (m) from pose to each frontier's anchor cell."""
    start = grid.world_to_cell(pose)
    dist = dijkstra_from_cells(grid.passable(use_known=True), [start], grid.resolution)
    return np.array([dist[f.anchor_cell()] for f in frontiers])


def reachable_frontiers(grid: OccupancyGrid, pose, frontiers: list[Frontier]) -> list[Frontier]:
    """Frontiers whose anchor cell shares a known-free component with the pose.

    With corner cutting forbidden, 8-connected reachability equals plain
    4-connectivity, so a component label answers it exactly.
    """
    labels, _ = ndimage.label(grid.passable(use_known=True))
    here = labels[grid.world_to_cell(pose)] if grid.contains_point(pose) else 0
    if here == 0:
        return []
    return [f for f in frontiers if labels[f.anchor_cell()] == here]


def select_frontier(grid: OccupancyGrid, frontiers: list[Frontier], pose, mode: str = "gp_utility",
                    params: ExplorationParams | None = None, heading=None, rng=None,
                    model: GPOccupancyModel | None = None):
    """Pick the next exploration target, or None when there are no frontiers.

    Modes: "gp_utility" (argmax utility, falling back to nearest when every
    candidate sits in certain space), "nearest" (lowest path cost) and
    "random" (uniform draw from ``rng``). Unreachable frontiers are dropped.
    Returns (frontier, mode_used).
    """
    params = params or ExplorationParams()
    reachable = reachable_frontiers(grid, pose, frontiers)
    if not reachable:
        return None, mode
    if mode == "random":
        if rng is None:
            raise ValueError("random frontier selection needs an rng")
        return reachable[int(rng.integers(len(reachable)))], mode
    if mode == "gp_utility":
        model = model if model is not None else gp_fit(grid, params)
        post = GridPosterior(grid, model, scoring_mask(grid, reachable, params))
        scores = [score_frontier(post, f, pose, heading, params) for f in reachable]
        certain = all(
            post.var[tuple(np.array(s.frontier.cells).T)].mean() < params.certain_var and s.a_f == 0
            for s in scores)
        if not certain:
            return reachable[_argmax_tiebreak(utilities(scores, params), reachable)], mode
        mode = "nearest"
    if mode == "nearest":
        costs = frontier_costs(grid, pose, reachable)
        return reachable[_argmax_tiebreak(-costs, reachable)], mode
    raise ValueError(f"unknown frontier selection mode {mode!r}")
