"""Ground-truth signal fields and their normalized (surrogate probability) form.

Every field exposes ``strength(x)`` in (0, 1], ``valid(x)`` and a ``peak``
(its argmax). Fields with a closed-form gradient return it from
``gradient(x)``; the rest return None and callers fall back to
``sampled_gradient``.
"""
from __future__ import annotations

import math

import numpy as np

from .entropy import P_FLOOR, clamp_probability
from .grid import OccupancyGrid, dijkstra_distance_map

D_REF = 1.0


class SignalField:
    peak: np.ndarray
    kind = "field"

    def strength(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x):
        return None

    def valid(self, x) -> bool:
        return True

    def params(self) -> dict:
        return {}

    def strength_grid(self, grid: OccupancyGrid) -> np.ndarray:
        """Strength at every cell centre (P_FLOOR on occupied cells)."""
        out = np.full(grid.shape, P_FLOOR)
        for r, c in grid.free_cells():
            out[r, c] = self.strength(grid.cell_to_world((r, c)))
        return out


class FunctionField(SignalField):
    """Field defined by plain callables; handy for analytic test fields."""

    kind = "function"

    def __init__(self, fn, peak, grad=None, bounds=None):
        self._fn = fn
        self._grad = grad
        self.peak = np.asarray(peak, dtype=float)
        self.bounds = bounds  # (xmin, xmax, ymin, ymax) or None

    def strength(self, x) -> float:
        return clamp_probability(float(self._fn(np.asarray(x, dtype=float))))

    def gradient(self, x):
        if self._grad is None:
            return None
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)

    def valid(self, x) -> bool:
        if self.bounds is None:
            return True
        xmin, xmax, ymin, ymax = self.bounds
        return xmin <= x[0] <= xmax and ymin <= x[1] <= ymax


class LogNormalField(SignalField):
    """Skewed unimodal field with a log-normal radial profile.

    p(x) = exp(-(ln(1 + r))^2 / (2 sigma^2)), where r is an anisotropic
    distance from ``mu`` in a frame rotated by ``angle``: the major axis
    uses ``scale * skew`` on its positive side and ``scale`` on the
    negative side, the minor axis ``scale * aspect``. Peak value 1 at mu.
    """

    kind = "lognormal"

    def __init__(self, mu, sigma: float = 1.0, scale: float = 10.0, skew: float = 1.5,
                 aspect: float = 0.75, angle: float = 0.0, grid: OccupancyGrid | None = None):
        if not (sigma > 0 and scale > 0 and skew > 0 and aspect > 0):
            raise ValueError("sigma, scale, skew and aspect must be positive")
        self.mu = np.asarray(mu, dtype=float)
        self.peak = self.mu
        self.sigma, self.scale, self.skew, self.aspect, self.angle = sigma, scale, skew, aspect, angle
        self.grid = grid
        c, s = math.cos(angle), math.sin(angle)
        self._rot = np.array([[c, -s], [s, c]])

    def params(self) -> dict:
        return {"mu_x": self.mu[0], "mu_y": self.mu[1], "sigma": self.sigma, "scale": self.scale,
                "skew": self.skew, "aspect": self.aspect, "angle": self.angle}

    def _frame(self, x):
        uv = self._rot.T @ (np.asarray(x, dtype=float) - self.mu)
        a = self.scale * self.skew if uv[0] >= 0 else self.scale
        b = self.scale * self.aspect
        return uv, a, b

    def strength(self, x) -> float:
        uv, a, b = self._frame(x)
        r = math.hypot(uv[0] / a, uv[1] / b)
        return clamp_probability(math.exp(-math.log1p(r) ** 2 / (2 * self.sigma ** 2)))

    def gradient(self, x):
        uv, a, b = self._frame(x)
        r = math.hypot(uv[0] / a, uv[1] / b)
        q_over_r = math.log1p(r) / r if r > 1e-12 else 1.0
        p = math.exp(-math.log1p(r) ** 2 / (2 * self.sigma ** 2))
        coef = -p * q_over_r / (self.sigma ** 2 * (1.0 + r))
        g_uv = coef * np.array([uv[0] / a ** 2, uv[1] / b ** 2])
        return self._rot @ g_uv

    def valid(self, x) -> bool:
        return self.grid is None or self.grid.is_free_point(x)


def _bilinear(grid_vals: np.ndarray, resolution: float, x) -> float:
    """Bilinear interpolation over finite corner values; inf if none finite."""
    h, w = grid_vals.shape
    fr, fc = x[1] / resolution, x[0] / resolution
    r0, c0 = math.floor(fr), math.floor(fc)
    tr, tc = fr - r0, fc - c0
    num = den = 0.0
    for dr, wr in ((0, 1.0 - tr), (1, tr)):
        for dc, wc in ((0, 1.0 - tc), (1, tc)):
            wt = wr * wc
            r, c = r0 + dr, c0 + dc
            if wt <= 0.0 or not (0 <= r < h and 0 <= c < w):
                continue
            v = grid_vals[r, c]
            if np.isfinite(v):
                num += wt * v
                den += wt
    return num / den if den > 0 else math.inf


class ExpDecayField(SignalField):
    """phi(x) = exp(-kappa * soft-min shortest-path distance to the sources).

    Distances are obstacle-aware (8-connected Dijkstra over the true map)
    and bilinearly interpolated between cell centres.
    """

    kind = "exp_decay"

    def __init__(self, grid: OccupancyGrid, sources, kappa: float = 0.1):
        if not kappa > 0:
            raise ValueError("kappa must be positive")
        self.grid = grid
        self.kappa = float(kappa)
        cells = [grid.world_to_cell(s) for s in sources]
        self.sources = [grid.cell_to_world(c) for c in cells]
        self.distance_maps = dijkstra_distance_map(grid, self.sources)
        self.peak = self.sources[0] if len(self.sources) == 1 else None

    def params(self) -> dict:
        out = {"kappa": self.kappa}
        for i, s in enumerate(self.sources):
            out[f"source{i}"] = f"{s[0]:g},{s[1]:g}"
        return out

    def source_distances(self, x) -> np.ndarray:
        return np.array([_bilinear(d, self.grid.resolution, x) for d in self.distance_maps])

    def soft_min_distance(self, x) -> float:
        return soft_min(self.source_distances(x))

    def strength(self, x) -> float:
        if not self.valid(x):
            return P_FLOOR
        return exp_strength(self.soft_min_distance(x), self.kappa)

    def valid(self, x) -> bool:
        return self.grid.is_free_point(x)


def soft_min(distances) -> float:
    """-log(sum(exp(-d))); inf when every distance is infinite."""
    d = np.asarray(distances, dtype=float)
    finite = d[np.isfinite(d)]
    if finite.size == 0:
        return math.inf
    m = finite.min()
    return float(m - math.log(np.exp(-(finite - m)).sum()))


def soft_min_distance(x, field: ExpDecayField) -> float:
    return field.soft_min_distance(x)


def exp_strength(d_tilde: float, kappa: float) -> float:
    if not math.isfinite(d_tilde):
        return P_FLOOR
    return clamp_probability(math.exp(-kappa * d_tilde))


def exp_decay_strength(x, field: ExpDecayField) -> float:
    return field.strength(x)


def normalize_dbm(p_dbm: float, p_max_dbm: float) -> float:
    """Linear-power ratio 10**((P - Pmax)/10), clamped to [P_FLOOR, 1]."""
    return clamp_probability(10.0 ** ((p_dbm - p_max_dbm) / 10.0))


def bresenham(a, b):
    """Cells on the integer line from a to b, endpoints included."""
    r0, c0 = a
    r1, c1 = b
    dr, dc = abs(r1 - r0), abs(c1 - c0)
    sr = 1 if r1 > r0 else -1
    sc = 1 if c1 > c0 else -1
    err = dc - dr
    cells = []
    r, c = r0, c0
    while True:
        cells.append((r, c))
        if (r, c) == (r1, c1):
            return cells
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c += sc
        if e2 < dc:
            err += dc
            r += sr


class PathLossField(SignalField):
    """Log-distance path loss from one source, with wall shadowing and fading.

    Shadowing is ``wall_db`` per occupied cell on the Bresenham line to the
    source; fading is a zero-mean Gaussian (dB) frozen per cell from
    ``seed``. Both are deterministic functions of (cell, seed).
    """

    kind = "path_loss"

    def __init__(self, grid: OccupancyGrid, source, l0_dbm: float = -40.0, n_exp: float = 2.0,
                 wall_db: float = 6.0, fading_sigma: float = 0.0, seed: int = 0,
                 p_max_dbm: float | None = None, d_ref: float = D_REF):
        if not n_exp > 0:
            raise ValueError("n_exp must be positive")
        if wall_db < 0 or fading_sigma < 0:
            raise ValueError("wall_db and fading_sigma must be nonnegative")
        self.grid = grid
        self.source = grid.cell_to_world(grid.world_to_cell(source))
        self.peak = self.source
        self.l0_dbm, self.n_exp, self.wall_db = float(l0_dbm), float(n_exp), float(wall_db)
        self.fading_sigma, self.seed, self.d_ref = float(fading_sigma), int(seed), float(d_ref)
        self.p_max_dbm = self.l0_dbm if p_max_dbm is None else float(p_max_dbm)
        rng = np.random.default_rng(self.seed)
        self.fading = rng.normal(0.0, 1.0, grid.shape) * self.fading_sigma
        self._source_cell = grid.world_to_cell(self.source)
        self._walls = {}

    def params(self) -> dict:
        return {"source": f"{self.source[0]:g},{self.source[1]:g}", "l0_dbm": self.l0_dbm,
                "n_exp": self.n_exp, "wall_db": self.wall_db, "fading_sigma": self.fading_sigma,
                "seed": self.seed, "p_max_dbm": self.p_max_dbm}

    def wall_count(self, cell) -> int:
        n = self._walls.get(cell)
        if n is None:
            n = sum(1 for rc in bresenham(cell, self._source_cell) if self.grid.truth[rc])
            self._walls[cell] = n
        return n

    def shadowing_db(self, x) -> float:
        return self.wall_db * self.wall_count(self.grid.world_to_cell(x))

    def dbm(self, x) -> float:
        d = max(float(np.hypot(*(np.asarray(x, dtype=float) - self.source))), self.d_ref)
        cell = self.grid.world_to_cell(x)
        return self.l0_dbm - 10.0 * self.n_exp * math.log10(d) - self.shadowing_db(x) - self.fading[cell]

    def strength(self, x) -> float:
        if not self.valid(x):
            return P_FLOOR
        return normalize_dbm(self.dbm(x), self.p_max_dbm)

    def valid(self, x) -> bool:
        return self.grid.is_free_point(x)


def path_loss_strength_dbm(x, field: PathLossField) -> float:
    return field.dbm(x)


def sampled_gradient(field: SignalField, x, h: float, return_one_sided: bool = False):
    """Central-difference estimate of grad p; one-sided where a probe is invalid.

    An axis whose probes are both invalid gets a zero component.
    """
    x = np.asarray(x, dtype=float)
    p0 = field.strength(x)
    grad = np.zeros(2)
    one_sided = False
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fwd_ok, back_ok = field.valid(x + e), field.valid(x - e)
        if fwd_ok and back_ok:
            grad[k] = (field.strength(x + e) - field.strength(x - e)) / (2 * h)
        elif fwd_ok:
            grad[k] = (field.strength(x + e) - p0) / h
            one_sided = True
        elif back_ok:
            grad[k] = (p0 - field.strength(x - e)) / h
            one_sided = True
        else:
            one_sided = True
    return (grad, one_sided) if return_one_sided else grad


def field_gradient(field: SignalField, x, h: float):
    """Analytic gradient when the field has one, else central differences."""
    g = field.gradient(x)
    return g if g is not None else sampled_gradient(field, x, h)


# ------------------------------------------------------------------ dumps

def dump_grid(values: np.ndarray, resolution: float, kind: str, params: dict | None = None,
              quantity: str = "p") -> str:
    """Header line of key=value pairs, then row-major space-separated values."""
    values = np.asarray(values, dtype=float)
    h, w = values.shape
    header = {"width": w, "height": h, "resolution": f"{resolution:g}", "kind": kind,
              "quantity": quantity}
    for k, v in (params or {}).items():
        header[k] = v
    head = "# " + " ".join(f"{k}={_fmt_param(v)}" for k, v in header.items())
    rows = [" ".join(repr(float(v)) for v in row) for row in values]
    return head + "\n" + "\n".join(rows) + "\n"


def _fmt_param(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v).replace(" ", "")


def parse_grid_dump(text: str):
    """Inverse of ``dump_grid``: returns (header dict of strings, array)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("#"):
        raise ValueError("grid dump must start with a '#' header line")
    header = dict(tok.split("=", 1) for tok in lines[0][1:].split())
    values = np.array([[float(t) for t in ln.split()] for ln in lines[1:]])
    w, h = int(header["width"]), int(header["height"])
    if values.shape != (h, w):
        raise ValueError(f"dump body is {values.shape}, header says {(h, w)}")
    return header, values
