"""Independent reference implementations used only by the tests.

Nothing here imports the package's numerical code; each oracle is a
slow, direct version of the quantity it checks.
"""
import math
from collections import deque

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def prelec_mp(p, alpha, beta=1.0):
    p = mp.mpf(p)
    return mp.exp(-beta * (-mp.log(p)) ** alpha)


def log_w_mp(p, alpha, beta=1.0):
    return -beta * (-mp.log(mp.mpf(p))) ** alpha


def d_log_w_fd(p, alpha, beta=1.0, h=1e-6):
    """Central difference of log w at p, done in 40-digit arithmetic."""
    h = mp.mpf(h)
    return (log_w_mp(mp.mpf(p) + h, alpha, beta) - log_w_mp(mp.mpf(p) - h, alpha, beta)) / (2 * h)


def shannon_step(x, field, gamma, max_step, h):
    """x + gamma * grad(p) / p with its own central-difference gradient."""
    x = np.asarray(x, dtype=float)
    p = field.strength(x)
    g = field.gradient(x)
    if g is None:
        g = np.array([
            (field.strength(x + [h, 0]) - field.strength(x - [h, 0])) / (2 * h),
            (field.strength(x + [0, h]) - field.strength(x - [0, h])) / (2 * h),
        ])
    step = gamma * g / p
    n = math.hypot(step[0], step[1])
    if n > max_step:
        step = step * (max_step / n)
    return x + step


def bellman_ford_8(free, start, res=1.0, corner_rule=True):
    """Label-correcting shortest paths on the 8-connected grid (queue based)."""
    h, w = free.shape
    dist = np.full(free.shape, np.inf)
    dist[start] = 0.0
    q = deque([start])
    while q:
        r, c = q.popleft()
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == dc == 0:
                    continue
                nr, nc = r + dr, c + dc
                if not (0 <= nr < h and 0 <= nc < w) or not free[nr, nc]:
                    continue
                if dr and dc and corner_rule and not (free[r, nc] and free[nr, c]):
                    continue
                nd = dist[r, c] + (math.sqrt(2) if dr and dc else 1.0) * res
                if nd < dist[nr, nc] - 1e-12:
                    dist[nr, nc] = nd
                    q.append((nr, nc))
    return dist


def frontier_cells_scan(known):
    """Every known-free cell with an unknown 4-neighbour (known: -1/0/1)."""
    h, w = known.shape
    out = set()
    for r in range(h):
        for c in range(w):
            if known[r, c] != 0:
                continue
            for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= nr < h and 0 <= nc < w and known[nr, nc] == -1:
                    out.add((r, c))
                    break
    return out


def components_8(cells):
    """Connected components of a cell set under 8-adjacency, by flood fill."""
    cells = set(cells)
    comps = []
    while cells:
        seed = cells.pop()
        comp, stack = {seed}, [seed]
        while stack:
            r, c = stack.pop()
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    n = (r + dr, c + dc)
                    if n in cells:
                        cells.remove(n)
                        comp.add(n)
                        stack.append(n)
        comps.append(comp)
    return comps


def dense_gp(X, y, Xq, ell, sf2, sn2, mean=0.5, jitter=1e-8):
    """GP posterior by explicit inverse-free dense solves, no Cholesky."""
    X, Xq = np.asarray(X, float), np.asarray(Xq, float)

    def k(a, b):
        out = np.empty((len(a), len(b)))
        for i in range(len(a)):
            for j in range(len(b)):
                out[i, j] = sf2 * math.exp(-0.5 * ((a[i] - b[j]) ** 2).sum() / ell ** 2)
        return out

    K = k(X, X) + (sn2 + jitter) * np.eye(len(X))
    Ks = k(Xq, X)
    mu = mean + Ks @ np.linalg.solve(K, np.asarray(y, float) - mean)
    var = sf2 + sn2 - np.einsum("ij,ji->i", Ks, np.linalg.solve(K, Ks.T))
    return mu, var


def two_pass_mean_std(values):
    n = len(values)
    mean = sum(values) / n
    if n < 2:
        return mean, 0.0
    ss = sum((v - mean) ** 2 for v in values)
    return mean, math.sqrt(ss / (n - 1))
