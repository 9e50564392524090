"""Prelec weighting, behavioral/Shannon patch entropy and gradient scales.

Everything here is a pure function of its arguments. Scalars and numpy
arrays are both accepted wherever a probability is expected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

P_FLOOR = 1e-9
SCALE_CAP = 1e6


@dataclass(frozen=True)
class PrelecParams:
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and np.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")
        if not (self.beta > 0 and np.isfinite(self.beta)):
            raise ValueError(f"beta must be positive, got {self.beta!r}")

    @property
    def is_shannon(self) -> bool:
        return self.alpha == 1.0 and self.beta == 1.0


SHANNON = PrelecParams(1.0, 1.0)


@dataclass(frozen=True)
class EntropyPatch:
    """Rectangular block of surrogate probabilities around the robot."""

    samples: np.ndarray
    cell_area: float = 1.0

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if samples.size == 0:
            raise ValueError("patch must contain at least one sample")
        if not self.cell_area > 0:
            raise ValueError(f"cell_area must be positive, got {self.cell_area!r}")
        object.__setattr__(self, "samples", clamp_probability(samples))


def clamp_probability(p):
    """Clip into [P_FLOOR, 1]; NaN maps to the floor."""
    p = np.asarray(p, dtype=float)
    out = np.clip(np.nan_to_num(p, nan=P_FLOOR), P_FLOOR, 1.0)
    return out if out.ndim else float(out)


def _neg_log(p):
    # -log p, exactly 0 at p == 1
    return -np.log(clamp_probability(p))


def prelec_weight(p, params: PrelecParams):
    """w(p) = exp(-beta * (-log p)**alpha); exactly the (clamped) identity at alpha = beta = 1."""
    if params.is_shannon:
        out = np.asarray(clamp_probability(p), dtype=float)
        return out if np.ndim(out) else float(out)
    out = np.exp(-params.beta * _neg_log(p) ** params.alpha)
    return out if np.ndim(out) else float(out)


def lyapunov_value(p, params: PrelecParams):
    """V = -log w(p) = beta * (-log p)**alpha; zero only at p = 1."""
    out = params.beta * _neg_log(p) ** params.alpha
    return out if np.ndim(out) else float(out)


def _capped_power_term(p, params: PrelecParams):
    # beta*alpha*(-log p)**(alpha-1), with the alpha<1, p->1 divergence capped
    nl = np.asarray(_neg_log(p), dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        term = params.beta * params.alpha * np.power(nl, params.alpha - 1.0)
    saturated = ~np.isfinite(term) | (term > SCALE_CAP)
    term = np.where(saturated, SCALE_CAP, term)
    return term, saturated


def gradient_ratio(p, params: PrelecParams, return_saturated: bool = False):
    """Behavioral-to-Shannon gradient scale, beta*alpha*(-log p)**(alpha-1).

    Constant for alpha == 1; vanishes at p -> 1 and grows as p -> 0 for
    alpha > 1; the reverse for alpha < 1. Infinite limits are capped at
    SCALE_CAP and reported through ``return_saturated``.
    """
    term, sat = _capped_power_term(p, params)
    if not np.ndim(term):
        term, sat = float(term), bool(sat)
    return (term, sat) if return_saturated else term


def log_weight_gradient_scale(p, params: PrelecParams, return_saturated: bool = False):
    """d/dp log w(p) = (beta*alpha/p) * (-log p)**(alpha-1).

    This is the factor multiplying grad p in the behavioral control law.
    For alpha < 1 at p == 1 the factor diverges: the value is capped at
    SCALE_CAP and flagged so callers can zero the step.
    """
    p = clamp_probability(p)
    term, sat = _capped_power_term(p, params)
    scale = term / p
    sat = sat | (scale > SCALE_CAP)
    scale = np.where(sat, SCALE_CAP, scale)
    if not np.ndim(scale):
        scale, sat = float(scale), bool(sat)
    return (scale, sat) if return_saturated else scale


def weighted_entropy(w, cell_area: float = 1.0) -> float:
    """Midpoint-rule value of -integral(w log w) over a block of cells."""
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(w > 0, -w * np.log(w), 0.0)
    return float(integrand.sum() * cell_area)


def behavioral_entropy_patch(patch: EntropyPatch, params: PrelecParams) -> float:
    return weighted_entropy(prelec_weight(patch.samples, params), patch.cell_area)


def shannon_entropy_patch(patch: EntropyPatch) -> float:
    return weighted_entropy(patch.samples, patch.cell_area)


def patch_entropy_map(p_grid, params: PrelecParams, radius: int = 2, cell_area: float = 1.0):
    """Local behavioral entropy of the (2r+1)^2 patch centred on every cell.

    Borders are edge-padded so every cell sees a full patch.
    """
    w = prelec_weight(np.asarray(p_grid, dtype=float), params)
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand = np.where(w > 0, -w * np.log(w), 0.0)
    padded = np.pad(integrand, radius, mode="edge")
    k = 2 * radius + 1
    windows = np.lib.stride_tricks.sliding_window_view(padded, (k, k))
    return windows.sum(axis=(-2, -1)) * cell_area
