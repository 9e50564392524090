"""Behavioral-entropic gradient source seeking in a 2-D grid world."""

from .entropy import (
    P_FLOOR,
    SCALE_CAP,
    EntropyPatch,
    PrelecParams,
    behavioral_entropy_patch,
    gradient_ratio,
    log_weight_gradient_scale,
    lyapunov_value,
    prelec_weight,
    shannon_entropy_patch,
)
from .seeker import DisturbanceModel, SeekerParams, adaptive_alpha, behavioral_step, seek_trajectory

__version__ = "0.1.0"
