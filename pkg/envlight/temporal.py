"""
Sequence smoothing of per-frame estimates and the temporal consistency loss.

A frame's environment equals the world environment rotated by the frame's
``yaw_to_world``; aligning a frame to the world undoes that rotation.
"""
import logging
from dataclasses import dataclass, replace
from typing import List, Sequence

import numpy as np

from .exceptions import ContractViolation
from .radiometry import LatLongMap, check_same_resolution, rotate_env

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameEstimate:
    index: int
    env: LatLongMap
    yaw_to_world: float = 0.0

    def to_world(self) -> LatLongMap:
        return rotate_env(self.env, -self.yaw_to_world)


def temporal_loss(a: FrameEstimate, b: FrameEstimate) -> float:
    """
    Mean squared difference between ``a`` and ``b`` warped into ``a``'s frame.

    Raises:
        ResolutionMismatch: if the two maps differ in size.
    """
    check_same_resolution("temporal pair", a.env, b.env)
    warped = rotate_env(b.env, a.yaw_to_world - b.yaw_to_world)
    return float(np.mean((a.env.data - warped.data) ** 2))


def temporal_trace(estimates: Sequence[FrameEstimate]) -> List[float]:
    """Loss between each pair of consecutive frames."""
    return [temporal_loss(a, b) for a, b in zip(estimates[:-1], estimates[1:])]


def smooth_sequence(estimates: Sequence[FrameEstimate], alpha: float = 0.3) -> List[FrameEstimate]:
    """
    Exponential moving average in the world frame.

    ``S_0 = align(L_0)``, ``S_i = alpha * align(L_i) + (1 - alpha) * S_{i-1}``;
    each output is ``S_i`` rotated back into its own frame.

    Raises:
        ContractViolation: for an empty or unordered sequence, or alpha outside [0, 1].
    """
    if not estimates:
        raise ContractViolation("cannot smooth an empty sequence")
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation(f"alpha must lie in [0, 1], got {alpha}")
    indices = [e.index for e in estimates]
    if any(later <= earlier for earlier, later in zip(indices[:-1], indices[1:])):
        raise ContractViolation("frame indices must be strictly increasing")
    if alpha == 1.0 or len(estimates) == 1:
        return list(estimates)

    smoothed = []
    state = None
    for estimate in estimates:
        aligned = estimate.to_world().data
        state = aligned if state is None else alpha * aligned + (1.0 - alpha) * state
        env = rotate_env(LatLongMap(state), estimate.yaw_to_world)
        smoothed.append(replace(estimate, env=env))
    logger.info(f"Smoothed {len(estimates)} frames with alpha={alpha}")
    return smoothed
