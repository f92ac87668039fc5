"""
End-to-end estimation: one RGBD frame to an environment map, and a sequence
of frames to temporally smoothed estimates.

Stages: central crop, bilateral depth filter, normals, decomposition,
irradiance stack + diffuse inversion, specular projection, fusion.
"""
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import numpy as np

from .config import RunConfig
from .decompose import Decomposition, decompose_dichromatic, decompose_passthrough
from .exceptions import ContractViolation, ResolutionMismatch
from .forward import IrradianceStack, render_irradiance_stack
from .fuse import fuse, splat
from .geometry import DepthFrame, NormalMap, bilateral_depth, normals_from_depth
from .radiometry import LatLongMap, cube_dirs, cube_to_latlong
from .temporal import FrameEstimate, smooth_sequence, temporal_trace
from .translate import DiffuseSolution, SparseAngularMap, downsample_shading, project_specular, solve_diffuse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrameResult:
    """Final estimate plus every intermediate a caller may want to inspect or save."""
    env: LatLongMap
    decomposition: Decomposition
    specular: SparseAngularMap
    diffuse_env: Optional[LatLongMap] = None
    stack: Optional[IrradianceStack] = None
    solution: Optional[DiffuseSolution] = None
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def total_ms(self) -> float:
        return sum(self.timings.values())


@dataclass(frozen=True)
class SequenceInput:
    index: int
    rgb: np.ndarray
    frame: DepthFrame
    yaw: float = 0.0


@dataclass(frozen=True)
class SequenceResult:
    raw: List[FrameEstimate]
    smoothed: List[FrameEstimate]
    raw_trace: List[float]
    smoothed_trace: List[float]


def center_crop(rgb: np.ndarray, frame: DepthFrame, crop: int):
    """
    Central ``crop x crop`` window of an RGBD frame with matching intrinsics.

    Raises:
        ContractViolation: if the crop is larger than the frame.
        ResolutionMismatch: if rgb and depth differ in size.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    h, w = frame.depth.shape
    if rgb.shape[:2] != (h, w):
        raise ResolutionMismatch("rgb vs depth", rgb.shape[:2], (h, w))
    if crop > min(h, w):
        raise ContractViolation(f"crop {crop} exceeds the {w}x{h} frame")
    if crop == h and crop == w:
        return rgb, frame
    top = (h - crop) // 2
    left = (w - crop) // 2
    camera = frame.camera.model_copy(update={
        "intrinsics": frame.intrinsics.cropped(left, top, crop, crop),
    })
    window = (slice(top, top + crop), slice(left, left + crop))
    return rgb[window], DepthFrame(camera, frame.depth[window])


def fit_crop(crop: int, frame: DepthFrame) -> int:
    """The configured crop, capped to the frame's shorter side."""
    return min(crop, *frame.depth.shape)


def _crop_decomposition(decomp: Decomposition, shape, crop: int) -> Decomposition:
    h, w = shape
    if decomp.mask.shape != (h, w):
        raise ResolutionMismatch("decomposition vs depth", decomp.mask.shape, (h, w))
    if crop == h and crop == w:
        return decomp
    top = (h - crop) // 2
    left = (w - crop) // 2
    window = (slice(top, top + crop), slice(left, left + crop))
    return Decomposition(
        albedo=decomp.albedo[window],
        diffuse_shading=decomp.diffuse_shading[window],
        specular_shading=decomp.specular_shading[window],
        normals=NormalMap(decomp.normals.normals[window], decomp.normals.valid[window]),
        mask=decomp.mask[window],
        residual=decomp.residual,
    )


def _specular_only(spec: SparseAngularMap, sigma_deg: float) -> LatLongMap:
    values, _ = splat(spec, sigma_deg)
    return LatLongMap(np.maximum(values, 0.0))


def estimate_frame(rgb: np.ndarray, frame: DepthFrame, cfg: Optional[RunConfig] = None,
                   gt_decomposition: Optional[Decomposition] = None) -> FrameResult:
    """
    Estimate the environment lighting seen by one RGBD frame.

    Args:
        rgb: linear HDR image (height, width, 3)
        frame: depth and camera of the same view
        cfg: run configuration; ``cfg.mode`` selects the ablation path
        gt_decomposition: known factors (replaces the dichromatic decomposition)

    Returns:
        FrameResult: world-space environment map and the intermediates

    Raises:
        ContractViolation: for an oversize crop or an empty object region.
        ResolutionMismatch: if rgb, depth and decomposition disagree in size.
    """
    cfg = cfg or RunConfig()
    timings: Dict[str, float] = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = 1000.0 * (now - clock)
        clock = now

    full_shape = frame.depth.shape
    rgb, frame = center_crop(rgb, frame, cfg.crop)
    frame = bilateral_depth(frame, cfg.bilateral_sigma_space, cfg.bilateral_sigma_range)
    lap("geometry")

    if gt_decomposition is not None:
        decomp = _crop_decomposition(gt_decomposition, full_shape, cfg.crop)
    else:
        normals = normals_from_depth(frame)
        mask = normals.valid & frame.valid
        if not np.any(mask):
            raise ContractViolation("no valid object pixels in the cropped frame")
        if cfg.mode == "no-decomposition":
            decomp = decompose_passthrough(rgb, normals, mask)
        else:
            decomp = decompose_dichromatic(rgb, normals, mask)
    lap("decompose")

    diffuse_env = stack = solution = None
    if cfg.mode != "specular-only":
        usable = NormalMap(decomp.normals.normals, decomp.normals.valid & decomp.mask)
        stack = render_irradiance_stack(frame, usable, cube_dirs(cfg.cube_face_res),
                                        cfg.irradiance_res)
        shading = np.where(usable.valid[..., None], decomp.diffuse_shading, 0.0)
        shading_lr = downsample_shading(shading, cfg.irradiance_res)
        solution = solve_diffuse(shading_lr, stack, cfg.solver)
        diffuse_env = cube_to_latlong(solution.grid, cfg.env_width, cfg.env_height)
    lap("diffuse")

    if cfg.mode == "diffuse-only":
        spec = SparseAngularMap.empty(cfg.env_width, cfg.env_height)
    else:
        spec = project_specular(decomp, frame, out_w=cfg.env_width, out_h=cfg.env_height)
    lap("specular")

    if cfg.mode == "specular-only":
        env = _specular_only(spec, cfg.fusion.splat_sigma_deg)
    elif cfg.mode == "diffuse-only":
        env = diffuse_env
    else:
        env = fuse(diffuse_env, spec, cfg.fusion)
    lap("fuse")

    result = FrameResult(env, decomp, spec, diffuse_env, stack, solution, timings)
    logger.info(f"Estimated frame ({cfg.mode}) in {result.total_ms:.0f} ms: "
                + ", ".join(f"{k} {v:.0f}" for k, v in timings.items()))
    return result


def estimate_sequence(frames: Sequence[SequenceInput], cfg: Optional[RunConfig] = None) -> SequenceResult:
    """
    Estimate every frame independently, then smooth the sequence in the world frame.

    Raises:
        ContractViolation: for an empty or unordered sequence.
    """
    cfg = cfg or RunConfig()
    if not frames:
        raise ContractViolation("cannot estimate an empty sequence")
    raw = []
    for item in frames:
        result = estimate_frame(item.rgb, item.frame, cfg)
        raw.append(FrameEstimate(item.index, result.env, item.yaw))
        logger.info(f"Frame {item.index}: estimated")
    smoothed = smooth_sequence(raw, cfg.alpha)
    sequence = SequenceResult(raw, smoothed, temporal_trace(raw), temporal_trace(smoothed))
    if sequence.raw_trace:
        logger.info(f"Temporal loss: raw mean {np.mean(sequence.raw_trace):.5f}, "
                    f"smoothed mean {np.mean(sequence.smoothed_trace):.5f}")
    return sequence


def replicate(item: SequenceInput, copies: int) -> List[SequenceInput]:
    """``copies`` copies of one frame with consecutive indices (single-image input)."""
    if copies < 1:
        raise ContractViolation(f"need at least one copy, got {copies}")
    return [replace(item, index=item.index + i) for i in range(copies)]
