"""
Depth-image processing: bilateral filtering, unprojection, normals, mirror
reflection and ray-marched visibility against the depth-derived surface.

Camera space is x right, y down, z forward. Pixel centres sit at integer
coordinates, so the ray through pixel (u, v) is ((u-cx)/fx, (v-cy)/fy, 1).
"""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .exceptions import BackFacingError, ContractViolation, ResolutionMismatch
from .radiometry import normalize

logger = logging.getLogger(__name__)

# marching constants
MARCH_STEP_PIXELS = 0.5
SURFACE_OFFSET = 1e-3
DEPTH_BIAS = 1e-3
OCCLUDER_THICKNESS = 0.5
MAX_MARCH_STEPS = 512
MAX_WORLD_STEP = 0.05


class Intrinsics(BaseModel):
    model_config = ConfigDict(frozen=True)

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    @model_validator(mode="after")
    def _check(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image size must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")
        return self

    @classmethod
    def from_fov(cls, width: int, height: int, fov_deg: float = 40.0) -> "Intrinsics":
        focal = 0.5 * width / math.tan(math.radians(fov_deg) / 2.0)
        return cls(fx=focal, fy=focal, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                   width=width, height=height)

    def cropped(self, left: int, top: int, width: int, height: int) -> "Intrinsics":
        return Intrinsics(fx=self.fx, fy=self.fy, cx=self.cx - left, cy=self.cy - top,
                          width=width, height=height)


class Camera(BaseModel):
    """Pinhole camera: intrinsics, camera-to-world rotation and world position."""
    model_config = ConfigDict(frozen=True)

    intrinsics: Intrinsics
    rotation: List[List[float]] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    position: List[float] = [0.0, 0.0, 0.0]

    @model_validator(mode="after")
    def _check(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        if rot.shape != (3, 3) or not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
            raise ValueError("camera rotation must be an orthonormal 3x3 matrix")
        if len(self.position) != 3:
            raise ValueError("camera position must have 3 components")
        return self

    @property
    def R(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=np.float64)

    @property
    def origin(self) -> np.ndarray:
        return np.asarray(self.position, dtype=np.float64)

    @classmethod
    def look_at(cls, position, target, intrinsics: Intrinsics) -> "Camera":
        position = np.asarray(position, dtype=np.float64)
        forward = normalize(np.asarray(target, dtype=np.float64) - position)
        right = np.cross(forward, [0.0, 0.0, 1.0])
        if np.linalg.norm(right) < 1e-9:
            raise ContractViolation("camera cannot look straight along the up axis")
        right = normalize(right)
        down = np.cross(forward, right)
        rotation = np.stack([right, down, forward], axis=1)
        return cls(intrinsics=intrinsics, rotation=rotation.tolist(), position=position.tolist())

    def to_world(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v) @ self.R.T

    def to_camera(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v) @ self.R

    def pixel_rays(self) -> np.ndarray:
        """Unnormalized camera-space rays (z = 1) through every pixel centre."""
        k = self.intrinsics
        vv, uu = np.meshgrid(np.arange(k.height), np.arange(k.width), indexing="ij")
        return np.stack([(uu - k.cx) / k.fx, (vv - k.cy) / k.fy, np.ones_like(uu, dtype=np.float64)],
                        axis=-1)


@dataclass(frozen=True)
class DepthFrame:
    """Metric z-depth per pixel; 0 marks invalid pixels."""
    camera: Camera
    depth: np.ndarray

    def __post_init__(self):
        depth = np.asarray(self.depth, dtype=np.float64)
        k = self.camera.intrinsics
        if depth.shape != (k.height, k.width):
            raise ResolutionMismatch("depth vs intrinsics", depth.shape, (k.height, k.width))
        if not np.all(np.isfinite(depth)) or np.any(depth < 0):
            raise ContractViolation("depth must be finite and non-negative")
        object.__setattr__(self, "depth", depth)

    @property
    def intrinsics(self) -> Intrinsics:
        return self.camera.intrinsics

    @property
    def valid(self) -> np.ndarray:
        return self.depth > 0

    def with_depth(self, depth: np.ndarray) -> "DepthFrame":
        return DepthFrame(self.camera, depth)

    def points(self) -> np.ndarray:
        """Camera-space points of every pixel, shaped (height, width, 3); zeros where invalid."""
        return self.camera.pixel_rays() * self.depth[..., None]


@dataclass(frozen=True)
class NormalMap:
    """Camera-space unit normals with a validity mask."""
    normals: np.ndarray
    valid: np.ndarray

    def world(self, camera: Camera) -> np.ndarray:
        return camera.to_world(self.normals)


def bilateral_depth(frame: DepthFrame, sigma_space: float = 3.0, sigma_range: float = 0.02) -> DepthFrame:
    """
    Edge-preserving smoothing of the depth image.

    Invalid pixels never enter a kernel and stay invalid.

    Args:
        frame: input depth frame
        sigma_space: spatial standard deviation in pixels
        sigma_range: depth standard deviation in meters

    Returns:
        DepthFrame: the filtered frame
    """
    if sigma_space <= 0 or sigma_range <= 0:
        raise ContractViolation("bilateral sigmas must be positive")
    depth = frame.depth
    valid = frame.valid
    radius = max(1, int(math.ceil(2.0 * sigma_space)))
    padded = np.pad(depth, radius)
    padded_valid = np.pad(valid, radius)
    h, w = depth.shape
    num = np.zeros_like(depth)
    den = np.zeros_like(depth)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            spatial = math.exp(-(dx * dx + dy * dy) / (2.0 * sigma_space ** 2))
            if spatial < 1e-4:
                continue
            nb = padded[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
            nb_valid = padded_valid[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
            weight = spatial * np.exp(-((nb - depth) ** 2) / (2.0 * sigma_range ** 2)) * nb_valid
            num += weight * nb
            den += weight
    out = np.where(valid & (den > 0), num / np.maximum(den, 1e-300), 0.0)
    return frame.with_depth(out)


def unproject(u, v, frame: DepthFrame) -> np.ndarray:
    """
    Camera-space point (meters) seen at pixel (u, v).

    Raises:
        ContractViolation: if the pixel has no valid depth.
    """
    k = frame.intrinsics
    row = int(round(float(v)))
    col = int(round(float(u)))
    if not (0 <= row < k.height and 0 <= col < k.width):
        raise ContractViolation(f"pixel ({u}, {v}) outside the frame")
    z = frame.depth[row, col]
    if z <= 0:
        raise ContractViolation(f"pixel ({u}, {v}) has no valid depth")
    return np.array([z * (u - k.cx) / k.fx, z * (v - k.cy) / k.fy, z])


def reproject(points: np.ndarray, intrinsics: Intrinsics) -> Tuple[np.ndarray, np.ndarray]:
    """Continuous pixel coordinates of camera-space points."""
    points = np.asarray(points, dtype=np.float64)
    z = points[..., 2]
    u = intrinsics.fx * points[..., 0] / z + intrinsics.cx
    v = intrinsics.fy * points[..., 1] / z + intrinsics.cy
    return u, v


def _box_weights(size: int, bins: int) -> np.ndarray:
    """(bins, size) matrix of pixel-overlap fractions; every row sums to 1."""
    edges = np.arange(bins + 1) * (size / bins)
    left = np.arange(size)
    overlap = (np.minimum(left[None, :] + 1.0, edges[1:, None])
               - np.maximum(left[None, :].astype(np.float64), edges[:-1, None]))
    return np.clip(overlap, 0.0, None) / (size / bins)


def area_downsample(image: np.ndarray, height: int, width: Optional[int] = None) -> np.ndarray:
    """
    Exact box average of an image onto a coarser ``height x width`` grid.

    Each output cell is the area-weighted mean of the pixels it covers,
    fractional pixels included, so the operator is linear and keeps
    constants. Trailing axes (channels, directions) pass through.
    """
    image = np.asarray(image, dtype=np.float64)
    width = width or height
    if height < 1 or width < 1:
        raise ContractViolation(f"cannot downsample to {width}x{height}")
    rows = _box_weights(image.shape[0], height)
    cols = _box_weights(image.shape[1], width)
    return np.einsum("yh,hw...,xw->yx...", rows, image, cols, optimize=True)


def normals_from_depth(frame: DepthFrame, max_depth_jump: float = 0.1) -> NormalMap:
    """
    Normals from central differences of unprojected neighbours.

    n = normalize((P(u+1,v) - P(u-1,v)) x (P(u,v+1) - P(u,v-1))), flipped to
    face the camera. Border pixels, pixels with an invalid neighbour and
    pixels straddling a depth jump larger than ``max_depth_jump`` (relative)
    are marked invalid.
    """
    pts = frame.points()
    valid = frame.valid
    h, w = valid.shape
    normals = np.zeros((h, w, 3))
    mask = np.zeros((h, w), dtype=bool)
    if h < 3 or w < 3:
        return NormalMap(normals, mask)
    du = pts[1:-1, 2:] - pts[1:-1, :-2]
    dv = pts[2:, 1:-1] - pts[:-2, 1:-1]
    n = np.cross(du, dv)
    centre = pts[1:-1, 1:-1]
    flip = np.einsum("...k,...k->...", n, centre) > 0
    n[flip] *= -1.0
    length = np.linalg.norm(n, axis=-1)
    inner = (valid[1:-1, 1:-1] & valid[1:-1, 2:] & valid[1:-1, :-2]
             & valid[2:, 1:-1] & valid[:-2, 1:-1] & (length > 1e-12))
    z = frame.depth
    zc = np.maximum(z[1:-1, 1:-1], 1e-12)
    jump = np.maximum.reduce([
        np.abs(z[1:-1, 2:] - z[1:-1, :-2]),
        np.abs(z[2:, 1:-1] - z[:-2, 1:-1]),
    ]) / zc
    inner &= jump <= max_depth_jump
    normals[1:-1, 1:-1] = np.where(inner[..., None], n / np.maximum(length, 1e-12)[..., None], 0.0)
    mask[1:-1, 1:-1] = inner
    return NormalMap(normals, mask)


def mirror_direction(n, view) -> np.ndarray:
    """
    Reflect ``view`` about ``n``: o = 2(n.view)n - view.

    Both arguments are unit vectors (or stacks of them); ``view`` points from
    the surface toward the camera.

    Raises:
        BackFacingError: if any pair has n.view <= 0.
    """
    n = np.asarray(n, dtype=np.float64)
    view = np.asarray(view, dtype=np.float64)
    cos = np.einsum("...k,...k->...", n, view)
    if np.any(cos <= 0):
        raise BackFacingError("surface faces away from the viewer (n.view <= 0)")
    return normalize(2.0 * cos[..., None] * n - view)


def _sample_depth(depth: np.ndarray, valid: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Bilinear depth where all four taps are valid, nearest valid tap otherwise."""
    h, w = depth.shape
    u0 = np.clip(np.floor(u).astype(np.int64), 0, w - 1)
    v0 = np.clip(np.floor(v).astype(np.int64), 0, h - 1)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu = np.clip(u - u0, 0.0, 1.0)
    fv = np.clip(v - v0, 0.0, 1.0)
    taps_valid = valid[v0, u0] & valid[v0, u1] & valid[v1, u0] & valid[v1, u1]
    bilinear = ((1 - fv) * ((1 - fu) * depth[v0, u0] + fu * depth[v0, u1])
                + fv * ((1 - fu) * depth[v1, u0] + fu * depth[v1, u1]))
    nu = np.clip(np.floor(u + 0.5).astype(np.int64), 0, w - 1)
    nv = np.clip(np.floor(v + 0.5).astype(np.int64), 0, h - 1)
    nearest = depth[nv, nu]
    scene = np.where(taps_valid, bilinear, nearest)
    has_scene = taps_valid | valid[nv, nu]
    return scene, has_scene


def march_visibility(frame: DepthFrame, points: np.ndarray, normals: np.ndarray,
                     light_cam: np.ndarray, thickness: float = OCCLUDER_THICKNESS,
                     max_steps: int = MAX_MARCH_STEPS) -> np.ndarray:
    """
    Vectorized screen-space shadow test.

    Rays start at ``points + SURFACE_OFFSET * normals`` and travel along the
    camera-space direction ``light_cam`` (one shared direction or one per
    ray). Each step advances the projected position by about half a pixel.
    A ray is occluded when it lies behind the interpolated scene depth by
    more than DEPTH_BIAS and less than ``thickness``; rays leaving the image
    or passing in front of every surface are unoccluded.

    Returns:
        np.ndarray: boolean visibility per point
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    normals = np.asarray(normals, dtype=np.float64).reshape(-1, 3)
    l = np.broadcast_to(np.asarray(light_cam, dtype=np.float64), points.shape)
    k = frame.intrinsics
    depth = frame.depth
    valid = frame.valid
    visible = np.ones(points.shape[0], dtype=bool)
    if not np.any(valid) or points.shape[0] == 0:
        return visible
    z_min = depth[valid].min()
    z_max = depth[valid].max()

    origin = points + SURFACE_OFFSET * normals
    t = np.zeros(points.shape[0])
    active = np.arange(points.shape[0])
    for _ in range(max_steps):
        if active.size == 0:
            break
        la = l[active]
        pos = origin[active] + t[active, None] * la
        x, y, z = pos[:, 0], pos[:, 1], pos[:, 2]
        escaped = (z <= 1e-6) | ((la[:, 2] <= 0) & (z < z_min - DEPTH_BIAS)) | \
                  ((la[:, 2] >= 0) & (z > z_max + thickness))
        safe_z = np.maximum(z, 1e-6)
        u = k.fx * x / safe_z + k.cx
        v = k.fy * y / safe_z + k.cy
        escaped |= (u < -0.5) | (u > k.width - 0.5) | (v < -0.5) | (v > k.height - 0.5)
        scene, has_scene = _sample_depth(depth, valid, u, v)
        behind = z - scene
        occluded = (~escaped) & has_scene & (t[active] > 0) & (behind > DEPTH_BIAS) & (behind < thickness)
        visible[active[occluded]] = False
        keep = ~(escaped | occluded)
        # image-space speed of the projected ray, pixels per meter of travel
        du = k.fx * (la[:, 0] * safe_z - x * la[:, 2]) / safe_z ** 2
        dv = k.fy * (la[:, 1] * safe_z - y * la[:, 2]) / safe_z ** 2
        speed = np.hypot(du, dv)
        step = np.minimum(MARCH_STEP_PIXELS / np.maximum(speed, 1e-9), MAX_WORLD_STEP)
        t[active] += np.maximum(step, 1e-5)
        active = active[keep]
    return visible


def visibility(u, v, l, frame: DepthFrame, normals: Optional[NormalMap] = None) -> int:
    """
    Visibility of world-space direction ``l`` from the surface point at pixel (u, v).

    Returns:
        int: 1 if the ray escapes the depth-derived surface, 0 if occluded
    """
    point = unproject(u, v, frame)
    if normals is None:
        normals = normals_from_depth(frame)
    row, col = int(round(float(v))), int(round(float(u)))
    n = normals.normals[row, col] if normals.valid[row, col] else normalize(-point)
    l_cam = frame.camera.to_camera(np.asarray(l, dtype=np.float64))
    return int(march_visibility(frame, point[None, :], n[None, :], l_cam)[0])
