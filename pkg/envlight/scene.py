"""
Scene descriptions for the forward renderer: materials, primitives, camera,
ray casting, and the seeded test-scene presets.
"""
import logging
import math
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .exceptions import ContractViolation
from .geometry import Camera, Intrinsics
from .radiometry import normalize

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
RAY_EPSILON = 1e-4
SCENE_PRESETS = ("sphere-on-plane", "box-on-plane", "cluster")


class Material(BaseModel):
    """Homogeneous material: diffuse albedo, specular scale and roughness."""
    model_config = ConfigDict(frozen=True)

    rho_d: List[float] = [0.8, 0.8, 0.8]
    rho_s: float = 0.0
    sigma: float = 0.1

    @field_validator("rho_d", mode="before")
    @classmethod
    def _broadcast(cls, value):
        if isinstance(value, (int, float)):
            return [float(value)] * 3
        return value

    @model_validator(mode="after")
    def _check(self):
        if len(self.rho_d) != 3:
            raise ValueError("rho_d needs one value per channel")
        if any(not 0.0 <= c <= 1.0 for c in self.rho_d) or not 0.0 <= self.rho_s <= 1.0:
            raise ValueError("rho_d and rho_s must lie in [0, 1]")
        if any(c + self.rho_s > 1.0 + 1e-9 for c in self.rho_d):
            raise ValueError("rho_d + rho_s must not exceed 1 in any channel")
        if not 0.0 < self.sigma <= 1.0:
            raise ValueError("sigma must lie in (0, 1]")
        return self

    @property
    def albedo(self) -> np.ndarray:
        return np.asarray(self.rho_d, dtype=np.float64)

    @property
    def exponent(self) -> float:
        """Lobe exponent p = 2/sigma^2 - 2."""
        return 2.0 / (self.sigma ** 2) - 2.0


MATERIAL_PRESETS = {
    "glossy-005": Material(rho_d=[0.5, 0.5, 0.5], rho_s=0.5, sigma=0.05),
    "glossy-01": Material(rho_d=[0.5, 0.5, 0.5], rho_s=0.5, sigma=0.1),
    "mostly-diffuse": Material(rho_d=[0.9, 0.9, 0.9], rho_s=0.1, sigma=0.1),
    "diffuse": Material(rho_d=[1.0, 1.0, 1.0], rho_s=0.0, sigma=0.1),
    "mirror": Material(rho_d=[0.0, 0.0, 0.0], rho_s=1.0, sigma=0.001),
    "red-glossy": Material(rho_d=[0.6, 0.05, 0.05], rho_s=0.3, sigma=0.05),
    # tinted bodies keep the white highlight separable by chromaticity
    "amber-glossy-005": Material(rho_d=[0.5, 0.25, 0.08], rho_s=0.5, sigma=0.05),
    "amber-glossy-01": Material(rho_d=[0.5, 0.25, 0.08], rho_s=0.5, sigma=0.1),
    "amber-mostly-diffuse": Material(rho_d=[0.9, 0.45, 0.15], rho_s=0.1, sigma=0.1),
}

GROUND_MATERIAL = Material(rho_d=[0.5, 0.5, 0.5], rho_s=0.0, sigma=0.1)


def material_preset(name: str) -> Material:
    try:
        return MATERIAL_PRESETS[name]
    except KeyError:
        raise ContractViolation(
            f"unknown material preset '{name}' (choose from {', '.join(MATERIAL_PRESETS)})"
        ) from None


class Sphere(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["sphere"] = "sphere"
    center: List[float]
    radius: float
    material: Material = Material()

    @model_validator(mode="after")
    def _check(self):
        if len(self.center) != 3 or self.radius <= 0:
            raise ValueError("sphere needs a 3D centre and a positive radius")
        return self


class Box(BaseModel):
    """Axis-aligned box."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["box"] = "box"
    center: List[float]
    size: List[float]
    material: Material = Material()

    @model_validator(mode="after")
    def _check(self):
        if len(self.center) != 3 or len(self.size) != 3 or min(self.size) <= 0:
            raise ValueError("box needs a 3D centre and positive extents")
        return self


class GroundPlane(BaseModel):
    """Square patch of the plane z = height centred on the origin, optionally checker-textured."""
    model_config = ConfigDict(frozen=True)

    kind: Literal["plane"] = "plane"
    height: float = 0.0
    extent: float = 4.0
    material: Material = GROUND_MATERIAL
    checker: Optional[float] = None
    checker_contrast: float = 0.5


Primitive = Annotated[Union[Sphere, Box, GroundPlane], Field(discriminator="kind")]


class SceneDesc(BaseModel):
    model_config = ConfigDict(frozen=True)

    schema_version: int = SCHEMA_VERSION
    primitives: List[Primitive]
    camera: Camera

    @model_validator(mode="after")
    def _check(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported scene schema_version {self.schema_version}")
        if not self.primitives:
            raise ValueError("scene needs at least one primitive")
        if not camera_sees_scene(self):
            raise ValueError("camera does not see any primitive")
        return self


def _intersect_sphere(prim: Sphere, origins, dirs):
    oc = origins - np.asarray(prim.center)
    b = np.einsum("nk,nk->n", oc, dirs)
    c = np.einsum("nk,nk->n", oc, oc) - prim.radius ** 2
    disc = b * b - c
    hit = disc >= 0
    root = np.sqrt(np.where(hit, disc, 0.0))
    t0 = -b - root
    t1 = -b + root
    t = np.where(t0 > RAY_EPSILON, t0, t1)
    t = np.where(hit & (t > RAY_EPSILON), t, np.inf)
    return t


def _sphere_normal(prim: Sphere, points):
    return normalize(points - np.asarray(prim.center))


def _intersect_box(prim: Box, origins, dirs):
    lo = np.asarray(prim.center) - 0.5 * np.asarray(prim.size)
    hi = np.asarray(prim.center) + 0.5 * np.asarray(prim.size)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / np.where(np.abs(dirs) < 1e-15, 1e-15, dirs)
    ta = (lo - origins) * inv
    tb = (hi - origins) * inv
    t_near = np.max(np.minimum(ta, tb), axis=1)
    t_far = np.min(np.maximum(ta, tb), axis=1)
    hit = (t_near <= t_far) & (t_far > RAY_EPSILON)
    t = np.where(t_near > RAY_EPSILON, t_near, t_far)
    return np.where(hit, t, np.inf)


def _box_normal(prim: Box, points):
    rel = (points - np.asarray(prim.center)) / (0.5 * np.asarray(prim.size))
    axis = np.argmax(np.abs(rel), axis=1)
    normal = np.zeros_like(points)
    normal[np.arange(points.shape[0]), axis] = np.sign(rel[np.arange(points.shape[0]), axis])
    return normal


def _intersect_plane(prim: GroundPlane, origins, dirs):
    dz = dirs[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (prim.height - origins[:, 2]) / dz
    hit = (np.abs(dz) > 1e-12) & (t > RAY_EPSILON)
    t = np.where(hit, t, np.inf)
    with np.errstate(invalid="ignore"):
        x = origins[:, 0] + t * dirs[:, 0]
        y = origins[:, 1] + t * dirs[:, 1]
    inside = (np.abs(x) <= prim.extent) & (np.abs(y) <= prim.extent)
    return np.where(hit & inside, t, np.inf)


def _plane_normal(prim: GroundPlane, points):
    normal = np.zeros_like(points)
    normal[:, 2] = 1.0
    return normal


_INTERSECT = {"sphere": _intersect_sphere, "box": _intersect_box, "plane": _intersect_plane}
_NORMAL = {"sphere": _sphere_normal, "box": _box_normal, "plane": _plane_normal}


def intersect(scene: SceneDesc, origins: np.ndarray, dirs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Closest hit of each ray.

    Returns:
        tuple: ``(t, index)``; ``t`` is inf and ``index`` -1 for misses
    """
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    best_t = np.full(origins.shape[0], np.inf)
    best_i = np.full(origins.shape[0], -1, dtype=np.int64)
    for index, prim in enumerate(scene.primitives):
        t = _INTERSECT[prim.kind](prim, origins, dirs)
        closer = t < best_t
        best_t[closer] = t[closer]
        best_i[closer] = index
    return best_t, best_i


def occluded(scene: SceneDesc, origins: np.ndarray, dirs: np.ndarray,
             max_t: float = np.inf) -> np.ndarray:
    """Any-hit test along rays; True where something blocks the ray before ``max_t``."""
    origins = np.asarray(origins, dtype=np.float64).reshape(-1, 3)
    dirs = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    blocked = np.zeros(origins.shape[0], dtype=bool)
    for prim in scene.primitives:
        todo = ~blocked
        if not np.any(todo):
            break
        t = _INTERSECT[prim.kind](prim, origins[todo], dirs[todo])
        blocked[todo] = t < max_t
    return blocked


def surface_attributes(scene: SceneDesc, points: np.ndarray, index: np.ndarray, view_dirs: np.ndarray):
    """
    World normals (facing the incoming ray), albedo and materials at hit points.

    Returns:
        tuple: ``(normals, albedo, rho_s, sigma)`` per point
    """
    n = points.shape[0]
    normals = np.zeros((n, 3))
    albedo = np.zeros((n, 3))
    rho_s = np.zeros(n)
    sigma = np.ones(n)
    for i, prim in enumerate(scene.primitives):
        sel = index == i
        if not np.any(sel):
            continue
        normals[sel] = _NORMAL[prim.kind](prim, points[sel])
        albedo[sel] = prim.material.albedo
        rho_s[sel] = prim.material.rho_s
        sigma[sel] = prim.material.sigma
        if prim.kind == "plane" and prim.checker:
            cells = np.floor(points[sel, 0] / prim.checker) + np.floor(points[sel, 1] / prim.checker)
            odd = np.mod(cells, 2) == 1
            albedo[np.flatnonzero(sel)[odd]] *= prim.checker_contrast
    facing = np.einsum("nk,nk->n", normals, view_dirs) > 0
    normals[facing] *= -1.0
    return normals, albedo, rho_s, sigma


def camera_sees_scene(scene: SceneDesc, samples: int = 9) -> bool:
    k = scene.camera.intrinsics
    us = np.linspace(0, k.width - 1, samples)
    vs = np.linspace(0, k.height - 1, samples)
    uu, vv = np.meshgrid(us, vs)
    rays = np.stack([(uu - k.cx) / k.fx, (vv - k.cy) / k.fy, np.ones_like(uu)], axis=-1).reshape(-1, 3)
    dirs = normalize(scene.camera.to_world(rays))
    origins = np.broadcast_to(scene.camera.origin, dirs.shape)
    t, _ = intersect(scene, origins, dirs)
    return bool(np.any(np.isfinite(t)))


def _camera_for(rng, target, distance_range, resolution, fov):
    azimuth = rng.uniform(0.0, 2.0 * math.pi)
    elevation = math.radians(rng.uniform(20.0, 45.0))
    distance = rng.uniform(*distance_range)
    position = np.asarray(target) + distance * np.array([
        math.cos(elevation) * math.cos(azimuth),
        math.cos(elevation) * math.sin(azimuth),
        math.sin(elevation),
    ])
    return Camera.look_at(position, target, Intrinsics.from_fov(resolution, resolution, fov))


def _place_cluster(rng, material: Material) -> List[Primitive]:
    count = int(rng.integers(1, 6))
    placed = []
    footprints: List[Tuple[np.ndarray, float]] = []
    attempts = 0
    while len(placed) < count and attempts < 200:
        attempts += 1
        size = rng.uniform(0.15, 0.35)
        xy = rng.uniform(-0.7, 0.7, size=2)
        if any(np.linalg.norm(xy - other) < size + r + 0.05 for other, r in footprints):
            continue
        footprints.append((xy, size))
        if rng.random() < 0.5:
            placed.append(Sphere(center=[xy[0], xy[1], size], radius=size, material=material))
        else:
            edge = size * 1.4
            height = rng.uniform(0.6, 1.6) * edge
            placed.append(Box(center=[xy[0], xy[1], height / 2.0], size=[edge, edge, height],
                              material=material))
    return placed


def gen_test_scene(preset: str, material: Material, seed: int, resolution: int = 64,
                   fov: float = 35.0) -> SceneDesc:
    """
    Deterministic test scene for a preset and seed.

    Args:
        preset: ``sphere-on-plane``, ``box-on-plane`` or ``cluster``
        material: material of the objects (the ground stays grey diffuse)
        seed: random seed
        resolution: square image size in pixels
        fov: horizontal field of view in degrees

    Returns:
        SceneDesc: ground plane plus 1-5 objects (cluster) or a single object
    """
    rng = np.random.default_rng(seed)
    ground = GroundPlane(height=0.0)
    if preset == "sphere-on-plane":
        radius = rng.uniform(0.4, 0.6)
        objects = [Sphere(center=[0.0, 0.0, radius], radius=radius, material=material)]
        target = [0.0, 0.0, 0.6 * radius]
    elif preset == "box-on-plane":
        size = rng.uniform(0.45, 0.7, size=3)
        objects = [Box(center=[0.0, 0.0, size[2] / 2.0], size=size.tolist(), material=material)]
        target = [0.0, 0.0, 0.4 * size[2]]
    elif preset == "cluster":
        objects = _place_cluster(rng, material)
        target = [0.0, 0.0, 0.15]
    else:
        raise ContractViolation(f"unknown scene preset '{preset}' (choose from {', '.join(SCENE_PRESETS)})")
    camera = _camera_for(rng, target, (2.6, 3.2), resolution, fov)
    scene = SceneDesc(primitives=[ground] + objects, camera=camera)
    logger.info(f"Generated {preset} scene with {len(scene.primitives)} primitives (seed={seed})")
    return scene
