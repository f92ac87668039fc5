"""
Forward rendering: irradiance stacks, diffuse and specular shading, full
synthetic renders with their ground-truth factors, and random environments.

Shading model (single bounce, no global illumination)::

    S_d(x) = sum_k L_k * dw_k * V(x, l_k) * max(n . l_k, 0)
    S_s(x) = rho_s * integral of L(w) D(w; o, p) dw      (D normalized, p = 2/sigma^2 - 2)
    rgb(x) = albedo(x) * S_d(x) + S_s(x)
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .config import RenderConfig
from .exceptions import ContractViolation, ResolutionMismatch
from .geometry import Camera, DepthFrame, NormalMap, area_downsample, march_visibility
from .radiometry import (DEFAULT_ENV_HEIGHT, DEFAULT_ENV_WIDTH, CubeGrid, LatLongMap, latlong_dirs,
                         latlong_to_cube, normalize, sample_latlong)
from .scene import Material, SceneDesc, intersect, occluded, surface_attributes

logger = logging.getLogger(__name__)

RAY_OFFSET = 1e-3
MIRROR_EXPONENT = 1e5
MARCH_CHUNK = 1 << 18
ENV_CLASSES = ("one-dominant", "multiple", "large-area", "near-ambient")


@dataclass(frozen=True)
class IrradianceStack:
    """One ``visibility * max(n.l, 0)`` image per cube direction, shaped (K, res, res)."""
    dirs: CubeGrid
    maps: np.ndarray

    @property
    def resolution(self) -> Tuple[int, int]:
        return self.maps.shape[1], self.maps.shape[2]

    def design_matrix(self) -> np.ndarray:
        """Columns ``R_k * dw_k`` flattened row-major, shaped (pixels, K)."""
        k = self.maps.shape[0]
        return self.maps.reshape(k, -1).T * self.dirs.solid_angles[None, :]


@dataclass(frozen=True)
class RenderResult:
    """A synthetic frame and its exact factorization ``rgb = albedo * diffuse + specular``."""
    scene: SceneDesc
    frame: DepthFrame
    rgb: np.ndarray
    albedo: np.ndarray
    diffuse: np.ndarray
    specular: np.ndarray
    normals: NormalMap

    @property
    def mask(self) -> np.ndarray:
        return self.frame.valid

    @property
    def camera(self) -> Camera:
        return self.frame.camera


def render_irradiance_stack(frame: DepthFrame, normals: NormalMap, dirs: CubeGrid,
                            resolution: int = 32) -> IrradianceStack:
    """
    Ray-march the irradiance basis images of a depth frame.

    Every valid frame pixel marches each lit direction against the depth
    surface; the full-resolution ``visibility * cos`` images are then
    area-averaged down to ``resolution`` with ``geometry.area_downsample``.
    Invalid pixels are 0.

    Raises:
        ResolutionMismatch: if the normal map and the depth differ in size.
    """
    if normals.normals.shape[:2] != frame.depth.shape:
        raise ResolutionMismatch("normals vs depth", normals.normals.shape[:2], frame.depth.shape)
    if dirs.count == 0:
        raise ContractViolation("irradiance stack needs at least one direction")
    h, w = frame.depth.shape
    valid = (frame.valid & normals.valid).reshape(-1)
    points = frame.points().reshape(-1, 3)[valid]
    nrm = normals.normals.reshape(-1, 3)[valid]
    light_cam = frame.camera.to_camera(dirs.dirs)

    maps = np.zeros((resolution, resolution, dirs.count))
    marched = shadowed = 0
    chunk = max(1, MARCH_CHUNK // max(points.shape[0], 1))
    for first in range(0, dirs.count, chunk):
        block = slice(first, first + chunk)
        cos = nrm @ light_cam[block].T
        pix, lit = np.nonzero(cos > 0)
        visible = march_visibility(frame, points[pix], nrm[pix], light_cam[block][lit])
        values = np.zeros_like(cos)
        values[pix, lit] = cos[pix, lit] * visible
        full = np.zeros((h * w, cos.shape[1]))
        full[valid] = values
        maps[..., block] = area_downsample(full.reshape(h, w, -1), resolution)
        marched += pix.size
        shadowed += int((~visible).sum())
    logger.info(f"Irradiance stack: {dirs.count} directions at {resolution}x{resolution} "
                f"from {w}x{h} pixels ({marched} marched rays, {shadowed} shadowed)")
    return IrradianceStack(dirs, np.clip(np.moveaxis(maps, -1, 0), 0.0, 1.0))


def render_diffuse(stack: IrradianceStack, light: CubeGrid) -> np.ndarray:
    """
    Diffuse shading as the light-weighted sum of irradiance maps.

    Returns:
        np.ndarray: RGB image shaped (res, res, 3)
    """
    if light.values is None:
        raise ContractViolation("light grid carries no intensities")
    if light.count != stack.dirs.count or not np.allclose(light.dirs, stack.dirs.dirs):
        raise ContractViolation("light grid and irradiance stack use different directions")
    weights = light.values * stack.dirs.solid_angles[:, None]
    return np.einsum("kyx,kc->yxc", stack.maps, weights)


def _diffuse_shading(scene: SceneDesc, points, normals, env: LatLongMap, face_res: int) -> np.ndarray:
    grid = latlong_to_cube(env, face_res)
    radiance = grid.values * grid.solid_angles[:, None]
    lit_dirs = np.any(grid.values > 0, axis=1)
    dirs = grid.dirs[lit_dirs]
    radiance = radiance[lit_dirs]
    out = np.zeros((points.shape[0], 3))
    if points.shape[0] == 0 or dirs.shape[0] == 0:
        return out
    origins = points + RAY_OFFSET * normals
    chunk = max(1, 2_000_000 // points.shape[0])
    for start in range(0, dirs.shape[0], chunk):
        d = dirs[start:start + chunk]
        cos = normals @ d.T
        pix, col = np.nonzero(cos > 0)
        blocked = occluded(scene, origins[pix], d[col])
        weights = np.zeros_like(cos)
        weights[pix, col] = np.where(blocked, 0.0, cos[pix, col])
        out += weights @ radiance[start:start + chunk]
    return out


def _hash_uniform(ids: np.ndarray, seed: int, stream: int) -> np.ndarray:
    """Per-id uniform numbers in [0, 1) from a splitmix64 hash of (id, seed, stream)."""
    with np.errstate(over="ignore"):
        z = ids.astype(np.uint64)
        z = z + np.uint64(seed & 0xFFFFFFFFFFFFFFFF) * np.uint64(0x9E3779B97F4A7C15)
        z = z + np.uint64(stream + 1) * np.uint64(0xD1B54A32D192ED03)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def _base_samples(samples: int, seed: int) -> np.ndarray:
    """Latin-hypercube points in the unit square, shared by every pixel."""
    rng = np.random.default_rng(seed)
    first = (np.arange(samples) + rng.random(samples)) / samples
    second = (rng.permutation(samples) + rng.random(samples)) / samples
    return np.stack([first, second], axis=-1)


def _tangent_frame(axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    helper = np.where(np.abs(axis[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t1 = normalize(np.cross(helper, axis))
    return t1, np.cross(axis, t1)


def _specular_shading(scene: Optional[SceneDesc], points, normals, views, rho_s, sigma,
                      env: LatLongMap, samples: int, seed: int, pixel_ids,
                      chunk: int = 2048) -> np.ndarray:
    out = np.zeros((points.shape[0], 3))
    cos_nv = np.einsum("nk,nk->n", normals, views)
    active = (rho_s > 0) & (cos_nv > 1e-4)
    if not np.any(active):
        return out
    mirror = normalize(2.0 * cos_nv[:, None] * normals - views)
    exponent = 2.0 / np.maximum(sigma, 1e-6) ** 2 - 2.0
    origins = points + RAY_OFFSET * normals

    sharp = active & (exponent > MIRROR_EXPONENT)
    if np.any(sharp):
        radiance = sample_latlong(env, mirror[sharp], bilinear=False)
        if scene is not None:
            radiance[occluded(scene, origins[sharp], mirror[sharp])] = 0.0
        out[sharp] = rho_s[sharp, None] * radiance

    glossy = np.flatnonzero(active & ~sharp)
    base = _base_samples(samples, seed)
    for start in range(0, glossy.size, chunk):
        idx = glossy[start:start + chunk]
        ids = np.asarray(pixel_ids)[idx]
        offset = np.stack([_hash_uniform(ids, seed, 0), _hash_uniform(ids, seed, 1)], axis=-1)
        xi = np.mod(base[None, :, :] + offset[:, None, :], 1.0)
        cos_a = xi[..., 0] ** (1.0 / (exponent[idx, None] + 1.0))
        sin_a = np.sqrt(np.maximum(0.0, 1.0 - cos_a ** 2))
        phi = 2.0 * np.pi * xi[..., 1]
        t1, t2 = _tangent_frame(mirror[idx])
        w = (cos_a[..., None] * mirror[idx, None, :]
             + (sin_a * np.cos(phi))[..., None] * t1[:, None, :]
             + (sin_a * np.sin(phi))[..., None] * t2[:, None, :])
        above = np.einsum("nsk,nk->ns", w, normals[idx]) > 0
        radiance = sample_latlong(env, w) * above[..., None]
        if scene is not None:
            pix, smp = np.nonzero(above)
            blocked = occluded(scene, origins[idx][pix], w[pix, smp])
            radiance[pix[blocked], smp[blocked]] = 0.0
        out[idx] = rho_s[idx, None] * radiance.mean(axis=1)
    return out


def render_specular(frame: DepthFrame, normals: NormalMap, material: Material, env: LatLongMap,
                    camera: Optional[Camera] = None, samples: int = 64, seed: int = 0,
                    scene: Optional[SceneDesc] = None) -> np.ndarray:
    """
    Specular shading of a frame with one homogeneous material.

    The lobe is a normalized Phong lobe about the mirror direction with
    exponent ``p = 2/sigma^2 - 2``, integrated by importance sampling with
    per-pixel hashed offsets from ``seed``. Lobes sharper than
    MIRROR_EXPONENT use the mirror lookup directly. Shadowing is tested
    against ``scene`` when one is given.

    Returns:
        np.ndarray: RGB image shaped (height, width, 3)
    """
    camera = camera or frame.camera
    h, w = frame.depth.shape
    out = np.zeros((h, w, 3))
    mask = frame.valid & normals.valid
    if material.rho_s == 0 or not np.any(mask):
        return out
    points = camera.to_world(frame.points()[mask]) + camera.origin
    nrm = camera.to_world(normals.normals[mask])
    views = normalize(camera.origin - points)
    n = points.shape[0]
    out[mask] = _specular_shading(
        scene, points, nrm, views, np.full(n, material.rho_s), np.full(n, material.sigma),
        env, samples, seed, np.flatnonzero(mask.reshape(-1)),
    )
    return out


def render_full(scene: SceneDesc, env: LatLongMap, config: Optional[RenderConfig] = None) -> RenderResult:
    """
    Render a scene under an environment map with exact ray casting.

    Args:
        scene: scene description
        env: lighting
        config: forward-renderer quality knobs

    Returns:
        RenderResult: rgb, depth and the ground-truth factors
    """
    if not scene.primitives:
        raise ContractViolation("cannot render an empty scene")
    config = config or RenderConfig()
    camera = scene.camera
    k = camera.intrinsics
    rays = camera.pixel_rays()
    lengths = np.linalg.norm(rays, axis=-1)
    dirs = camera.to_world(rays / lengths[..., None]).reshape(-1, 3)
    origins = np.broadcast_to(camera.origin, dirs.shape)
    t, index = intersect(scene, origins, dirs)
    hit = np.isfinite(t)

    depth = np.zeros(k.height * k.width)
    depth[hit] = t[hit] / lengths.reshape(-1)[hit]
    points = origins[hit] + t[hit, None] * dirs[hit]
    normals_w, albedo_hit, rho_s, sigma = surface_attributes(scene, points, index[hit], dirs[hit])

    diffuse = np.zeros((k.height * k.width, 3))
    specular = np.zeros((k.height * k.width, 3))
    albedo = np.zeros((k.height * k.width, 3))
    normals_c = np.zeros((k.height * k.width, 3))
    diffuse[hit] = _diffuse_shading(scene, points, normals_w, env, config.light_face_res)
    specular[hit] = _specular_shading(scene, points, normals_w, -dirs[hit], rho_s, sigma, env,
                                      config.specular_samples, config.seed, np.flatnonzero(hit))
    albedo[hit] = albedo_hit
    normals_c[hit] = camera.to_camera(normals_w)

    shape = (k.height, k.width, 3)
    diffuse, specular, albedo = diffuse.reshape(shape), specular.reshape(shape), albedo.reshape(shape)
    rgb = albedo * diffuse + specular
    frame = DepthFrame(camera, depth.reshape(k.height, k.width))
    logger.info(f"Rendered {k.width}x{k.height} frame, {int(hit.sum())} object pixels")
    return RenderResult(scene, frame, rgb, albedo, diffuse, specular,
                        NormalMap(normals_c.reshape(shape), hit.reshape(k.height, k.width)))


def _solid_angle_to_radius(omega: float) -> float:
    return math.acos(max(-1.0, 1.0 - omega / (2.0 * math.pi)))


def _random_upper_direction(rng, min_elevation_deg: float = 5.0) -> np.ndarray:
    z = rng.uniform(math.sin(math.radians(min_elevation_deg)), 1.0)
    phi = rng.uniform(0.0, 2.0 * math.pi)
    r = math.sqrt(max(0.0, 1.0 - z * z))
    return np.array([r * math.cos(phi), r * math.sin(phi), z])


def _place_lights(num_lights: int, size_range, intensity_range, seed: int, height: int,
                  upper_hemisphere: bool):
    if num_lights < 1:
        raise ContractViolation(f"need at least one light, got {num_lights}")
    rng = np.random.default_rng(seed)
    min_radius = 1.5 * math.pi / height
    margin = 2.0 * math.pi / height
    placed = []
    attempts = 0
    while len(placed) < num_lights:
        attempts += 1
        if attempts > 1000:
            raise ContractViolation(f"could not place {num_lights} non-overlapping lights")
        centre = _random_upper_direction(rng) if upper_hemisphere else normalize(rng.normal(size=3))
        radius = max(_solid_angle_to_radius(rng.uniform(*size_range)), min_radius)
        intensity = rng.uniform(*intensity_range)
        if any(math.acos(np.clip(centre @ c, -1, 1)) < radius + r + margin for c, r, _ in placed):
            continue
        placed.append((centre, radius, intensity))
    return placed


def gen_random_env(num_lights: int, size_range: Tuple[float, float] = (0.005, 0.05),
                   intensity_range: Tuple[float, float] = (10.0, 50.0), seed: int = 0,
                   width: int = DEFAULT_ENV_WIDTH, height: int = DEFAULT_ENV_HEIGHT,
                   ambient: float = 0.05, upper_hemisphere: bool = True) -> LatLongMap:
    """
    Ambient floor plus ``num_lights`` non-overlapping disk lights.

    Each light has a random centre, solid angle (steradians, from
    ``size_range``) and peak intensity; inside its disk radiance falls off as
    ``I * (1 - (angle / radius)^2)`` so the brightest bin marks the centre.
    Radii never drop below 1.5 bins.

    Raises:
        ContractViolation: if ``num_lights < 1`` or the lights cannot be placed apart.
    """
    placed = _place_lights(num_lights, size_range, intensity_range, seed, height, upper_hemisphere)
    logger.debug(f"Random environment: {num_lights} lights, seed={seed}")
    return disk_lights_env(placed, width, height, ambient)


def disk_lights_env(lights, width: int = DEFAULT_ENV_WIDTH, height: int = DEFAULT_ENV_HEIGHT,
                    ambient: float = 0.05) -> LatLongMap:
    """Ambient floor plus ``(centre, radius, intensity)`` disk lights with quadratic falloff."""
    dirs = latlong_dirs(width, height)
    data = np.full((height, width, 3), float(ambient))
    for centre, radius, intensity in lights:
        centre = normalize(np.asarray(centre, dtype=np.float64))
        angle = np.arccos(np.clip(dirs @ centre, -1.0, 1.0))
        data += (intensity * np.maximum(0.0, 1.0 - (angle / radius) ** 2))[..., None]
    return LatLongMap(data)


def light_centres(num_lights: int, size_range=(0.005, 0.05), intensity_range=(10.0, 50.0),
                  seed: int = 0, height: int = DEFAULT_ENV_HEIGHT, upper_hemisphere: bool = True):
    """Centres of the lights gen_random_env places for the same arguments."""
    placed = _place_lights(num_lights, size_range, intensity_range, seed, height, upper_hemisphere)
    return np.array([centre for centre, _, _ in placed])


def gen_env_preset(kind: str, seed: int = 0, width: int = DEFAULT_ENV_WIDTH,
                   height: int = DEFAULT_ENV_HEIGHT) -> LatLongMap:
    """
    Environment from one of the evaluation lighting classes.

    ``one-dominant``: a single small bright light; ``multiple``: three to five
    lights; ``large-area``: one wide dim light; ``near-ambient``: a bright
    ambient floor with one faint wide light.
    """
    rng = np.random.default_rng(seed)
    if kind == "one-dominant":
        return gen_random_env(1, (0.005, 0.02), (30.0, 60.0), seed, width, height)
    if kind == "multiple":
        return gen_random_env(int(rng.integers(3, 6)), (0.005, 0.03), (10.0, 40.0), seed, width, height)
    if kind == "large-area":
        return gen_random_env(1, (0.3, 0.6), (2.0, 5.0), seed, width, height)
    if kind == "near-ambient":
        return gen_random_env(1, (0.5, 0.8), (0.2, 0.5), seed, width, height, ambient=0.4)
    raise ContractViolation(f"unknown environment class '{kind}' (choose from {', '.join(ENV_CLASSES)})")
