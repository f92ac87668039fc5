"""
Evaluation metrics: light RMSE, probe re-render RMSE, Huber distance and
low-order spherical-harmonic baselines. All values are in linear radiance.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import lpmv

from .config import RenderConfig
from .exceptions import ContractViolation
from .forward import render_full
from .geometry import Camera, Intrinsics
from .radiometry import LatLongMap, check_same_resolution, latlong_dirs, solid_angles
from .scene import GroundPlane, MATERIAL_PRESETS, Box, SceneDesc, Sphere

logger = logging.getLogger(__name__)

MAX_SH_ORDER = 10
PROBE_RESOLUTION = 48


@dataclass(frozen=True)
class ProbeSet:
    """Fixed objects and camera used to score an estimated light by re-rendering."""
    names: List[str]
    scenes: List[SceneDesc]
    render: RenderConfig = field(default_factory=lambda: RenderConfig(light_face_res=8, specular_samples=32, seed=0))


def _probe_camera(resolution: int) -> Camera:
    return Camera.look_at([0.0, -3.2, 1.4], [0.0, 0.0, 0.45], Intrinsics.from_fov(resolution, resolution, 35.0))


@lru_cache(maxsize=8)
def default_probe_set(resolution: int = PROBE_RESOLUTION, specular: bool = False) -> ProbeSet:
    """
    Virtual inserts standing on a 3 m floor patch: a diffuse sphere and a
    diffuse box cluster.

    With ``specular`` a glossy sphere (sigma 0.05) and a mirror sphere join
    the set. Their error is dominated by the radiance of the map itself at
    the reflected directions, so they score sharp detail rather than the
    lighting of an inserted object.
    """
    camera = _probe_camera(resolution)
    floor = GroundPlane(extent=1.5)

    def sphere(material_name):
        return SceneDesc(primitives=[floor, Sphere(center=[0.0, 0.0, 0.5], radius=0.5,
                                                   material=MATERIAL_PRESETS[material_name])], camera=camera)

    boxes = [
        Box(center=[-0.45, 0.1, 0.25], size=[0.4, 0.4, 0.5], material=MATERIAL_PRESETS["diffuse"]),
        Box(center=[0.35, -0.1, 0.35], size=[0.35, 0.5, 0.7], material=MATERIAL_PRESETS["diffuse"]),
        Box(center=[0.0, 0.55, 0.15], size=[0.6, 0.3, 0.3], material=MATERIAL_PRESETS["diffuse"]),
    ]
    names = ["diffuse-sphere", "box-cluster"]
    scenes = [sphere("diffuse"), SceneDesc(primitives=[floor] + boxes, camera=camera)]
    if specular:
        names += ["glossy-sphere", "mirror-sphere"]
        scenes += [sphere("glossy-005"), sphere("mirror")]
    return ProbeSet(names=names, scenes=scenes)


def light_rmse(est: LatLongMap, gt: LatLongMap, weighted: bool = False) -> float:
    """
    Root mean squared radiance difference over pixels and channels.

    With ``weighted`` each pixel counts in proportion to its solid angle.

    Raises:
        ResolutionMismatch: if the maps differ in size.
    """
    check_same_resolution("light_rmse", est, gt)
    sq = (est.data - gt.data) ** 2
    if not weighted:
        return float(np.sqrt(sq.mean()))
    w = solid_angles(gt.width, gt.height).per_pixel()
    return float(np.sqrt((sq.sum(axis=-1) * w).sum() / (3.0 * w.sum())))


def render_rmse(est: LatLongMap, gt: LatLongMap, probes: Optional[ProbeSet] = None) -> float:
    """Mean over probes of the object-pixel RMSE between renders under ``est`` and ``gt``."""
    probes = probes or default_probe_set()
    errors = []
    for name, scene in zip(probes.names, probes.scenes):
        r_est = render_full(scene, est, probes.render)
        r_gt = render_full(scene, gt, probes.render)
        mask = r_gt.mask
        errors.append(float(np.sqrt(np.mean((r_est.rgb[mask] - r_gt.rgb[mask]) ** 2))))
        logger.debug(f"Probe {name}: rmse {errors[-1]:.5f}")
    return float(np.mean(errors))


def huber(est: LatLongMap, gt: LatLongMap, delta: float = 1.0) -> float:
    """
    Mean Huber penalty: ``d^2/2`` below ``delta``, ``delta*(d - delta/2)`` above.

    Raises:
        ContractViolation: if ``delta <= 0``.
    """
    if delta <= 0:
        raise ContractViolation(f"huber delta must be positive, got {delta}")
    check_same_resolution("huber", est, gt)
    d = np.abs(est.data - gt.data)
    penalty = np.where(d <= delta, 0.5 * d * d, delta * (d - 0.5 * delta))
    return float(penalty.mean())


def sh_count(order: int) -> int:
    return (order + 1) ** 2


def sh_index(l: int, m: int) -> int:  # noqa: E741
    return l * l + l + m


def sh_basis(dirs: np.ndarray, order: int) -> np.ndarray:
    """
    Real orthonormal spherical harmonics up to degree ``order``.

    Columns are ordered by ``l*l + l + m``.
    """
    dirs = np.asarray(dirs, dtype=np.float64)
    z = np.clip(dirs[..., 2], -1.0, 1.0)
    phi = np.arctan2(dirs[..., 1], dirs[..., 0])
    out = np.empty(dirs.shape[:-1] + (sh_count(order),))
    for l in range(order + 1):  # noqa: E741
        for m in range(-l, l + 1):
            am = abs(m)
            k = math.sqrt((2 * l + 1) / (4.0 * math.pi) * math.factorial(l - am) / math.factorial(l + am))
            legendre = lpmv(am, l, z)
            if m == 0:
                value = k * legendre
            elif m > 0:
                value = math.sqrt(2.0) * k * np.cos(m * phi) * legendre
            else:
                value = math.sqrt(2.0) * k * np.sin(am * phi) * legendre
            out[..., sh_index(l, m)] = value
    return out


def _check_order(order: int):
    if not 0 <= order <= MAX_SH_ORDER:
        raise ContractViolation(f"SH order must lie in [0, {MAX_SH_ORDER}], got {order}")


def sh_fit(env: LatLongMap, order: int) -> np.ndarray:
    """
    Project an environment onto real SH by solid-angle weighted least squares.

    Returns:
        np.ndarray: coefficients shaped ``((order+1)^2, 3)``
    """
    _check_order(order)
    basis = sh_basis(latlong_dirs(env.width, env.height), order).reshape(-1, sh_count(order))
    w = solid_angles(env.width, env.height).per_pixel().reshape(-1)
    gram = basis.T @ (basis * w[:, None])
    rhs = basis.T @ (env.data.reshape(-1, 3) * w[:, None])
    return np.linalg.solve(gram, rhs)


def sh_render(coeffs: np.ndarray, width: int, height: int) -> LatLongMap:
    """Evaluate a truncated SH series on a lat-long grid; negative lobes clamp to 0."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    order = int(round(math.sqrt(coeffs.shape[0]))) - 1
    if sh_count(order) != coeffs.shape[0]:
        raise ContractViolation(f"{coeffs.shape[0]} is not a square number of SH coefficients")
    _check_order(order)
    basis = sh_basis(latlong_dirs(width, height), order)
    return LatLongMap(np.maximum(basis @ coeffs, 0.0))


def evaluate(est: LatLongMap, gt: LatLongMap, probes: Optional[ProbeSet] = None,
             sh_orders: Sequence[int] = (3, 5), huber_delta: float = 1.0) -> Dict[str, object]:
    """
    Every metric for one estimate, as an ordered record.

    SH baselines fit the ground truth at each order and score the fit the
    same way as the estimate.
    """
    check_same_resolution("eval", est, gt)
    probes = probes or default_probe_set()
    record: Dict[str, object] = {
        "light_rmse": light_rmse(est, gt),
        "light_rmse_weighted": light_rmse(est, gt, weighted=True),
        "render_rmse": render_rmse(est, gt, probes),
        "huber": huber(est, gt, huber_delta),
        "huber_delta": huber_delta,
    }
    for order in sh_orders:
        baseline = sh_render(sh_fit(gt, order), gt.width, gt.height)
        record[f"sh{order}_light_rmse"] = light_rmse(baseline, gt)
        record[f"sh{order}_render_rmse"] = render_rmse(baseline, gt, probes)
    record["space"] = "linear"
    logger.info(f"Evaluation: light_rmse={record['light_rmse']:.5f} render_rmse={record['render_rmse']:.5f}")
    return record
