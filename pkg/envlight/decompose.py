"""
Reflectance decomposition: albedo, diffuse shading and specular shading of one frame.

``decompose_gt`` repackages the factors of a synthetic render.
``decompose_dichromatic`` separates white specular highlights from colored
diffuse reflection using per-cluster chromaticity, the classical
specular-free-image approach.
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ContractViolation, ResolutionMismatch
from .geometry import NormalMap

logger = logging.getLogger(__name__)

MIN_ALBEDO = 0.02
CHROMA_LEVELS = 16
GRAY_THRESHOLD = 1e-3


@dataclass(frozen=True)
class Decomposition:
    albedo: np.ndarray
    diffuse_shading: np.ndarray
    specular_shading: np.ndarray
    normals: NormalMap
    mask: np.ndarray
    residual: float = 0.0

    def reconstruct(self) -> np.ndarray:
        return self.albedo * self.diffuse_shading + self.specular_shading


def decompose_gt(render) -> Decomposition:
    """Ground-truth factors of a forward render (``forward.RenderResult``)."""
    return Decomposition(
        albedo=render.albedo,
        diffuse_shading=render.diffuse,
        specular_shading=render.specular,
        normals=render.normals,
        mask=render.mask,
        residual=0.0,
    )


def decompose_passthrough(rgb: np.ndarray, normals: NormalMap, mask: Optional[np.ndarray] = None) -> Decomposition:
    """Treat the whole image as diffuse shading with white albedo."""
    rgb = np.asarray(rgb, dtype=np.float64)
    mask = normals.valid if mask is None else mask
    rgb = np.where(mask[..., None], np.maximum(rgb, 0.0), 0.0)
    return Decomposition(np.where(mask[..., None], 1.0, 0.0), rgb, np.zeros_like(rgb), normals, mask)


def _cluster_keys(diffuse_chroma: np.ndarray, gray: np.ndarray) -> np.ndarray:
    levels = np.clip(np.floor(diffuse_chroma[:, :2] * CHROMA_LEVELS), 0, CHROMA_LEVELS - 1).astype(np.int64)
    keys = levels[:, 0] * CHROMA_LEVELS + levels[:, 1]
    return np.where(gray, -1, keys)


def decompose_dichromatic(rgb: np.ndarray, normals: NormalMap, mask: Optional[np.ndarray] = None) -> Decomposition:
    """
    Separate white specular highlights from diffuse reflection.

    Pixels are clustered by the chromaticity of their specular-free image
    ``rgb - min(rgb)``, which does not depend on the (white) specular term.
    Within a cluster the median min-channel chromaticity ``c`` of the body
    color gives the specular amount ``s = (min - c*sum) / (1 - 3c)``.
    Albedo is the cluster's median diffuse chromaticity scaled so its
    brightest channel is 1; the absolute albedo scale is not observable.

    Args:
        rgb: linear HDR image (height, width, 3)
        normals: camera-space normals; passed through unchanged
        mask: pixels to decompose (defaults to the valid normals)

    Returns:
        Decomposition: with the relative reconstruction residual

    Raises:
        ContractViolation: if the masked image is black.
    """
    rgb = np.maximum(np.asarray(rgb, dtype=np.float64), 0.0)
    if rgb.shape[:2] != normals.valid.shape:
        raise ResolutionMismatch("rgb vs normals", rgb.shape[:2], normals.valid.shape)
    mask = normals.valid if mask is None else np.asarray(mask, dtype=bool)
    total = rgb.sum(axis=-1)
    mask = mask & (total > 0)
    if not np.any(mask):
        raise ContractViolation("image is black: no chromaticity evidence to decompose")

    pixels = rgb[mask]
    sums = pixels.sum(axis=1)
    low = pixels.min(axis=1)
    free = pixels - low[:, None]
    free_sum = free.sum(axis=1)
    gray = free_sum <= GRAY_THRESHOLD * sums
    chroma = free / np.maximum(free_sum, 1e-300)[:, None]
    keys = _cluster_keys(chroma, gray)

    specular = np.zeros(pixels.shape[0])
    albedo = np.ones_like(pixels)
    for key in np.unique(keys):
        members = keys == key
        if key < 0:
            continue
        c_min = float(np.median(low[members] / sums[members]))
        denom = 1.0 - 3.0 * c_min
        if denom <= 1e-6:
            continue
        s = (low[members] - c_min * sums[members]) / denom
        specular[members] = np.clip(s, 0.0, low[members])
        body = pixels[members] - specular[members, None]
        body_chroma = np.median(body / np.maximum(body.sum(axis=1), 1e-300)[:, None], axis=0)
        albedo[members] = body_chroma / max(body_chroma.max(), 1e-12)
    logger.debug(f"Dichromatic decomposition: {np.unique(keys).size} chromaticity clusters")

    diffuse_rgb = pixels - specular[:, None]
    usable = albedo >= MIN_ALBEDO
    shading = np.where(usable, diffuse_rgb / np.where(usable, albedo, 1.0), 0.0)
    pixel_ok = usable.all(axis=1)
    if not np.all(pixel_ok):
        logger.warning(f"Guarded division: {int((~pixel_ok).sum())} pixels with albedo below {MIN_ALBEDO}")

    h, w = mask.shape
    out_albedo = np.zeros((h, w, 3))
    out_shading = np.zeros((h, w, 3))
    out_spec = np.zeros((h, w, 3))
    out_albedo[mask] = albedo
    out_shading[mask] = shading
    out_spec[mask] = specular[:, None]
    out_mask = np.zeros_like(mask)
    out_mask[mask] = pixel_ok

    recon = out_albedo * out_shading + out_spec
    residual = float(np.abs(rgb[mask] - recon[mask]).sum() / max(rgb[mask].sum(), 1e-300))
    logger.info(f"Dichromatic decomposition of {int(mask.sum())} pixels, residual {residual:.4f}")
    return Decomposition(out_albedo, out_shading, out_spec, normals, out_mask, residual)
