"""
Angular fusion of the diffuse light estimate with sparse specular observations.
"""
import logging
from typing import Optional, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .config import FusionConfig
from .exceptions import ResolutionMismatch
from .radiometry import LatLongMap
from .translate import SparseAngularMap

logger = logging.getLogger(__name__)

MAX_ROW_SIGMA_FRACTION = 0.25


def _low_pass(image: np.ndarray, mask: np.ndarray, sigma_bins: float) -> np.ndarray:
    """Normalized convolution over the valid bins, evaluated at the valid bins."""
    support = _angular_blur(mask.astype(np.float64), sigma_bins)[mask]
    blurred = _angular_blur(image * mask[..., None], sigma_bins)[mask]
    return blurred / np.maximum(support, 1e-300)[:, None]


def fit_gain(diffuse: np.ndarray, spec: SparseAngularMap, sigma_deg: float = 0.0) -> np.ndarray:
    """
    Per-channel scalar ``alpha`` minimizing ``sum_valid (alpha*spec - diffuse)^2``.

    With ``sigma_deg > 0`` both maps are first low-passed over the valid bins
    at that angular scale, so a sharp specular peak is matched against the
    same energy spread out in the diffuse estimate instead of its smoothed
    value at the peak. Channels without specular energy keep ``alpha = 1``;
    negative fits clamp to 0.
    """
    mask = spec.mask
    if sigma_deg > 0 and np.any(mask):
        sigma_bins = sigma_deg / (180.0 / spec.height)
        s = _low_pass(spec.values, mask, sigma_bins)
        d = _low_pass(np.asarray(diffuse, dtype=np.float64), mask, sigma_bins)
    else:
        s = spec.values[mask]
        d = diffuse[mask]
    num = (s * d).sum(axis=0)
    den = (s * s).sum(axis=0)
    gain = np.where(den > 0, num / np.where(den > 0, den, 1.0), 1.0)
    return np.maximum(gain, 0.0)


def _angular_blur(image: np.ndarray, sigma_bins: float) -> np.ndarray:
    """Approximate angular Gaussian: vertical pass, then per-row wrapped horizontal pass."""
    height = image.shape[0]
    out = gaussian_filter1d(image, sigma_bins, axis=0, mode="nearest")
    theta = np.pi * (np.arange(height) + 0.5) / height
    limit = MAX_ROW_SIGMA_FRACTION * image.shape[1]
    for row in range(height):
        sigma_row = min(sigma_bins / max(np.sin(theta[row]), 1e-6), limit)
        out[row] = gaussian_filter1d(out[row], sigma_row, axis=0, mode="wrap")
    return out


def splat(spec: SparseAngularMap, sigma_deg: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Fill invalid bins from nearby observations.

    Valid bins keep their values and counts. An invalid bin takes the
    Gaussian-weighted mean of the valid bins around it and a fractional
    count equal to the blurred counts; bins with no support stay empty.

    Returns:
        tuple: ``(values, effective_counts)``
    """
    mask = spec.mask
    values = spec.values.copy()
    counts = spec.counts.astype(np.float64)
    if sigma_deg <= 0 or not np.any(mask):
        return values, counts
    sigma_bins = sigma_deg / (180.0 / spec.height)
    weight = _angular_blur(mask.astype(np.float64), sigma_bins)
    numer = _angular_blur(spec.values * mask[..., None], sigma_bins)
    blurred_counts = _angular_blur(counts, sigma_bins)
    holes = (~mask) & (weight > 1e-6)
    values[holes] = numer[holes] / weight[holes, None]
    counts[holes] = blurred_counts[holes]
    logger.debug(f"Splat filled {int(holes.sum())} empty bins")
    return values, counts


def fuse(diffuse_ll: LatLongMap, spec: SparseAngularMap, cfg: Optional[FusionConfig] = None) -> LatLongMap:
    """
    Blend the diffuse estimate with gain-matched, hole-filled specular evidence.

    Per bin ``w = spec_weight_at_full_count * min(count / count_saturation, 1)``
    and ``out = (1 - w) * diffuse + w * alpha * spec``, clamped at 0. Observed
    bins carry their sample count; splat-filled bins carry the blurred count,
    so their trust follows the local density of observations.

    Raises:
        ResolutionMismatch: if the two maps differ in size.
    """
    cfg = cfg or FusionConfig()
    if diffuse_ll.shape != spec.values.shape:
        raise ResolutionMismatch("diffuse map vs specular map", diffuse_ll.shape, spec.values.shape)
    if not np.any(spec.mask):
        logger.info("Fusion: no specular evidence, keeping the diffuse estimate")
        return LatLongMap(diffuse_ll.data.copy())
    gain = fit_gain(diffuse_ll.data, spec, cfg.gain_sigma_deg) if cfg.gain_fit else np.ones(3)
    values, counts = splat(spec, cfg.splat_sigma_deg)
    weight = cfg.spec_weight_at_full_count * np.minimum(counts / cfg.count_saturation, 1.0)
    out = (1.0 - weight[..., None]) * diffuse_ll.data + weight[..., None] * gain * values
    logger.info(f"Fusion: gain {np.round(gain, 4).tolist()}, {int(spec.mask.sum())} specular bins")
    return LatLongMap(np.maximum(out, 0.0))
