"""
Spatial to angular translation.

Diffuse shading is a light-weighted sum of irradiance maps, so the light on
the cube grid follows from a regularized non-negative least-squares fit.
Specular shading is scattered into lat-long bins along each pixel's mirror
direction.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .config import DiffuseSolveConfig
from .decompose import Decomposition
from .exceptions import DegenerateSystemError, ResolutionMismatch
from .forward import IrradianceStack
from .geometry import Camera, DepthFrame, area_downsample, mirror_direction
from .radiometry import DEFAULT_ENV_HEIGHT, DEFAULT_ENV_WIDTH, CubeGrid, dir_to_pixel, normalize

logger = logging.getLogger(__name__)

BACK_FACING_COS = 1e-4
POWER_ITERATIONS = 100


@dataclass(frozen=True)
class NNLSResult:
    x: np.ndarray
    objective: float
    iterations: int
    converged: bool
    trace: List[float] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class DiffuseSolution:
    """Per-channel light intensities on the cube grid plus solver diagnostics."""
    grid: CubeGrid
    residual: np.ndarray
    traces: List[List[float]] = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class SparseAngularMap:
    """Averaged specular observations per lat-long bin; ``counts == 0`` marks invalid bins."""
    values: np.ndarray
    counts: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        return self.counts > 0

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @classmethod
    def empty(cls, width: int = DEFAULT_ENV_WIDTH, height: int = DEFAULT_ENV_HEIGHT) -> "SparseAngularMap":
        return cls(np.zeros((height, width, 3)), np.zeros((height, width), dtype=np.int64))


def _spectral_norm(gram: np.ndarray) -> float:
    """Largest eigenvalue of a PSD matrix by power iteration from the all-ones vector."""
    v = np.ones(gram.shape[0]) / np.sqrt(gram.shape[0])
    value = 0.0
    for _ in range(POWER_ITERATIONS):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        value = norm
        v = w / norm
    # power iteration approaches from below
    return float(value) * 1.01


def _objective(gram, rhs, bb, lam, x) -> float:
    return float(x @ gram @ x - 2.0 * rhs @ x + bb + lam * x @ x)


def solve_nnls(A: np.ndarray, b: np.ndarray, cfg: Optional[DiffuseSolveConfig] = None) -> NNLSResult:
    """
    Minimize ``||A x - b||^2 + lambda ||x||^2`` subject to ``x >= 0``.

    Monotone FISTA on the Gram system with step ``1/L``, ``L`` estimated by
    power iteration; stops when the gradient mapping falls below
    ``tol * ||A^T b||`` or after ``max_iter`` iterations. With ``polish`` the
    iterate's support is re-solved exactly and kept when it lowers the
    objective. The objective trace never increases.

    Args:
        A: system matrix (rows, unknowns)
        b: right-hand side (rows,)
        cfg: solver settings

    Returns:
        NNLSResult: solution, final objective and the per-iteration trace
    """
    cfg = cfg or DiffuseSolveConfig()
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    lam = float(cfg.lambda_)
    gram = A.T @ A
    rhs = A.T @ b
    bb = float(b @ b)
    n = gram.shape[0]
    lipschitz = 2.0 * (_spectral_norm(gram) + lam)
    if lipschitz == 0:
        raise DegenerateSystemError("system matrix and regularization are both zero")
    step = 1.0 / lipschitz
    project = (lambda v: np.maximum(v, 0.0)) if cfg.nonneg else (lambda v: v)
    scale = max(2.0 * np.linalg.norm(rhs), 1e-300)

    x = np.zeros(n)
    fx = _objective(gram, rhs, bb, lam, x)
    y = x.copy()
    t = 1.0
    trace = [fx]
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        grad = 2.0 * (gram @ y - rhs + lam * y)
        z = project(y - step * grad)
        gap = lipschitz * np.linalg.norm(y - z)
        fz = _objective(gram, rhs, bb, lam, z)
        x_prev = x
        if fz <= fx:
            x, fx = z, fz
        trace.append(fx)
        if gap <= cfg.tol * scale:
            converged = True
            break
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
    if not converged:
        logger.debug(f"NNLS stopped at the iteration cap ({cfg.max_iter})")

    if cfg.polish:
        x, fx = _polish(gram, rhs, bb, lam, x, fx, cfg.nonneg)
        trace.append(fx)
    return NNLSResult(x, fx, iterations, converged, trace)


def _polish(gram, rhs, bb, lam, x, fx, nonneg, rounds: int = 5):
    """Re-solve the normal equations on the active support; keep improvements only."""
    top = x.max() if x.size else 0.0
    support = x > 1e-8 * top if top > 0 else np.zeros(x.size, dtype=bool)
    if not nonneg:
        support = np.ones(x.size, dtype=bool)
    for _ in range(rounds):
        if not np.any(support):
            break
        idx = np.flatnonzero(support)
        system = gram[np.ix_(idx, idx)] + lam * np.eye(idx.size)
        sub, *_ = np.linalg.lstsq(system, rhs[idx], rcond=None)
        if nonneg:
            # round-off zeros on the support are clamped, real negatives end the polish
            if np.any(sub < -1e-9 * max(float(np.abs(sub).max()), 1e-300)):
                break
            sub = np.maximum(sub, 0.0)
        candidate = np.zeros_like(x)
        candidate[idx] = sub
        f_candidate = _objective(gram, rhs, bb, lam, candidate)
        if f_candidate > fx:
            break
        x, fx = candidate, f_candidate
        grad = 2.0 * (gram @ x - rhs + lam * x)
        grow = (~support) & (grad < -1e-12 * max(1.0, np.abs(rhs).max()))
        if not np.any(grow):
            break
        support = support | grow
    return x, fx


def downsample_shading(shading: np.ndarray, resolution: int) -> np.ndarray:
    """
    Bring a full-resolution shading image to the irradiance-stack grid.

    Same area operator as ``forward.render_irradiance_stack``, so a shading
    image synthesized from full-resolution maps downsamples to exactly the
    light-weighted sum of the stack.
    """
    return area_downsample(shading, resolution)


def solve_diffuse(shading: np.ndarray, stack: IrradianceStack,
                  cfg: Optional[DiffuseSolveConfig] = None) -> DiffuseSolution:
    """
    Recover per-channel cube-grid light from diffuse shading.

    ``lambda`` is relative to unit-normalized columns: it is multiplied by
    the mean squared norm of the nonzero columns of A.

    Args:
        shading: RGB diffuse shading at the stack resolution
        stack: irradiance basis
        cfg: solver settings

    Returns:
        DiffuseSolution: cube grid with values and the per-channel residual ``||A L - s||``

    Raises:
        ResolutionMismatch: if the shading is not at the stack resolution.
        DegenerateSystemError: if every irradiance map is zero.
    """
    cfg = cfg or DiffuseSolveConfig()
    shading = np.asarray(shading, dtype=np.float64)
    if shading.ndim == 2:
        shading = shading[..., None]
    if shading.shape[:2] != stack.resolution:
        raise ResolutionMismatch("shading vs irradiance stack", shading.shape[:2], stack.resolution)
    A = stack.design_matrix()
    col_norms = np.einsum("pk,pk->k", A, A)
    if not np.any(col_norms > 0):
        raise DegenerateSystemError("irradiance stack is all zero: no direction lights any pixel")
    scaled = cfg.model_copy(update={"lambda_": cfg.lambda_ * float(col_norms[col_norms > 0].mean())})

    values = np.zeros((stack.dirs.count, shading.shape[2]))
    residual = np.zeros(shading.shape[2])
    traces = []
    for channel in range(shading.shape[2]):
        b = shading[..., channel].reshape(-1)
        result = solve_nnls(A, b, scaled)
        values[:, channel] = result.x
        residual[channel] = float(np.linalg.norm(A @ result.x - b))
        traces.append(result.trace)
        logger.debug(f"Channel {channel}: {result.iterations} iterations, residual {residual[channel]:.3e}")
    if values.shape[1] == 1:
        values = np.repeat(values, 3, axis=1)
        residual = np.repeat(residual, 3)
    logger.info(f"Diffuse solve: {stack.dirs.count} directions, residual {residual.round(6).tolist()}")
    return DiffuseSolution(stack.dirs.with_values(values), residual, traces)


def project_specular(decomp: Decomposition, frame: DepthFrame, camera: Optional[Camera] = None,
                     out_w: int = DEFAULT_ENV_WIDTH, out_h: int = DEFAULT_ENV_HEIGHT) -> SparseAngularMap:
    """
    Scatter specular shading into lat-long bins along mirror directions.

    Pixels are visited in row-major order; each bin stores the mean of its
    contributions. Pixels seen at grazing angles (n.v <= 1e-4) are skipped.
    """
    camera = camera or frame.camera
    spec = np.asarray(decomp.specular_shading, dtype=np.float64)
    if spec.shape[:2] != frame.depth.shape:
        raise ResolutionMismatch("specular shading vs depth", spec.shape[:2], frame.depth.shape)
    use = decomp.mask & decomp.normals.valid & frame.valid & (spec.sum(axis=-1) > 0)
    if not np.any(use):
        return SparseAngularMap.empty(out_w, out_h)
    points = frame.points()[use]
    normals = decomp.normals.normals[use]
    views = normalize(-points)
    cos = np.einsum("nk,nk->n", normals, views)
    facing = cos > BACK_FACING_COS
    if not np.all(facing):
        logger.warning(f"Skipped {int((~facing).sum())} back-facing specular pixels")
    mirror_world = normalize(camera.to_world(mirror_direction(normals[facing], views[facing])))
    col, row = dir_to_pixel(mirror_world, out_w, out_h)
    flat = row * out_w + col
    sums = np.zeros((out_h * out_w, 3))
    np.add.at(sums, flat, spec[use][facing])
    counts = np.bincount(flat, minlength=out_h * out_w)
    values = np.where(counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], 0.0)
    logger.info(f"Specular projection: {int(facing.sum())} pixels into {int((counts > 0).sum())} bins")
    return SparseAngularMap(values.reshape(out_h, out_w, 3), counts.reshape(out_h, out_w))

