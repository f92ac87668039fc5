"""
Seeded evaluation sweeps: render a scene under a known environment, estimate
the light back and score the estimate, over a grid of one varied factor.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import RunConfig
from .decompose import decompose_gt
from .exceptions import ContractViolation
from .forward import ENV_CLASSES, gen_env_preset, gen_random_env, render_full
from .metrics import ProbeSet, default_probe_set, light_rmse, render_rmse
from .pipeline import estimate_frame
from .radiometry import LatLongMap, rotate_env
from .scene import SCENE_PRESETS, gen_test_scene, material_preset

logger = logging.getLogger(__name__)

SWEEP_KINDS = ("light-size", "light-count", "material", "layout", "env-class")
LIGHT_SIZES = (0.005, 0.02, 0.08, 0.3)
LIGHT_COUNTS = (1, 2, 3, 5)
SWEEP_MATERIALS = ("amber-glossy-005", "amber-glossy-01", "amber-mostly-diffuse", "diffuse")
SWEEP_GLOSSY = "amber-glossy-005"


@dataclass(frozen=True)
class Case:
    """One (scene, environment) pair of a sweep."""
    setting: str
    preset: str
    material: str
    seed: int
    env_fn: Callable[[int, int, int], LatLongMap]


def _random_lights(count: int, size: Optional[float] = None):
    size_range = (size, size) if size is not None else (0.005, 0.05)

    def make(seed, width, height):
        return gen_random_env(count, size_range, seed=seed, width=width, height=height)
    return make


def _preset_env(kind: str):
    def make(seed, width, height):
        return gen_env_preset(kind, seed, width, height)
    return make


def sweep_cases(kind: str, seeds: Sequence[int]) -> List[Case]:
    """
    Cases for one sweep kind; every setting is tried with every seed.

    Raises:
        ContractViolation: for an unknown sweep kind.
    """
    cases = []
    for seed in seeds:
        if kind == "light-size":
            cases += [Case(f"{s:g}", "sphere-on-plane", SWEEP_GLOSSY, seed, _random_lights(1, s))
                      for s in LIGHT_SIZES]
        elif kind == "light-count":
            cases += [Case(str(n), "sphere-on-plane", SWEEP_GLOSSY, seed, _random_lights(n))
                      for n in LIGHT_COUNTS]
        elif kind == "material":
            cases += [Case(m, "sphere-on-plane", m, seed, _random_lights(1)) for m in SWEEP_MATERIALS]
        elif kind == "layout":
            cases += [Case(p, p, SWEEP_GLOSSY, seed, _random_lights(2)) for p in SCENE_PRESETS]
        elif kind == "env-class":
            cases += [Case(c, "sphere-on-plane", SWEEP_GLOSSY, seed, _preset_env(c)) for c in ENV_CLASSES]
        else:
            raise ContractViolation(f"unknown sweep kind '{kind}' (choose from {', '.join(SWEEP_KINDS)})")
    return cases


def run_case(case: Case, cfg: RunConfig, resolution: int, probes: ProbeSet) -> Dict[str, float]:
    """Render, estimate and score one case; the environment gets a seeded random yaw."""
    rng = np.random.default_rng(case.seed)
    yaw = float(rng.uniform(0.0, 2.0 * math.pi))
    gt = rotate_env(case.env_fn(case.seed, cfg.env_width, cfg.env_height), yaw)
    scene = gen_test_scene(case.preset, material_preset(case.material), case.seed, resolution)
    render = render_full(scene, gt, cfg.render)
    gt_decomp = decompose_gt(render) if cfg.decomposition == "gt" else None
    run_cfg = cfg.model_copy(update={"crop": min(cfg.crop, resolution)})
    result = estimate_frame(render.rgb, render.frame, run_cfg, gt_decomp)
    return {
        "light_rmse": light_rmse(result.env, gt),
        "render_rmse": render_rmse(result.env, gt, probes),
    }


def run_sweep(kind: str, seeds: Sequence[int] = (0, 1, 2), resolution: int = 48,
              cfg: Optional[RunConfig] = None, probes: Optional[ProbeSet] = None) -> List[Dict[str, object]]:
    """
    Run a sweep and aggregate scores per setting.

    Returns:
        list: one record per setting with mean and worst render/light RMSE
    """
    cfg = cfg or RunConfig()
    probes = probes or default_probe_set()
    scores: Dict[str, List[Dict[str, float]]] = {}
    for case in sweep_cases(kind, seeds):
        logger.info(f"Sweep {kind}: setting {case.setting}, seed {case.seed}")
        scores.setdefault(case.setting, []).append(run_case(case, cfg, resolution, probes))
    records = []
    for setting, runs in scores.items():
        render_errors = [r["render_rmse"] for r in runs]
        light_errors = [r["light_rmse"] for r in runs]
        records.append({
            "kind": kind,
            "setting": setting,
            "mode": cfg.mode,
            "runs": len(runs),
            "render_rmse": float(np.mean(render_errors)),
            "render_rmse_max": float(np.max(render_errors)),
            "light_rmse": float(np.mean(light_errors)),
            "light_rmse_max": float(np.max(light_errors)),
        })
    return records
