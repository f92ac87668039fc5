import logging
import os
import time
import uuid

from celery import shared_task

from .config import RenderConfig, envlight_setting, load_run_config
from .formats import load_frame, load_manifest, write_hdr
from .forward import gen_random_env, render_full
from .models import BenchmarkRecord
from .pipeline import SequenceInput, estimate_frame, estimate_sequence, fit_crop, replicate
from .scene import gen_test_scene, material_preset

logger = logging.getLogger(__name__)

BENCHMARK_RENDER = RenderConfig(light_face_res=8, specular_samples=16, seed=0)


def _task_id(task):
    return (getattr(task, 'request', {}).get('id') or 'manual') if task else 'manual'


@shared_task(bind=True)
def estimate_sequence_task(self=None, manifest_path=None, out_dir='.', alpha=None, config_path=None,
                           replicate_count=None, crop=None):
    """
    Estimate and smooth every frame listed in a manifest.
    Can run as a Celery task or be called directly from a management command.

    Args:
        self: Celery task instance when run by a worker, None when called directly.
        manifest_path: YAML manifest listing rgb, depth, camera and yaw per frame
        out_dir: folder receiving one ``frame_<index>_env.pfm`` per frame
        alpha: smoothing weight, overrides the config
        config_path: optional RunConfig YAML
        replicate_count: feed this many copies of the first frame instead of the sequence
        crop: crop size, overrides the config

    Returns:
        dict: written paths and the raw and smoothed temporal loss traces
    """
    task_id = _task_id(self)
    start_time = time.time()
    logger.info(f"[Task ID: {task_id}] Estimating sequence from {manifest_path}")

    cfg = load_run_config(config_path, alpha=alpha, crop=crop)
    entries = load_manifest(manifest_path)
    if replicate_count:
        entries = entries[:1]
    frames = []
    for entry in entries:
        rgb, frame = load_frame(entry.rgb, entry.depth, entry.camera)
        frames.append(SequenceInput(entry.index, rgb, frame, entry.yaw))
    if replicate_count:
        frames = replicate(frames[0], replicate_count)
        logger.info(f"[Task ID: {task_id}] Replicated frame {frames[0].index} {replicate_count} times")
    if crop is None:
        cfg = cfg.model_copy(update={'crop': fit_crop(cfg.crop, frames[0].frame)})

    result = estimate_sequence(frames, cfg)

    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for estimate in result.smoothed:
        path = os.path.join(out_dir, f"frame_{estimate.index:04d}_env.pfm")
        write_hdr(path, estimate.env)
        paths.append(path)

    elapsed = time.time() - start_time
    logger.info(f"[Task ID: {task_id}] Wrote {len(paths)} environment maps in {elapsed:.1f}s")
    return {
        'paths': paths,
        'raw_trace': result.raw_trace,
        'smoothed_trace': result.smoothed_trace,
    }


@shared_task(bind=True)
def run_benchmark_task(self=None, frames=3, crop=None, config_path=None, budget_ms=None, run_label=None,
                       mode=None):
    """
    Time ``estimate`` end to end on synthetic frames and store one BenchmarkRecord per frame.

    The budget (default ``ENVLIGHT['BENCHMARK_BUDGET_MS']`` per 384x384 frame)
    scales with the pixel count of the crop.

    Returns:
        dict: summary with per-frame milliseconds and the overall pass/fail
    """
    task_id = _task_id(self)
    cfg = load_run_config(config_path, crop=crop, mode=mode)
    budget = BenchmarkRecord.scaled_budget(
        budget_ms if budget_ms is not None else envlight_setting('BENCHMARK_BUDGET_MS', 2000.0), cfg.crop)
    run_label = run_label or uuid.uuid4().hex[:12]
    logger.info(f"[Task ID: {task_id}] Benchmark {run_label}: {frames} frames at {cfg.crop}px, "
                f"budget {budget:.0f} ms per frame")

    timings = []
    for index in range(frames):
        seed = cfg.seed + index
        scene = gen_test_scene('sphere-on-plane', material_preset('amber-glossy-005'), seed, resolution=cfg.crop)
        env = gen_random_env(2, seed=seed, width=cfg.env_width, height=cfg.env_height)
        render = render_full(scene, env, BENCHMARK_RENDER)

        start = time.perf_counter()
        result = estimate_frame(render.rgb, render.frame, cfg)
        frame_ms = 1000.0 * (time.perf_counter() - start)

        record = BenchmarkRecord.record(run_label, index, cfg.crop, cfg.mode, cfg.digest(), frame_ms, budget,
                                        {k: round(v, 3) for k, v in result.timings.items()})
        timings.append(frame_ms)
        if record.status == BenchmarkRecord.STATUS_OVER:
            logger.warning(f"[Task ID: {task_id}] Frame {index}: {frame_ms:.0f} ms exceeds the budget")
        else:
            logger.info(f"[Task ID: {task_id}] Frame {index}: {frame_ms:.0f} ms")

    passed = all(t <= budget for t in timings)
    return {
        'run_label': run_label,
        'resolution': cfg.crop,
        'frames': frames,
        'budget_ms': budget,
        'frame_ms': timings,
        'mean_ms': sum(timings) / len(timings) if timings else 0.0,
        'status': BenchmarkRecord.STATUS_PASS if passed else BenchmarkRecord.STATUS_OVER,
    }
