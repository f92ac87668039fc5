import logging

from envlight.formats import (load_frame, load_gt_decomposition, prefix_from_rgb, render_paths, write_hdr,
                              write_pfm)
from envlight.management.base import EnvlightCommand
from envlight.pipeline import estimate_frame, fit_crop

logger = logging.getLogger(__name__)


class Command(EnvlightCommand):
    help = 'Estimate the HDR environment map seen by one RGBD frame'

    def add_arguments(self, parser):
        parser.add_argument('--rgb', required=True, help='Linear RGB PFM')
        parser.add_argument('--depth', required=True, help='Single-channel depth PFM (0 = invalid)')
        parser.add_argument('--camera', help='Camera YAML (default: <prefix>_camera.yaml next to the rgb)')
        parser.add_argument('--out-env', required=True, help='Output environment PFM')
        parser.add_argument('--use-gt-decomposition', action='store_true',
                            help='Use the ground-truth factors written by render instead of decomposing')
        parser.add_argument('--save-intermediates', action='store_true',
                            help='Also write the diffuse-only estimate and the specular observations')
        self.add_config_arguments(parser)

    def handle(self, *args, **options):
        camera_path = options['camera'] or render_paths(prefix_from_rgb(options['rgb']))['camera']
        rgb, frame = load_frame(options['rgb'], options['depth'], camera_path)
        cfg = self.run_config(options)
        if options['crop'] is None:
            cfg = cfg.model_copy(update={'crop': fit_crop(cfg.crop, frame)})
        gt = None
        if options['use_gt_decomposition']:
            gt = load_gt_decomposition(prefix_from_rgb(options['rgb']))
            cfg = cfg.model_copy(update={'decomposition': 'gt'})

        result = estimate_frame(rgb, frame, cfg, gt)
        write_hdr(options['out_env'], result.env)

        if options['save_intermediates']:
            stem = options['out_env'][:-4] if options['out_env'].endswith('.pfm') else options['out_env']
            if result.diffuse_env is not None:
                write_hdr(f"{stem}_diffuse.pfm", result.diffuse_env)
            write_pfm(f"{stem}_specular.pfm", result.specular.values)
            write_pfm(f"{stem}_specular_counts.pfm", result.specular.counts.astype(float))
            logger.info(f"Intermediates written next to {options['out_env']}")

        record = {
            'env': options['out_env'],
            'mode': cfg.mode,
            'decomposition': cfg.decomposition,
            'crop': cfg.crop,
            'decomposition_residual': result.decomposition.residual,
            'specular_bins': int(result.specular.mask.sum()),
        }
        if result.solution is not None:
            record['diffuse_residual'] = float(result.solution.residual.mean())
        record['total_ms'] = result.total_ms
        self.emit(record)
