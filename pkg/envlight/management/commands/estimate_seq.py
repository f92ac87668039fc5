import numpy as np

from envlight.management.base import EnvlightCommand
from envlight.tasks import estimate_sequence_task


class Command(EnvlightCommand):
    help = 'Estimate a frame sequence and smooth it over time; prints the temporal loss trace'

    def add_arguments(self, parser):
        parser.add_argument('--frames', required=True, help='Frame manifest YAML')
        parser.add_argument('--alpha', type=float, help='Smoothing weight of the newest frame, in [0, 1]')
        parser.add_argument('--out-dir', default='.', help='Folder for the per-frame environment maps')
        parser.add_argument('--replicate', type=int,
                            help='Use N copies of the first frame (single-image input)')
        parser.add_argument('--config', help='RunConfig YAML file')
        parser.add_argument('--crop', type=int, help='Central crop size in pixels')

    def handle(self, *args, **options):
        # run synchronously, the same function a Celery worker executes
        result = estimate_sequence_task(
            manifest_path=options['frames'],
            out_dir=options['out_dir'],
            alpha=options['alpha'],
            config_path=options['config'],
            replicate_count=options['replicate'],
            crop=options['crop'],
        )
        record = {}
        for i, path in enumerate(result['paths']):
            record[f'frame.{i}'] = path
        for i, (raw, smooth) in enumerate(zip(result['raw_trace'], result['smoothed_trace'])):
            record[f'temporal_loss.{i}'] = smooth
            record[f'raw_temporal_loss.{i}'] = raw
        if result['raw_trace']:
            record['temporal_loss_mean'] = float(np.mean(result['smoothed_trace']))
            record['raw_temporal_loss_mean'] = float(np.mean(result['raw_trace']))
        self.emit(record)
