from envlight.management.base import EnvlightCommand
from envlight.tasks import run_benchmark_task


class Command(EnvlightCommand):
    help = 'Time estimate end to end on synthetic frames and record the results against the per-frame budget'

    def add_arguments(self, parser):
        parser.add_argument('--frames', type=int, default=3, help='Number of timed frames')
        parser.add_argument('--budget-ms', type=float,
                            help='Budget per 384x384 frame in milliseconds (default from settings)')
        parser.add_argument('--label', help='Run label stored with every record')
        parser.add_argument('--config', help='RunConfig YAML file')
        parser.add_argument('--crop', type=int, help='Frame size in pixels (default: the configured crop)')
        parser.add_argument('--mode', choices=['full', 'diffuse-only', 'specular-only', 'no-decomposition'])

    def handle(self, *args, **options):
        summary = run_benchmark_task(
            frames=options['frames'],
            crop=options['crop'],
            config_path=options['config'],
            budget_ms=options['budget_ms'],
            run_label=options['label'],
            mode=options['mode'],
        )
        record = {k: v for k, v in summary.items() if k != 'frame_ms'}
        for i, ms in enumerate(summary['frame_ms']):
            record[f'frame_ms.{i}'] = ms
        self.emit(record)
        if summary['status'] == 'pass':
            self.stdout.write(self.style.SUCCESS("Benchmark within budget"))
        else:
            self.stdout.write(self.style.WARNING("Benchmark over budget"))
