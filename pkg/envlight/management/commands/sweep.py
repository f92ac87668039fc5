from envlight.experiments import SWEEP_KINDS, run_sweep
from envlight.management.base import EnvlightCommand
from envlight.metrics import default_probe_set


class Command(EnvlightCommand):
    help = 'Render, estimate and score a seeded grid varying one factor (light size, count, material, layout, class)'

    def add_arguments(self, parser):
        parser.add_argument('--kind', required=True, choices=SWEEP_KINDS, help='Factor to vary')
        parser.add_argument('--seeds', type=int, default=3, help='Seeds per setting')
        parser.add_argument('--resolution', type=int, default=48, help='Rendered frame size in pixels')
        parser.add_argument('--probe-resolution', type=int, default=48)
        parser.add_argument('--use-gt-decomposition', action='store_true',
                            help='Estimate from ground-truth factors instead of decomposing')
        self.add_config_arguments(parser)

    def handle(self, *args, **options):
        overrides = {'decomposition': 'gt'} if options['use_gt_decomposition'] else {}
        cfg = self.run_config(options, **overrides)
        base_seed = cfg.seed
        records = run_sweep(options['kind'], [base_seed + i for i in range(options['seeds'])],
                            options['resolution'], cfg, default_probe_set(options['probe_resolution']))
        for i, record in enumerate(records):
            if i:
                self.stdout.write('')
            self.emit(record)
