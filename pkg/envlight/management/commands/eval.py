import argparse

from envlight.formats import load_probe_set, read_hdr
from envlight.management.base import EnvlightCommand
from envlight.metrics import default_probe_set, evaluate


def sh_orders(value):
    try:
        return tuple(int(o) for o in value.split(',') if o.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{value}'")


class Command(EnvlightCommand):
    help = 'Compare an estimated environment with the ground truth (light RMSE, probe render RMSE, Huber, SH baselines)'

    def add_arguments(self, parser):
        parser.add_argument('--est', required=True, help='Estimated environment PFM')
        parser.add_argument('--gt', required=True, help='Ground-truth environment PFM')
        parser.add_argument('--probes', help='Probe YAML listing scene files (default: built-in probe set)')
        parser.add_argument('--probe-resolution', type=int, default=48,
                            help='Image size of the built-in probes')
        parser.add_argument('--specular-probes', action='store_true',
                            help='Add the glossy and mirror spheres to the built-in probes')
        parser.add_argument('--sh-orders', type=sh_orders, default=(3, 5), help='Comma-separated SH baseline orders')
        parser.add_argument('--huber-delta', type=float, default=1.0, help='Huber threshold')

    def handle(self, *args, **options):
        est = read_hdr(options['est'])
        gt = read_hdr(options['gt'])
        if options['probes']:
            probes = load_probe_set(options['probes'])
        else:
            probes = default_probe_set(options['probe_resolution'], options['specular_probes'])
        self.emit(evaluate(est, gt, probes, options['sh_orders'], options['huber_delta']))
