import math

from envlight.config import envlight_setting
from envlight.formats import write_hdr, write_png
from envlight.forward import ENV_CLASSES, gen_env_preset, gen_random_env
from envlight.management.base import EnvlightCommand
from envlight.radiometry import rotate_env


class Command(EnvlightCommand):
    help = 'Generate a random HDR environment of disk area lights (PFM)'

    def add_arguments(self, parser):
        parser.add_argument('--lights', type=int, default=1, help='Number of area lights')
        parser.add_argument('--preset', choices=ENV_CLASSES, help='Lighting class instead of --lights')
        parser.add_argument('--seed', type=int, default=None, help='Random seed')
        parser.add_argument('--size', type=float, nargs=2, default=[0.005, 0.05], metavar=('MIN', 'MAX'),
                            help='Light solid angle range in steradians')
        parser.add_argument('--intensity', type=float, nargs=2, default=[10.0, 50.0], metavar=('MIN', 'MAX'),
                            help='Peak radiance range')
        parser.add_argument('--ambient', type=float, default=0.05, help='Constant radiance floor')
        parser.add_argument('--full-sphere', action='store_true', help='Allow lights below the horizon')
        parser.add_argument('--yaw', type=float, default=0.0, help='Rotate the result about +Z (degrees)')
        parser.add_argument('--width', type=int, default=envlight_setting('ENV_WIDTH', 256))
        parser.add_argument('--height', type=int, default=envlight_setting('ENV_HEIGHT', 128))
        parser.add_argument('--out', required=True, help='Output PFM')
        parser.add_argument('--preview', help='Optional tone-mapped PNG preview')

    def handle(self, *args, **options):
        seed = options['seed'] if options['seed'] is not None else envlight_setting('SEED', 0)
        if options['preset']:
            env = gen_env_preset(options['preset'], seed, options['width'], options['height'])
        else:
            env = gen_random_env(options['lights'], tuple(options['size']), tuple(options['intensity']), seed,
                                 options['width'], options['height'], options['ambient'],
                                 upper_hemisphere=not options['full_sphere'])
        if options['yaw']:
            env = rotate_env(env, math.radians(options['yaw']))
        write_hdr(options['out'], env)
        if options['preview']:
            write_png(options['preview'], env.data / max(float(env.data.max()), 1e-12))
        self.emit({'env': options['out'], 'width': env.width, 'height': env.height, 'seed': seed,
                   'energy': float(env.energy().sum())})
