import logging

from envlight.config import envlight_setting
from envlight.formats import save_scene
from envlight.management.base import EnvlightCommand
from envlight.scene import MATERIAL_PRESETS, SCENE_PRESETS, gen_test_scene, material_preset

logger = logging.getLogger(__name__)


class Command(EnvlightCommand):
    help = 'Generate a seeded test scene (objects on a ground plane plus a camera) as YAML'

    def add_arguments(self, parser):
        parser.add_argument('--preset', choices=SCENE_PRESETS, default='sphere-on-plane',
                            help='Scene layout')
        parser.add_argument('--material', choices=sorted(MATERIAL_PRESETS), default='diffuse',
                            help='Material of the objects')
        parser.add_argument('--seed', type=int, default=None, help='Random seed')
        parser.add_argument('--resolution', type=int, default=64, help='Square image size in pixels')
        parser.add_argument('--fov', type=float, default=35.0, help='Field of view in degrees')
        parser.add_argument('--out', required=True, help='Output scene YAML')

    def handle(self, *args, **options):
        seed = options['seed'] if options['seed'] is not None else envlight_setting('SEED', 0)
        scene = gen_test_scene(options['preset'], material_preset(options['material']), seed,
                               options['resolution'], options['fov'])
        save_scene(options['out'], scene)
        logger.info(f"Wrote {options['preset']} scene to {options['out']}")
        self.emit({'scene': options['out'], 'preset': options['preset'], 'seed': seed,
                   'primitives': len(scene.primitives)})
