from envlight.config import RenderConfig, load_run_config
from envlight.formats import load_scene, read_hdr, save_render, save_stack
from envlight.forward import render_full, render_irradiance_stack
from envlight.management.base import EnvlightCommand
from envlight.radiometry import cube_dirs


class Command(EnvlightCommand):
    help = 'Render a scene under an environment map; writes rgb, depth, camera, ground-truth factors and the irradiance stack'

    def add_arguments(self, parser):
        parser.add_argument('--scene', required=True, help='Scene YAML')
        parser.add_argument('--env', required=True, help='Environment PFM')
        parser.add_argument('--out-prefix', required=True, help='Prefix of every output file')
        parser.add_argument('--config', help='RunConfig YAML (stack resolution and render quality)')
        parser.add_argument('--light-face-res', type=int, help='Cube face resolution of the diffuse light integral')
        parser.add_argument('--samples', type=int, help='Specular samples per pixel')
        parser.add_argument('--seed', type=int, help='Sampling seed')
        parser.add_argument('--no-stack', action='store_true', help='Skip the irradiance stack')

    def handle(self, *args, **options):
        cfg = load_run_config(options['config'], seed=options['seed'])
        render_cfg = RenderConfig.model_validate({
            **cfg.render.model_dump(),
            **{k: v for k, v in (('light_face_res', options['light_face_res']),
                                 ('specular_samples', options['samples']),
                                 ('seed', options['seed'])) if v is not None},
        })
        scene = load_scene(options['scene'])
        env = read_hdr(options['env'])
        render = render_full(scene, env, render_cfg)
        paths = save_render(options['out_prefix'], render)

        record = {'rgb': paths['rgb'], 'depth': paths['depth'], 'camera': paths['camera'],
                  'object_pixels': int(render.mask.sum())}
        if not options['no_stack']:
            stack = render_irradiance_stack(render.frame, render.normals, cube_dirs(cfg.cube_face_res),
                                            cfg.irradiance_res)
            record['stack'] = save_stack(options['out_prefix'], stack)
        self.emit(record)
