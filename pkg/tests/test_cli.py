import io
import os
import re

from django.test import SimpleTestCase

from envlight.cli import cli
from envlight.formats import read_hdr, write_yaml

from .helpers import TempDirMixin

SMALL_CONFIG = {'cube_face_res': 2, 'irradiance_res': 8, 'env_width': 32, 'env_height': 16}


class CommandLineTests(TempDirMixin, SimpleTestCase):
    """
    Tests for the hyphenated command-line surface and its exit codes
    """

    def run_cli(self, *argv):
        out, err = io.StringIO(), io.StringIO()
        code = cli(list(argv), stdout=out, stderr=err)
        return code, out.getvalue(), err.getvalue()

    def gen_env(self, name, *extra):
        return self.run_cli('gen-env', '--lights', '2', '--seed', '4', '--width', '32', '--height', '16',
                            '--out', self.path(name), *extra)

    def test_no_arguments_prints_usage(self):
        code, _, err = self.run_cli()
        self.assertEqual(code, 2)
        self.assertIn('usage: envlight', err)

    def test_unknown_command(self):
        code, _, err = self.run_cli('relight')
        self.assertEqual(code, 2)
        self.assertIn('error=usage exit=2', err)

    def test_bad_option(self):
        code, _, _ = self.run_cli('gen-env', '--lights', 'many', '--out', self.path('x.pfm'))
        self.assertEqual(code, 2)

    def test_gen_env_is_deterministic(self):
        code, out, _ = self.gen_env('a.pfm')
        self.assertEqual(code, 0)
        self.assertIn('width=32', out)
        self.assertIn('seed=4', out)
        self.gen_env('b.pfm')
        with open(self.path('a.pfm'), 'rb') as a, open(self.path('b.pfm'), 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_eval_identical_maps(self):
        self.gen_env('gt.pfm')
        code, out, _ = self.run_cli('eval', '--est', self.path('gt.pfm'), '--gt', self.path('gt.pfm'),
                                    '--probe-resolution', '8', '--sh-orders', '2')
        self.assertEqual(code, 0)
        self.assertIn('light_rmse=0', out)
        self.assertIn('space=linear', out)

    def test_eval_with_shiny_spheres(self):
        self.gen_env('gt.pfm')
        self.run_cli('gen-env', '--lights', '2', '--seed', '5', '--width', '32', '--height', '16',
                     '--out', self.path('est.pfm'))
        scores = []
        for extra in ((), ('--specular-probes',)):
            code, out, _ = self.run_cli('eval', '--est', self.path('est.pfm'), '--gt', self.path('gt.pfm'),
                                        '--probe-resolution', '8', '--sh-orders', '2', *extra)
            self.assertEqual(code, 0)
            scores.append(float(re.search(r'\brender_rmse=(\S+)', out).group(1)))
        self.assertNotEqual(scores[0], scores[1])

    def test_eval_resolution_mismatch(self):
        self.gen_env('small.pfm')
        self.run_cli('gen-env', '--seed', '4', '--width', '64', '--height', '32', '--out', self.path('big.pfm'))
        code, _, err = self.run_cli('eval', '--est', self.path('big.pfm'), '--gt', self.path('small.pfm'),
                                    '--probe-resolution', '8')
        self.assertEqual(code, 6)
        self.assertIn('error=resolution_mismatch exit=6', err)

    def test_missing_input(self):
        code, _, err = self.run_cli('eval', '--est', self.path('none.pfm'), '--gt', self.path('none.pfm'))
        self.assertEqual(code, 4)
        self.assertIn('error=input_file exit=4', err)

    def test_malformed_input(self):
        with open(self.path('bad.pfm'), 'wb') as handle:
            handle.write(b'P6\n1 1\n255\n\x00\x00\x00')
        code, _, err = self.run_cli('eval', '--est', self.path('bad.pfm'), '--gt', self.path('bad.pfm'))
        self.assertEqual(code, 5)
        self.assertIn('error=format exit=5', err)

    def test_render_then_estimate(self):
        self.gen_env('env.pfm')
        self.assertEqual(self.run_cli('gen-scene', '--preset', 'sphere-on-plane', '--material', 'diffuse',
                                      '--resolution', '16', '--out', self.path('scene.yaml'))[0], 0)
        prefix = self.path('frame')
        code, out, _ = self.run_cli('render', '--scene', self.path('scene.yaml'), '--env', self.path('env.pfm'),
                                    '--out-prefix', prefix, '--light-face-res', '4', '--samples', '4',
                                    '--no-stack')
        self.assertEqual(code, 0)
        self.assertIn(f'camera={prefix}_camera.yaml', out)
        self.assertTrue(os.path.exists(f'{prefix}_albedo.pfm'))

        write_yaml(self.path('run.yaml'), SMALL_CONFIG)
        code, out, _ = self.run_cli('estimate', '--rgb', f'{prefix}_rgb.pfm', '--depth', f'{prefix}_depth.pfm',
                                    '--config', self.path('run.yaml'), '--out-env', self.path('est.pfm'))
        self.assertEqual(code, 0)
        self.assertIn('crop=16', out)
        self.assertEqual(read_hdr(self.path('est.pfm')).shape, (16, 32, 3))

    def test_invalid_config_is_a_contract_violation(self):
        write_yaml(self.path('run.yaml'), {'env_width': 40, 'env_height': 16})
        self.gen_env('env.pfm')
        self.run_cli('gen-scene', '--resolution', '16', '--out', self.path('scene.yaml'))
        code, _, err = self.run_cli('render', '--scene', self.path('scene.yaml'), '--env', self.path('env.pfm'),
                                    '--out-prefix', self.path('f'), '--config', self.path('run.yaml'))
        self.assertEqual(code, 3)
        self.assertIn('error=contract_violation exit=3', err)
