import numpy as np
from django.test import SimpleTestCase

from envlight.config import RenderConfig, RunConfig
from envlight.exceptions import ContractViolation
from envlight.experiments import SWEEP_KINDS, run_sweep, sweep_cases
from envlight.metrics import default_probe_set


class SweepCaseTests(SimpleTestCase):
    """
    Tests for the sweep grids
    """

    def test_every_setting_runs_with_every_seed(self):
        expected = {'light-size': 4, 'light-count': 4, 'material': 4, 'layout': 3, 'env-class': 4}
        for kind in SWEEP_KINDS:
            cases = sweep_cases(kind, [0, 1])
            self.assertEqual(len(cases), 2 * expected[kind], kind)
            self.assertEqual(len({c.setting for c in cases}), expected[kind], kind)

    def test_environments_are_seeded(self):
        first = sweep_cases('light-count', [5])[2]
        np.testing.assert_array_equal(first.env_fn(5, 32, 16).data, first.env_fn(5, 32, 16).data)

    def test_unknown_kind(self):
        with self.assertRaises(ContractViolation):
            sweep_cases('weather', [0])


class RunSweepTests(SimpleTestCase):
    """
    Tests for aggregating a small sweep
    """

    def test_one_record_per_setting(self):
        cfg = RunConfig(cube_face_res=2, irradiance_res=8, env_width=32, env_height=16,
                        render=RenderConfig(light_face_res=4, specular_samples=8, seed=0))
        records = run_sweep('layout', seeds=[0], resolution=16, cfg=cfg, probes=default_probe_set(16))
        self.assertEqual([r['setting'] for r in records], ['sphere-on-plane', 'box-on-plane', 'cluster'])
        for record in records:
            self.assertEqual(record['runs'], 1)
            self.assertEqual(record['mode'], 'full')
            self.assertEqual(record['render_rmse'], record['render_rmse_max'])
            self.assertTrue(np.isfinite(record['light_rmse']))
