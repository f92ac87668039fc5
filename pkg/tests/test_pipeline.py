import numpy as np
from django.test import SimpleTestCase

from envlight.config import FusionConfig, RenderConfig, RunConfig
from envlight.decompose import decompose_gt
from envlight.exceptions import ContractViolation, ResolutionMismatch
from envlight.forward import gen_random_env, render_full
from envlight.fuse import splat
from envlight.geometry import DepthFrame
from envlight.pipeline import SequenceInput, center_crop, estimate_frame, estimate_sequence, fit_crop, replicate
from envlight.scene import gen_test_scene, material_preset
from envlight.translate import downsample_shading

SIZE = 24


def small_config(**overrides):
    values = dict(crop=SIZE, cube_face_res=2, irradiance_res=8, env_width=32, env_height=16,
                  render=RenderConfig(light_face_res=4, specular_samples=8, seed=0))
    values.update(overrides)
    return RunConfig(**values)


class CropTests(SimpleTestCase):
    """
    Tests for the central crop
    """

    def setUp(self):
        scene = gen_test_scene('sphere-on-plane', material_preset('diffuse'), 0, resolution=SIZE)
        self.frame = DepthFrame(scene.camera, np.full((SIZE, SIZE), 2.0))
        self.rgb = np.random.default_rng(0).random((SIZE, SIZE, 3))

    def test_full_size_crop_is_a_no_op(self):
        rgb, frame = center_crop(self.rgb, self.frame, SIZE)
        self.assertIs(rgb, self.rgb)
        self.assertIs(frame, self.frame)

    def test_window_and_principal_point(self):
        rgb, frame = center_crop(self.rgb, self.frame, 16)
        self.assertEqual(rgb.shape, (16, 16, 3))
        np.testing.assert_array_equal(rgb, self.rgb[4:20, 4:20])
        self.assertEqual(frame.depth.shape, (16, 16))
        self.assertAlmostEqual(frame.intrinsics.cx, self.frame.intrinsics.cx - 4)
        self.assertEqual(frame.intrinsics.width, 16)

    def test_oversize_crop(self):
        with self.assertRaises(ContractViolation):
            center_crop(self.rgb, self.frame, SIZE + 1)
        self.assertEqual(fit_crop(384, self.frame), SIZE)
        self.assertEqual(fit_crop(8, self.frame), 8)

    def test_rgb_and_depth_must_agree(self):
        with self.assertRaises(ResolutionMismatch):
            center_crop(self.rgb[:-1], self.frame, 8)


class EstimateFrameTests(SimpleTestCase):
    """
    Tests for single-frame estimation over every mode
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cfg = small_config()
        cls.gt = gen_random_env(2, seed=3, width=32, height=16)
        scene = gen_test_scene('sphere-on-plane', material_preset('red-glossy'), 3, resolution=SIZE)
        cls.render = render_full(scene, cls.gt, cls.cfg.render)

    def estimate(self, **overrides):
        return estimate_frame(self.render.rgb, self.render.frame, self.cfg.model_copy(update=overrides))

    def test_full_mode(self):
        result = self.estimate()
        self.assertEqual(result.env.data.shape, (16, 32, 3))
        self.assertTrue(np.all(np.isfinite(result.env.data)))
        self.assertGreaterEqual(result.env.data.min(), 0.0)
        self.assertIsNotNone(result.solution)
        self.assertEqual(list(result.timings), ['geometry', 'decompose', 'diffuse', 'specular', 'fuse'])
        self.assertGreaterEqual(result.total_ms, 0.0)

    def test_specular_evidence_changes_only_its_neighbourhood(self):
        result = self.estimate()
        self.assertTrue(result.specular.mask.any())
        self.assertFalse(np.array_equal(result.env.data, result.diffuse_env.data))
        _, counts = splat(result.specular, self.cfg.fusion.splat_sigma_deg)
        untouched = counts == 0
        self.assertTrue(untouched.any())
        np.testing.assert_array_equal(result.env.data[untouched], result.diffuse_env.data[untouched])

    def test_diffuse_only_has_no_specular_evidence(self):
        result = self.estimate(mode='diffuse-only')
        self.assertFalse(result.specular.mask.any())
        np.testing.assert_array_equal(result.env.data, result.diffuse_env.data)

    def test_specular_only_skips_the_solver(self):
        result = self.estimate(mode='specular-only', fusion=FusionConfig(splat_sigma_deg=0.0))
        self.assertIsNone(result.solution)
        self.assertIsNone(result.diffuse_env)
        self.assertTrue(result.specular.mask.any())
        np.testing.assert_array_equal(result.env.data[~result.specular.mask], 0.0)

    def test_no_decomposition(self):
        result = self.estimate(mode='no-decomposition')
        self.assertEqual(result.env.data.shape, (16, 32, 3))
        np.testing.assert_array_equal(result.decomposition.specular_shading, 0.0)

    def test_ground_truth_factors(self):
        gt = decompose_gt(self.render)
        result = estimate_frame(self.render.rgb, self.render.frame, self.cfg, gt)
        self.assertEqual(result.decomposition.mask.shape, (SIZE, SIZE))
        self.assertTrue(np.all(np.isfinite(result.env.data)))
        usable = result.decomposition.normals.valid & result.decomposition.mask
        shading = np.where(usable[..., None], result.decomposition.diffuse_shading, 0.0)
        target = downsample_shading(shading, self.cfg.irradiance_res).reshape(-1, 3)
        self.assertTrue(np.all(result.solution.residual < np.linalg.norm(target, axis=0)))

    def test_deterministic(self):
        np.testing.assert_array_equal(self.estimate().env.data, self.estimate().env.data)

    def test_empty_frame(self):
        empty = DepthFrame(self.render.frame.camera, np.zeros((SIZE, SIZE)))
        with self.assertRaises(ContractViolation):
            estimate_frame(self.render.rgb, empty, self.cfg)


class EstimateSequenceTests(SimpleTestCase):
    """
    Tests for sequence estimation and replication
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.cfg = small_config(alpha=0.5)
        scene = gen_test_scene('sphere-on-plane', material_preset('diffuse'), 1, resolution=SIZE)
        render = render_full(scene, gen_random_env(1, seed=1, width=32, height=16), cls.cfg.render)
        cls.item = SequenceInput(0, render.rgb, render.frame)

    def test_replicate(self):
        copies = replicate(self.item, 3)
        self.assertEqual([c.index for c in copies], [0, 1, 2])
        self.assertIs(copies[2].frame, self.item.frame)
        with self.assertRaises(ContractViolation):
            replicate(self.item, 0)

    def test_identical_frames_have_zero_loss(self):
        result = estimate_sequence(replicate(self.item, 3), self.cfg)
        self.assertEqual(len(result.raw), 3)
        self.assertEqual(len(result.raw_trace), 2)
        np.testing.assert_allclose(result.raw_trace, 0.0, atol=1e-12)
        np.testing.assert_allclose(result.smoothed_trace, 0.0, atol=1e-12)

    def test_empty_sequence(self):
        with self.assertRaises(ContractViolation):
            estimate_sequence([], self.cfg)


class RunConfigTests(SimpleTestCase):
    """
    Tests for run configuration defaults
    """

    def test_stack_resolution_follows_the_crop_alone(self):
        self.assertNotIn('stack_supersample', RunConfig.model_fields)
        cfg = RunConfig(crop=SIZE, irradiance_res=8, stack_supersample=2)
        self.assertNotIn('stack_supersample', cfg.model_dump())
        self.assertEqual(cfg.digest(), RunConfig(crop=SIZE, irradiance_res=8).digest())

    def test_fusion_defaults(self):
        cfg = FusionConfig()
        self.assertEqual(cfg.count_saturation, 1)
        self.assertEqual(cfg.gain_sigma_deg, 10.0)
        self.assertEqual(cfg.splat_sigma_deg, 2.0)
