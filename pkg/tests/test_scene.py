import numpy as np
from django.test import SimpleTestCase

from envlight.exceptions import ContractViolation
from envlight.geometry import Camera, Intrinsics
from envlight.scene import (SCENE_PRESETS, Box, GroundPlane, Material, SceneDesc, Sphere, gen_test_scene,
                            intersect, material_preset, occluded, surface_attributes)

from .helpers import frontal_camera


class MaterialTests(SimpleTestCase):
    """
    Tests for material validation and presets
    """

    def test_energy_bound(self):
        with self.assertRaises(ValueError):
            Material(rho_d=[0.8, 0.8, 0.8], rho_s=0.5)

    def test_roughness_range(self):
        with self.assertRaises(ValueError):
            Material(sigma=0.0)

    def test_scalar_albedo_broadcasts(self):
        self.assertEqual(Material(rho_d=0.3).rho_d, [0.3, 0.3, 0.3])

    def test_exponent(self):
        self.assertAlmostEqual(Material(sigma=0.1).exponent, 198.0)

    def test_unknown_preset(self):
        with self.assertRaises(ContractViolation):
            material_preset('velvet')
        self.assertEqual(material_preset('glossy-005').sigma, 0.05)


class RayCastTests(SimpleTestCase):
    """
    Tests for closest-hit and any-hit ray casting
    """

    def setUp(self):
        self.scene = SceneDesc(
            primitives=[GroundPlane(), Sphere(center=[0.0, 0.0, 1.0], radius=0.5)],
            camera=frontal_camera(16).model_copy(update={'position': [0.0, -4.0, 1.0]}),
        )

    def test_closest_hit(self):
        t, index = intersect(self.scene, [[0.0, 0.0, 5.0], [2.0, 0.0, 5.0]], [[0.0, 0.0, -1.0]] * 2)
        np.testing.assert_allclose(t, [3.5, 5.0])
        np.testing.assert_array_equal(index, [1, 0])

    def test_miss(self):
        t, index = intersect(self.scene, [[0.0, 0.0, 5.0]], [[0.0, 0.0, 1.0]])
        self.assertTrue(np.isinf(t[0]))
        self.assertEqual(index[0], -1)

    def test_box_hit(self):
        scene = SceneDesc(primitives=[Box(center=[0.0, 3.0, 0.0], size=[1.0, 1.0, 1.0])], camera=frontal_camera(16))
        t, index = intersect(scene, [[0.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
        self.assertAlmostEqual(float(t[0]), 2.5)
        self.assertEqual(index[0], 0)

    def test_any_hit(self):
        blocked = occluded(self.scene, [[0.0, 0.0, 2.0], [0.0, 0.0, 0.01]], [[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]])
        np.testing.assert_array_equal(blocked, [False, True])

    def test_normals_face_the_ray(self):
        normals, albedo, rho_s, sigma = surface_attributes(
            self.scene, np.array([[0.0, 0.0, 1.5]]), np.array([1]), np.array([[0.0, 0.0, -1.0]]))
        np.testing.assert_allclose(normals, [[0.0, 0.0, 1.0]])
        np.testing.assert_allclose(albedo, [[0.8, 0.8, 0.8]])


class SceneDescTests(SimpleTestCase):
    """
    Tests for scene validation and the seeded presets
    """

    def test_camera_must_see_something(self):
        camera = Camera.look_at([0.0, 0.0, 1.0], [0.1, 0.0, 10.0], Intrinsics.from_fov(16, 16))
        with self.assertRaises(ValueError):
            SceneDesc(primitives=[GroundPlane()], camera=camera)

    def test_presets_are_deterministic(self):
        material = material_preset('glossy-01')
        for preset in SCENE_PRESETS:
            first = gen_test_scene(preset, material, seed=11, resolution=16)
            second = gen_test_scene(preset, material, seed=11, resolution=16)
            self.assertEqual(first.model_dump(), second.model_dump())
            self.assertNotEqual(first.model_dump(), gen_test_scene(preset, material, 12, 16).model_dump())

    def test_cluster_size(self):
        for seed in range(10):
            scene = gen_test_scene('cluster', material_preset('diffuse'), seed, resolution=16)
            self.assertGreaterEqual(len(scene.primitives), 2)
            self.assertLessEqual(len(scene.primitives), 6)
            self.assertEqual(scene.primitives[0].kind, 'plane')

    def test_objects_carry_the_material(self):
        material = material_preset('red-glossy')
        scene = gen_test_scene('sphere-on-plane', material, 0, resolution=16)
        self.assertEqual(scene.primitives[1].material, material)
        self.assertEqual(scene.camera.intrinsics.width, 16)

    def test_unknown_preset(self):
        with self.assertRaises(ContractViolation):
            gen_test_scene('teapot', Material(), 0)
