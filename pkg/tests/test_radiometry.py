import math

import numpy as np
from django.test import SimpleTestCase

from envlight.exceptions import ContractViolation, ResolutionMismatch
from envlight.radiometry import (LatLongMap, as_direction, check_same_resolution, cube_dirs, cube_solid_angles,
                                 cube_texel_index, cube_to_latlong, dir_to_latlong, dir_to_pixel,
                                 latlong_dirs, latlong_to_cube, latlong_to_dir, rotate_env, sample_latlong,
                                 solid_angles)

from .helpers import random_env


class LatLongMapTests(SimpleTestCase):
    """
    Tests for the lat-long map type and its invariants
    """

    def test_rejects_wrong_aspect(self):
        with self.assertRaises(ContractViolation):
            LatLongMap(np.zeros((16, 16, 3)))

    def test_rejects_negative_and_nan(self):
        data = np.ones((8, 16, 3))
        data[2, 3, 1] = -1.0
        with self.assertRaises(ContractViolation):
            LatLongMap(data)
        data[2, 3, 1] = np.nan
        with self.assertRaises(ContractViolation):
            LatLongMap(data)

    def test_constant_energy_is_four_pi(self):
        env = LatLongMap.constant(2.0, 64, 32)
        np.testing.assert_allclose(env.energy(), 8.0 * math.pi, rtol=1e-9)

    def test_resolution_check_names_both(self):
        with self.assertRaises(ResolutionMismatch) as ctx:
            check_same_resolution("eval", LatLongMap.black(32, 16), LatLongMap.black(64, 32))
        self.assertIn("32x16", str(ctx.exception))
        self.assertIn("64x32", str(ctx.exception))


class DirectionTests(SimpleTestCase):
    """
    Tests for lat-long and direction conversions
    """

    def test_top_row_points_up(self):
        d = latlong_to_dir(0, 0, 256, 128)
        self.assertGreater(d[2], math.cos(math.pi / 128.0))

    def test_quarter_column_points_along_y(self):
        # u + 0.5 = W/4 puts phi at pi/2
        d = latlong_to_dir(63.5, 63.5, 256, 128)
        np.testing.assert_allclose(d, [0.0, 1.0, 0.0], atol=1e-12)

    def test_directions_are_unit(self):
        dirs = latlong_dirs(64, 32)
        np.testing.assert_allclose(np.linalg.norm(dirs, axis=-1), 1.0, atol=1e-12)

    def test_round_trip_pixel_centres(self):
        rng = np.random.default_rng(0)
        u = rng.integers(0, 256, 500)
        v = rng.integers(0, 128, 500)
        uu, vv = dir_to_latlong(latlong_to_dir(u, v, 256, 128), 256, 128)
        np.testing.assert_allclose(np.mod(uu, 256), u, atol=1e-9)
        np.testing.assert_allclose(vv, v, atol=1e-9)

    def test_pixel_lookup_of_centres(self):
        col, row = dir_to_pixel(latlong_to_dir(np.array([5, 200]), np.array([7, 120]), 256, 128), 256, 128)
        np.testing.assert_array_equal(col, [5, 200])
        np.testing.assert_array_equal(row, [7, 120])

    def test_out_of_range_pixel(self):
        with self.assertRaises(ContractViolation):
            latlong_to_dir(256, 0, 256, 128)

    def test_as_direction_rejects_non_unit(self):
        with self.assertRaises(ContractViolation):
            as_direction([1.0, 1.0, 0.0])
        np.testing.assert_array_equal(as_direction([0.0, 0.0, 1.0]), [0.0, 0.0, 1.0])


class SolidAngleTests(SimpleTestCase):
    """
    Tests for the solid-angle quadrature
    """

    def test_latlong_sums_to_four_pi(self):
        for width, height in ((8, 4), (64, 32), (256, 128)):
            self.assertAlmostEqual(solid_angles(width, height).total() / (4 * math.pi), 1.0, delta=1e-3)

    def test_rows_are_exact_band_areas(self):
        table = solid_angles(32, 16)
        theta = math.pi * (np.arange(16) + 0.5) / 16
        half = math.pi / 32
        bands = 2 * math.pi * (np.cos(theta - half) - np.cos(theta + half)) / 32
        np.testing.assert_allclose(table.rows, bands, rtol=1e-12)
        midpoint = (2 * math.pi / 32) * (math.pi / 16) * np.sin(theta)
        np.testing.assert_allclose(table.rows, midpoint * math.sin(half) / half, rtol=1e-12)
        self.assertAlmostEqual(table.total(), 4 * math.pi, places=12)

    def test_midpoint_rule_overshoots_on_small_maps(self):
        theta = math.pi * (np.arange(16) + 0.5) / 16
        midpoint = 32 * ((2 * math.pi / 32) * (math.pi / 16) * np.sin(theta)).sum()
        self.assertGreater(midpoint / (4 * math.pi) - 1.0, 1e-3)
        self.assertLess(abs(solid_angles(32, 16).total() / (4 * math.pi) - 1.0), 1e-3)

    def test_pole_rows_are_smallest(self):
        rows = solid_angles(256, 128).rows
        self.assertIn(int(np.argmin(rows)), (0, 127))
        self.assertAlmostEqual(rows[0], rows[-1], places=15)
        self.assertTrue(np.all(rows[1:-1] > rows[0]))

    def test_cube_sums_to_four_pi(self):
        for face_res in (1, 4, 8, 16):
            self.assertAlmostEqual(cube_solid_angles(face_res).sum(), 4 * math.pi, places=9)


class CubeGridTests(SimpleTestCase):
    """
    Tests for cube-grid directions and resampling
    """

    def test_default_grid(self):
        grid = cube_dirs()
        self.assertEqual(grid.count, 384)
        np.testing.assert_allclose(np.linalg.norm(grid.dirs, axis=1), 1.0, atol=1e-12)
        rounded = {tuple(np.round(d, 9)) for d in grid.dirs}
        self.assertEqual(len(rounded), 384)

    def test_texel_index_of_centres(self):
        grid = cube_dirs(8)
        np.testing.assert_array_equal(cube_texel_index(grid.dirs, 8), np.arange(384))

    def test_constant_survives_both_directions(self):
        env = LatLongMap.constant(3.0, 64, 32)
        grid = latlong_to_cube(env, 8)
        np.testing.assert_allclose(grid.values, 3.0, atol=1e-9)
        np.testing.assert_allclose(cube_to_latlong(grid, 64, 32).data, 3.0, atol=1e-9)

    def test_energy_is_roughly_conserved(self):
        rng = np.random.default_rng(3)
        env = random_env(rng, 128, 64)
        grid = latlong_to_cube(env, 8)
        cube_energy = (grid.values * grid.solid_angles[:, None]).sum(axis=0)
        np.testing.assert_allclose(cube_energy, env.energy(), rtol=2e-2)

    def test_values_shape_is_checked(self):
        with self.assertRaises(ContractViolation):
            cube_dirs(2).with_values(np.ones((5, 3)))

    def test_resample_without_values(self):
        with self.assertRaises(ContractViolation):
            cube_to_latlong(cube_dirs(2), 16, 8)


class RotationTests(SimpleTestCase):
    """
    Tests for yaw rotation and lookups
    """

    def test_whole_bin_rotation_is_a_roll(self):
        rng = np.random.default_rng(1)
        env = random_env(rng, 32, 16)
        rotated = rotate_env(env, 2 * math.pi * 3 / 32)
        np.testing.assert_array_equal(rotated.data, np.roll(env.data, 3, axis=1))

    def test_rotation_moves_features_toward_positive_azimuth(self):
        data = np.zeros((16, 32, 3))
        data[8, 4] = 1.0
        rotated = rotate_env(LatLongMap(data), 2 * math.pi * 5 / 32)
        self.assertEqual(rotated.data[8, 9, 0], 1.0)

    def test_rotation_preserves_energy(self):
        rng = np.random.default_rng(2)
        env = random_env(rng, 32, 16)
        np.testing.assert_allclose(rotate_env(env, 0.37).energy(), env.energy(), rtol=1e-12)

    def test_full_turn_is_identity(self):
        rng = np.random.default_rng(4)
        env = random_env(rng, 32, 16)
        np.testing.assert_allclose(rotate_env(env, 2 * math.pi).data, env.data)

    def test_sample_at_centres_is_exact(self):
        rng = np.random.default_rng(5)
        env = random_env(rng, 32, 16)
        dirs = latlong_dirs(32, 16)
        np.testing.assert_allclose(sample_latlong(env, dirs), env.data, atol=1e-9)
        np.testing.assert_allclose(sample_latlong(env, dirs, bilinear=False), env.data)
