"""Shared fixtures for the test modules."""
import os
import tempfile

import numpy as np

from envlight.forward import render_irradiance_stack
from envlight.geometry import Camera, DepthFrame, Intrinsics, normals_from_depth
from envlight.radiometry import LatLongMap, cube_dirs

FULL_ACCEPTANCE = os.environ.get('ENVLIGHT_FULL_ACCEPTANCE') == '1'


def cases(reduced, full):
    """Case count for an acceptance suite."""
    return full if FULL_ACCEPTANCE else reduced


def random_env(rng, width=32, height=16, scale=5.0):
    return LatLongMap(scale * rng.random((height, width, 3)))


def frontal_camera(size, fov=40.0):
    """Camera at the origin looking along +Y (world), image x to +X, image y to -Z."""
    return Camera.look_at([0.0, 0.0, 0.0], [0.0, 1.0, 0.0], Intrinsics.from_fov(size, size, fov))


def sphere_frame(size=64, radius=1.0, distance=4.0, fov=40.0):
    """
    Analytic depth of a sphere centred on the optical axis.

    Returns:
        tuple: (DepthFrame, camera-space unit normals, hit mask)
    """
    camera = Camera(intrinsics=Intrinsics.from_fov(size, size, fov))
    rays = camera.pixel_rays()
    dirs = rays / np.linalg.norm(rays, axis=-1, keepdims=True)
    centre = np.array([0.0, 0.0, distance])
    b = dirs @ centre
    disc = b * b - (centre @ centre - radius * radius)
    hit = disc > 0
    t = np.where(hit, b - np.sqrt(np.maximum(disc, 0.0)), 0.0)
    points = dirs * t[..., None]
    depth = np.where(hit, points[..., 2], 0.0)
    normals = (points - centre) / radius
    return DepthFrame(camera, depth), normals, hit


def plane_frame(size=48, distance=3.0, tilt_deg=30.0, fov=40.0):
    """
    Analytic depth of a plane tilted about the camera x axis.

    Returns:
        tuple: (DepthFrame, camera-space unit normal of the plane)
    """
    camera = Camera(intrinsics=Intrinsics.from_fov(size, size, fov))
    tilt = np.radians(tilt_deg)
    normal = np.array([0.0, -np.sin(tilt), -np.cos(tilt)])
    point = np.array([0.0, 0.0, distance])
    rays = camera.pixel_rays()
    t = (point @ normal) / (rays @ normal)
    depth = t  # rays have z = 1
    return DepthFrame(camera, depth), normal


def flat_stack(face_res=2):
    """Irradiance stack (8x8) of an unoccluded fronto-parallel plane at 2 m."""
    camera = Camera(intrinsics=Intrinsics.from_fov(16, 16, 40.0))
    frame = DepthFrame(camera, np.full((16, 16), 2.0))
    return render_irradiance_stack(frame, normals_from_depth(frame), cube_dirs(face_res), 8)


class TempDirMixin:
    """Per-test temporary folder."""

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()

    def path(self, name):
        return os.path.join(self.tmp, name)

    def write_bytes(self, name, data):
        with open(self.path(name), 'wb') as handle:
            handle.write(data)
        return self.path(name)
