import os
import struct

import numpy as np
from django.test import SimpleTestCase
from PIL import Image

from envlight.exceptions import ContractViolation, FormatError, InputFileError
from envlight.forward import IrradianceStack
from envlight.formats import (FrameEntry, format_record, load_camera, load_manifest, load_probe_set, load_scene,
                              load_stack, prefix_from_rgb, read_hdr, read_pfm, read_png, read_yaml, save_camera,
                              save_manifest, save_scene, save_stack, write_pfm, write_png, write_yaml)
from envlight.radiometry import cube_dirs
from envlight.scene import gen_test_scene, material_preset

from .helpers import TempDirMixin


class PFMTests(TempDirMixin, SimpleTestCase):
    """
    Tests for reading and writing PFM files
    """

    def test_little_endian_color(self):
        payload = struct.pack('<6f', 1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
        data = read_pfm(self.write_bytes('a.pfm', b'PF\n2 1\n-1.0\n' + payload))
        self.assertEqual(data.shape, (1, 2, 3))
        np.testing.assert_array_equal(data[0, 1], [4.0, 5.0, 6.0])

    def test_big_endian_rows_are_bottom_up(self):
        payload = struct.pack('>2f', 1.0, 2.0)
        data = read_pfm(self.write_bytes('b.pfm', b'Pf\n1 2\n1.0\n' + payload))
        np.testing.assert_array_equal(data, [[2.0], [1.0]])

    def test_nan_reports_its_offset(self):
        payload = struct.pack('<3f', 1.0, 2.0, float('nan'))
        with self.assertRaises(FormatError) as ctx:
            read_pfm(self.write_bytes('c.pfm', b'Pf\n3 1\n-1.0\n' + payload))
        self.assertEqual(ctx.exception.offset, 20)
        self.assertIn('offset 20', str(ctx.exception))

    def test_truncated_payload(self):
        with self.assertRaises(FormatError) as ctx:
            read_pfm(self.write_bytes('d.pfm', b'Pf\n3 1\n-1.0\n' + struct.pack('<f', 1.0)))
        self.assertEqual(ctx.exception.offset, 16)

    def test_unknown_identifier(self):
        with self.assertRaises(FormatError) as ctx:
            read_pfm(self.write_bytes('e.pfm', b'P6\n1 1\n255\n\x00\x00\x00'))
        self.assertEqual(ctx.exception.offset, 0)
        self.assertEqual(ctx.exception.exit_code, 5)

    def test_bad_dimensions(self):
        with self.assertRaises(FormatError):
            read_pfm(self.write_bytes('f.pfm', b'PF\nten 1\n-1.0\n'))

    def test_missing_file(self):
        with self.assertRaises(InputFileError) as ctx:
            read_pfm(self.path('absent.pfm'))
        self.assertEqual(ctx.exception.exit_code, 4)

    def test_written_file_reads_back(self):
        image = np.arange(24, dtype=np.float64).reshape(2, 4, 3) / 8.0
        write_pfm(self.path('g.pfm'), image)
        with open(self.path('g.pfm'), 'rb') as handle:
            self.assertTrue(handle.read().startswith(b'PF\n4 2\n-1.0\n'))
        np.testing.assert_array_equal(read_pfm(self.path('g.pfm')), image)

    def test_refuses_bad_data(self):
        with self.assertRaises(ContractViolation):
            write_pfm(self.path('h.pfm'), np.zeros((2, 2, 4)))
        with self.assertRaises(ContractViolation):
            write_pfm(self.path('h.pfm'), np.full((2, 2), np.inf))

    def test_environment_maps_must_be_valid(self):
        write_pfm(self.path('mono.pfm'), np.ones((4, 8)))
        with self.assertRaises(FormatError):
            read_hdr(self.path('mono.pfm'))
        write_pfm(self.path('neg.pfm'), -np.ones((4, 8, 3)))
        with self.assertRaises(FormatError):
            read_hdr(self.path('neg.pfm'))
        write_pfm(self.path('env.pfm'), np.ones((4, 8, 3)))
        self.assertEqual(read_hdr(self.path('env.pfm')).shape, (4, 8, 3))


class PNGTests(TempDirMixin, SimpleTestCase):
    """
    Tests for gamma-encoded previews
    """

    def test_half_grey_encodes_to_186(self):
        write_png(self.path('grey.png'), np.full((2, 2, 3), 0.5))
        with Image.open(self.path('grey.png')) as img:
            self.assertEqual(img.getpixel((0, 0)), (186, 186, 186))

    def test_values_are_clamped(self):
        write_png(self.path('hot.png'), np.array([[[4.0, -1.0, 1.0]]]))
        np.testing.assert_allclose(read_png(self.path('hot.png'))[0, 0], [1.0, 0.0, 1.0])

    def test_decoding_inverts_the_gamma(self):
        write_png(self.path('grey.png'), np.full((2, 2, 3), 0.5))
        np.testing.assert_allclose(read_png(self.path('grey.png')), 0.5, atol=0.01)


class YAMLTests(TempDirMixin, SimpleTestCase):
    """
    Tests for YAML documents: schema versions, scenes, cameras, manifests and stacks
    """

    def test_schema_version_is_written_and_checked(self):
        write_yaml(self.path('a.yaml'), {'alpha': 0.3})
        self.assertEqual(read_yaml(self.path('a.yaml')), {'schema_version': 1, 'alpha': 0.3})
        with open(self.path('b.yaml'), 'w') as handle:
            handle.write('schema_version: 2\nalpha: 0.3\n')
        with self.assertRaises(FormatError):
            read_yaml(self.path('b.yaml'))

    def test_malformed_and_non_mapping(self):
        with open(self.path('c.yaml'), 'w') as handle:
            handle.write('alpha: [1, 2\n')
        with self.assertRaises(FormatError):
            read_yaml(self.path('c.yaml'))
        with open(self.path('d.yaml'), 'w') as handle:
            handle.write('- 1\n- 2\n')
        with self.assertRaises(FormatError):
            read_yaml(self.path('d.yaml'))

    def test_scene_and_camera_files(self):
        scene = gen_test_scene('cluster', material_preset('glossy-01'), 4, resolution=16)
        save_scene(self.path('scene.yaml'), scene)
        self.assertEqual(load_scene(self.path('scene.yaml')).model_dump(), scene.model_dump())
        save_camera(self.path('camera.yaml'), scene.camera)
        self.assertEqual(load_camera(self.path('camera.yaml')), scene.camera)

    def test_invalid_scene_is_a_contract_violation(self):
        write_yaml(self.path('scene.yaml'), {'primitives': []})
        with self.assertRaises(ContractViolation):
            load_scene(self.path('scene.yaml'))

    def test_manifest_paths_are_relative(self):
        entries = [FrameEntry(i, self.path(f'f{i}_rgb.pfm'), self.path(f'f{i}_depth.pfm'),
                              self.path('camera.yaml'), 0.1 * i) for i in range(3)]
        save_manifest(self.path('frames.yaml'), entries)
        with open(self.path('frames.yaml')) as handle:
            self.assertIn('rgb: f1_rgb.pfm', handle.read())
        self.assertEqual(load_manifest(self.path('frames.yaml')), entries)

    def test_incomplete_manifest(self):
        write_yaml(self.path('frames.yaml'), {'frames': [{'rgb': 'a.pfm', 'camera': 'c.yaml'}]})
        with self.assertRaises(FormatError):
            load_manifest(self.path('frames.yaml'))
        write_yaml(self.path('empty.yaml'), {'frames': []})
        with self.assertRaises(FormatError):
            load_manifest(self.path('empty.yaml'))

    def test_probe_set_file(self):
        scene = gen_test_scene('sphere-on-plane', material_preset('diffuse'), 1, resolution=16)
        save_scene(self.path('ball.yaml'), scene)
        write_yaml(self.path('probes.yaml'), {'scenes': ['ball.yaml']})
        probes = load_probe_set(self.path('probes.yaml'))
        self.assertEqual(probes.names, ['ball'])
        self.assertEqual(probes.scenes[0].model_dump(), scene.model_dump())

    def test_irradiance_stack_files(self):
        dirs = cube_dirs(1)
        maps = np.random.default_rng(0).random((dirs.count, 4, 5)).astype(np.float32).astype(np.float64)
        manifest = save_stack(self.path('scene'), IrradianceStack(dirs, maps))
        self.assertTrue(os.path.exists(self.path('scene_irradiance.pfm')))
        loaded = load_stack(manifest)
        self.assertEqual(loaded.dirs.count, 6)
        np.testing.assert_array_equal(loaded.maps, maps)


class RecordTests(SimpleTestCase):
    """
    Tests for key=value records and frame naming
    """

    def test_record_lines(self):
        text = format_record({'light_rmse': 0.1234567891, 'runs': 3, 'space': 'linear'})
        self.assertEqual(text, 'light_rmse=0.123457\nruns=3\nspace=linear')

    def test_prefix_from_rgb(self):
        self.assertEqual(prefix_from_rgb('out/frame_rgb.pfm'), 'out/frame')
        with self.assertRaises(ContractViolation):
            prefix_from_rgb('out/frame.pfm')
