"""
File formats: PFM for HDR data, PNG for previews, YAML for scenes, cameras,
configs, stacks and frame manifests, and key=value metric records.

PFM layout: three ASCII header lines (``PF``/``Pf``, ``width height``, scale
whose sign gives the byte order, negative = little-endian) followed by float32
rows stored bottom-to-top.
"""
import logging
import os
import re
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Union

import numpy as np
import yaml
from PIL import Image

from .config import build
from .decompose import Decomposition
from .exceptions import ContractViolation, FormatError, InputFileError, ResolutionMismatch
from .forward import IrradianceStack, RenderResult
from .geometry import Camera, DepthFrame, NormalMap
from .metrics import ProbeSet
from .radiometry import CubeGrid, LatLongMap, cube_dirs
from .scene import SceneDesc

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
HEADER_TOKEN = re.compile(rb"\S+")


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as handle:
            return handle.read()
    except FileNotFoundError:
        raise InputFileError(f"file not found: {path}") from None
    except OSError as exc:
        raise InputFileError(f"cannot read {path}: {exc.strerror}") from None


def _header_tokens(raw: bytes, count: int):
    """First ``count`` whitespace-separated header tokens and the payload offset."""
    tokens = []
    pos = 0
    for match in HEADER_TOKEN.finditer(raw):
        tokens.append((match.group(), match.start()))
        pos = match.end()
        if len(tokens) == count:
            break
    if len(tokens) < count:
        raise FormatError("truncated PFM header", offset=len(raw))
    if pos >= len(raw) or raw[pos:pos + 1] not in (b"\n", b"\r", b" ", b"\t"):
        raise FormatError("PFM header must end with a single whitespace byte", offset=pos)
    return tokens, pos + 1


def read_pfm(path: str) -> np.ndarray:
    """
    Read a PFM file into a top-to-bottom float64 array.

    Returns:
        np.ndarray: (height, width, 3) for ``PF`` or (height, width) for ``Pf``

    Raises:
        InputFileError: if the file cannot be read.
        FormatError: for malformed headers, truncated payloads or non-finite values.
    """
    raw = _read_bytes(path)
    tokens, offset = _header_tokens(raw, 4)
    (magic, magic_at), (w_tok, w_at), (h_tok, h_at), (scale_tok, scale_at) = tokens
    if magic == b"PF":
        channels = 3
    elif magic == b"Pf":
        channels = 1
    else:
        raise FormatError(f"unknown PFM identifier {magic!r}", offset=magic_at)
    try:
        width = int(w_tok)
    except ValueError:
        raise FormatError(f"invalid PFM width {w_tok!r}", offset=w_at) from None
    try:
        height = int(h_tok)
    except ValueError:
        raise FormatError(f"invalid PFM height {h_tok!r}", offset=h_at) from None
    if width <= 0 or height <= 0:
        raise FormatError(f"PFM dimensions must be positive, got {width}x{height}", offset=w_at)
    try:
        scale = float(scale_tok)
    except ValueError:
        raise FormatError(f"invalid PFM scale {scale_tok!r}", offset=scale_at) from None
    if scale == 0 or not np.isfinite(scale):
        raise FormatError("PFM scale must be a nonzero finite number", offset=scale_at)

    expected = width * height * channels * 4
    payload = raw[offset:offset + expected]
    if len(payload) < expected:
        raise FormatError(f"truncated PFM payload: expected {expected} bytes, found {len(payload)}",
                          offset=offset + len(payload))
    dtype = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(payload, dtype=dtype)
    bad = np.flatnonzero(~np.isfinite(data))
    if bad.size:
        raise FormatError("PFM payload contains NaN or infinite values", offset=offset + 4 * int(bad[0]))
    shape = (height, width, channels) if channels == 3 else (height, width)
    return np.flipud(data.reshape(shape)).astype(np.float64)


def write_pfm(path: str, image: np.ndarray):
    """
    Write a (height, width, 3) or (height, width) array as little-endian PFM.

    Raises:
        ContractViolation: if the array has another shape or non-finite values.
    """
    image = np.asarray(image)
    if image.ndim == 3 and image.shape[2] == 3:
        magic = b"PF"
    elif image.ndim == 2:
        magic = b"Pf"
    else:
        raise ContractViolation(f"PFM needs (h, w, 3) or (h, w) data, got {image.shape}")
    if not np.all(np.isfinite(image)):
        raise ContractViolation("refusing to write non-finite values to PFM")
    height, width = image.shape[:2]
    header = magic + b"\n" + f"{width} {height}\n-1.0\n".encode("ascii")
    _ensure_parent(path)
    with open(path, "wb") as handle:
        handle.write(header)
        handle.write(np.ascontiguousarray(np.flipud(image), dtype="<f4").tobytes())
    logger.debug(f"Wrote {width}x{height} PFM to {path}")


def read_hdr(path: str) -> LatLongMap:
    """Read an environment map stored as a 3-channel PFM."""
    data = read_pfm(path)
    if data.ndim != 3:
        raise FormatError(f"{path} is single-channel; an environment map needs RGB")
    try:
        return LatLongMap(data)
    except ContractViolation as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_hdr(path: str, env: Union[LatLongMap, np.ndarray]):
    write_pfm(path, env.data if isinstance(env, LatLongMap) else env)


def write_png(path: str, linear: np.ndarray, gamma: float = 2.2):
    """Gamma-encode linear values clamped to [0, 1] and save 8-bit PNG."""
    linear = np.clip(np.asarray(linear, dtype=np.float64), 0.0, 1.0)
    encoded = np.round(255.0 * linear ** (1.0 / gamma)).astype(np.uint8)
    _ensure_parent(path)
    Image.fromarray(encoded).save(path, format="PNG")


def read_png(path: str, gamma: float = 2.2) -> np.ndarray:
    """Load an 8-bit PNG and return linear values in [0, 1]."""
    if not os.path.exists(path):
        raise InputFileError(f"file not found: {path}")
    try:
        with Image.open(path) as img:
            encoded = np.asarray(img.convert("RGB") if img.mode not in ("L", "RGB") else img)
    except OSError as exc:
        raise FormatError(f"cannot decode PNG {path}: {exc}") from None
    return (encoded.astype(np.float64) / 255.0) ** gamma


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def read_yaml(path: str) -> Dict[str, Any]:
    """
    Load a YAML mapping and check its ``schema_version``.

    Raises:
        InputFileError: if the file cannot be read.
        FormatError: if it is not valid YAML, not a mapping or has an unknown schema version.
    """
    raw = _read_bytes(path)
    try:
        data = yaml.safe_load(raw.decode("utf-8"))
    except (yaml.YAMLError, UnicodeDecodeError) as exc:
        mark = getattr(exc, "problem_mark", None)
        raise FormatError(f"malformed YAML in {path}: {exc}", offset=getattr(mark, "index", None)) from None
    if not isinstance(data, dict):
        raise FormatError(f"{path} must contain a mapping")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise FormatError(f"{path}: unsupported schema_version {version}")
    return data


def write_yaml(path: str, data: Dict[str, Any]):
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(data)
    _ensure_parent(path)
    with open(path, "w", encoding="utf-8") as handle:
        yaml.safe_dump(payload, handle, sort_keys=False)


def save_scene(path: str, scene: SceneDesc):
    write_yaml(path, scene.model_dump(mode="json"))


def load_scene(path: str) -> SceneDesc:
    return build(SceneDesc, read_yaml(path))


def save_camera(path: str, camera: Camera):
    write_yaml(path, {"camera": camera.model_dump(mode="json")})


def load_camera(path: str) -> Camera:
    data = read_yaml(path)
    return build(Camera, data.get("camera", data))


def load_probe_set(path: str) -> ProbeSet:
    """
    Probe objects from a YAML file listing scene files.

    Format: ``scenes: [a.yaml, b.yaml]`` with paths relative to the file;
    each probe is named after its scene file.
    """
    data = read_yaml(path)
    scenes = data.get("scenes")
    if not isinstance(scenes, list) or not scenes:
        raise FormatError(f"{path}: probe file needs a non-empty 'scenes' list")
    root = os.path.dirname(os.path.abspath(path))
    names = [os.path.splitext(os.path.basename(str(s)))[0] for s in scenes]
    return ProbeSet(names, [load_scene(os.path.join(root, str(s))) for s in scenes])


def save_stack(prefix: str, stack: IrradianceStack) -> str:
    """
    Store an irradiance stack as one tiled single-channel PFM plus a YAML manifest.

    Returns:
        str: path of the manifest
    """
    count, res_h, res_w = stack.maps.shape
    per_row = int(np.ceil(np.sqrt(count)))
    rows = int(np.ceil(count / per_row))
    tiles = np.zeros((rows * res_h, per_row * res_w))
    for k in range(count):
        r, c = divmod(k, per_row)
        tiles[r * res_h:(r + 1) * res_h, c * res_w:(c + 1) * res_w] = stack.maps[k]
    image_path = f"{prefix}_irradiance.pfm"
    manifest_path = f"{prefix}_irradiance.yaml"
    write_pfm(image_path, tiles)
    write_yaml(manifest_path, {
        "face_res": stack.dirs.face_res,
        "count": count,
        "resolution": [res_h, res_w],
        "tiles_per_row": per_row,
        "image": os.path.basename(image_path),
    })
    return manifest_path


def load_stack(manifest_path: str) -> IrradianceStack:
    """Inverse of ``save_stack``."""
    data = read_yaml(manifest_path)
    try:
        face_res = int(data["face_res"])
        count = int(data["count"])
        res_h, res_w = (int(v) for v in data["resolution"])
        per_row = int(data["tiles_per_row"])
        image = data["image"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{manifest_path}: incomplete irradiance manifest ({exc})") from None
    tiles = read_pfm(os.path.join(os.path.dirname(os.path.abspath(manifest_path)), image))
    dirs: CubeGrid = cube_dirs(face_res)
    if dirs.count != count:
        raise FormatError(f"{manifest_path}: count {count} does not match face_res {face_res}")
    maps = np.empty((count, res_h, res_w))
    for k in range(count):
        r, c = divmod(k, per_row)
        maps[k] = tiles[r * res_h:(r + 1) * res_h, c * res_w:(c + 1) * res_w]
    return IrradianceStack(dirs, maps)


def render_paths(prefix: str) -> Dict[str, str]:
    """File names ``render`` writes for an output prefix."""
    names = ("rgb", "depth", "albedo", "diffuse", "specular", "normals")
    paths = {name: f"{prefix}_{name}.pfm" for name in names}
    paths["camera"] = f"{prefix}_camera.yaml"
    paths["preview"] = f"{prefix}_rgb.png"
    return paths


def prefix_from_rgb(rgb_path: str) -> str:
    """Output prefix of a ``<prefix>_rgb.pfm`` file written by ``save_render``."""
    suffix = "_rgb.pfm"
    if not rgb_path.endswith(suffix):
        raise ContractViolation(f"{rgb_path} does not follow the <prefix>{suffix} naming of rendered frames")
    return rgb_path[:-len(suffix)]


def save_render(prefix: str, render: RenderResult) -> Dict[str, str]:
    """Write a render's image, depth, camera, ground-truth factors and a PNG preview."""
    paths = render_paths(prefix)
    write_pfm(paths["rgb"], render.rgb)
    write_pfm(paths["depth"], render.frame.depth)
    write_pfm(paths["albedo"], render.albedo)
    write_pfm(paths["diffuse"], render.diffuse)
    write_pfm(paths["specular"], render.specular)
    write_pfm(paths["normals"], render.normals.normals)
    save_camera(paths["camera"], render.camera)
    write_png(paths["preview"], render.rgb)
    logger.info(f"Saved render to {prefix}_*")
    return paths


def load_frame(rgb_path: str, depth_path: str, camera_path: str):
    """
    Load an RGBD frame.

    Returns:
        tuple: ``(rgb, DepthFrame)``

    Raises:
        ResolutionMismatch: if the depth does not match the camera or the rgb.
    """
    rgb = read_pfm(rgb_path)
    if rgb.ndim != 3:
        raise FormatError(f"{rgb_path} is single-channel; expected an RGB image")
    depth = read_pfm(depth_path)
    if depth.ndim != 2:
        raise FormatError(f"{depth_path} must be a single-channel depth map")
    frame = DepthFrame(load_camera(camera_path), depth)
    if rgb.shape[:2] != depth.shape:
        raise ResolutionMismatch("rgb vs depth", rgb.shape[:2], depth.shape)
    return rgb, frame


def load_gt_decomposition(prefix: str) -> Decomposition:
    """Ground-truth factors saved by ``save_render``; object pixels are those with depth."""
    paths = render_paths(prefix)
    depth = read_pfm(paths["depth"])
    mask = depth > 0
    normals = NormalMap(read_pfm(paths["normals"]), mask)
    return Decomposition(
        albedo=read_pfm(paths["albedo"]),
        diffuse_shading=read_pfm(paths["diffuse"]),
        specular_shading=read_pfm(paths["specular"]),
        normals=normals,
        mask=mask,
    )


@dataclass(frozen=True)
class FrameEntry:
    index: int
    rgb: str
    depth: str
    camera: str
    yaw: float = 0.0


def load_manifest(path: str) -> List[FrameEntry]:
    """
    Read a frame-sequence manifest.

    Paths inside the manifest are relative to the manifest's directory.

    Raises:
        FormatError: if the frame list is missing or an entry is incomplete.
    """
    data = read_yaml(path)
    frames = data.get("frames")
    if not isinstance(frames, list) or not frames:
        raise FormatError(f"{path}: manifest needs a non-empty 'frames' list")
    root = os.path.dirname(os.path.abspath(path))
    entries = []
    for position, item in enumerate(frames):
        try:
            entries.append(FrameEntry(
                index=int(item.get("index", position)),
                rgb=os.path.join(root, item["rgb"]),
                depth=os.path.join(root, item["depth"]),
                camera=os.path.join(root, item["camera"]),
                yaw=float(item.get("yaw", 0.0)),
            ))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise FormatError(f"{path}: frame {position} is incomplete ({exc})") from None
    return entries


def save_manifest(path: str, entries: Iterable[FrameEntry]):
    root = os.path.dirname(os.path.abspath(path))
    write_yaml(path, {"frames": [
        {"index": e.index, "rgb": os.path.relpath(e.rgb, root), "depth": os.path.relpath(e.depth, root),
         "camera": os.path.relpath(e.camera, root), "yaw": e.yaw}
        for e in entries
    ]})


def format_value(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6g}"
    return str(value)


def format_record(record: Dict[str, Any]) -> str:
    """One ``key=value`` pair per line, in insertion order."""
    return "\n".join(f"{key}={format_value(value)}" for key, value in record.items())
