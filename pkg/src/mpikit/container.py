"""On-disk MPI container and camera-trajectory formats, plus synthetic scenes.

Container layout (all field names frozen; the browser viewer consumes this):

    manifest.json     structured metadata, see REQUIRED_MANIFEST_FIELDS
    color.png         shared RGB color image (8- or 16-bit, lossless)
    alpha_000.png ... one grayscale alpha image per plane, zero-padded index
    background.png    optional last-plane color override
    depth_gt.png      optional 16-bit ground-truth depth (synthetic scenes)

Alphas feed compositing tests, so the codec must be lossless; 16-bit mode
exists because 8-bit alpha quantization bands visibly on near-transparent
planes. Manifest floats are written as shortest round-trip decimals, so
depths reload bit-exactly. Loading is read-only and parallel-safe; saving
assumes a single writer per directory.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from mpikit.core import CameraIntrinsics, CameraPose, MultiplaneImage, place_planes_disparity
from mpikit.genstack import depth_to_alpha

FORMAT_NAME = "mpi-container"
FORMAT_VERSION = 1
TRAJECTORY_FORMAT = "camera-trajectory"

REQUIRED_MANIFEST_FIELDS = (
    "format",
    "version",
    "num_planes",
    "resolution",
    "depths",
    "near",
    "far",
    "intrinsics",
    "canonical_pose",
    "bit_depth",
    "color_file",
    "alpha_files",
)

_INTRINSICS_FIELDS = ("fx", "fy", "cx", "cy", "width", "height")


# -- container save/load -------------------------------------------------------


def _write_png(path: Path, values: np.ndarray, bit_depth: int) -> None:
    scale = 255 if bit_depth == 8 else 65535
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    data = np.round(np.clip(values, 0.0, 1.0) * scale).astype(dtype)
    if data.ndim == 3 and data.shape[2] == 3:
        data = data[:, :, ::-1]  # cv2 writes BGR
    if not cv2.imwrite(str(path), data):
        raise OSError(f"failed to write image {path}")


def _read_png(path: Path, bit_depth: int, expect_color: bool) -> np.ndarray:
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ValueError(f"container invalid: unreadable image {path.name}")
    want_dtype = np.uint8 if bit_depth == 8 else np.uint16
    if raw.dtype != want_dtype:
        raise ValueError(
            f"container invalid: {path.name} is {raw.dtype}, manifest says {bit_depth}-bit"
        )
    if expect_color:
        if raw.ndim != 3 or raw.shape[2] != 3:
            raise ValueError(f"container invalid: {path.name} is not a 3-channel image")
        raw = raw[:, :, ::-1]
    else:
        if raw.ndim != 2:
            raise ValueError(f"container invalid: {path.name} is not single-channel")
    scale = 255 if bit_depth == 8 else 65535
    return raw.astype(np.float64) / scale


def save_mpi(
    mpi: MultiplaneImage,
    intrinsics: CameraIntrinsics,
    directory,
    bit_depth: int = 8,
    depth_gt: np.ndarray | None = None,
) -> Path:
    """Write an MPI container; returns the manifest path."""
    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    alpha_files = [f"alpha_{i:03d}.png" for i in range(mpi.num_planes)]
    manifest = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "num_planes": mpi.num_planes,
        "resolution": mpi.resolution,
        "depths": [float(d) for d in mpi.depths],
        "near": float(mpi.near),
        "far": float(mpi.far),
        "intrinsics": {
            "fx": intrinsics.fx,
            "fy": intrinsics.fy,
            "cx": intrinsics.cx,
            "cy": intrinsics.cy,
            "width": intrinsics.width,
            "height": intrinsics.height,
        },
        "canonical_pose": list(CameraPose.identity().flattened16()),
        "bit_depth": bit_depth,
        "color_file": "color.png",
        "alpha_files": alpha_files,
    }
    _write_png(directory / "color.png", mpi.color, bit_depth)
    for name, alpha in zip(alpha_files, mpi.alphas):
        _write_png(directory / name, alpha[:, :, 0], bit_depth)
    if mpi.background is not None:
        manifest["background_file"] = "background.png"
        _write_png(directory / "background.png", mpi.background, bit_depth)
    if depth_gt is not None:
        depth_gt = np.asarray(depth_gt, dtype=np.float64)
        if depth_gt.shape != (mpi.resolution, mpi.resolution):
            raise ValueError("depth_gt resolution must match the MPI")
        lo, hi = float(depth_gt.min()), float(depth_gt.max())
        span = hi - lo if hi > lo else 1.0
        manifest["depth_gt_file"] = "depth_gt.png"
        manifest["depth_gt_min"] = lo
        manifest["depth_gt_max"] = hi
        _write_png(directory / "depth_gt.png", (depth_gt - lo) / span, 16)
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def load_manifest(directory) -> dict:
    """Read and structurally validate a container manifest."""
    directory = Path(directory)
    path = directory / "manifest.json"
    if not path.exists():
        raise ValueError(f"container invalid: missing manifest.json in {directory}")
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"container invalid: manifest is not valid JSON ({exc})") from exc
    if not isinstance(manifest, dict):
        raise ValueError("container invalid: manifest root must be an object")
    for key in REQUIRED_MANIFEST_FIELDS:
        if key not in manifest:
            raise ValueError(f"container invalid: manifest missing field {key!r}")
    if manifest["format"] != FORMAT_NAME:
        raise ValueError(f"container invalid: unknown format {manifest['format']!r}")
    if manifest["version"] != FORMAT_VERSION:
        raise ValueError(f"container invalid: unsupported version {manifest['version']!r}")
    if manifest["bit_depth"] not in (8, 16):
        raise ValueError(f"container invalid: bit_depth must be 8 or 16")
    for key in _INTRINSICS_FIELDS:
        if key not in manifest["intrinsics"]:
            raise ValueError(f"container invalid: intrinsics missing field {key!r}")
    if len(manifest["alpha_files"]) != manifest["num_planes"]:
        raise ValueError(
            "container invalid: manifest/file mismatch: "
            f"num_planes={manifest['num_planes']} but "
            f"{len(manifest['alpha_files'])} alpha files listed"
        )
    return manifest


def load_mpi(directory):
    """Load a container; returns (MultiplaneImage, CameraIntrinsics).

    Every MultiplaneImage invariant is re-validated; violations raise a
    ValueError whose message names the failed invariant.
    """
    directory = Path(directory)
    manifest = load_manifest(directory)
    res = manifest["resolution"]
    bit_depth = manifest["bit_depth"]
    ki = manifest["intrinsics"]
    try:
        intrinsics = CameraIntrinsics(
            ki["fx"], ki["fy"], ki["cx"], ki["cy"], ki["width"], ki["height"]
        )
        pose16 = np.asarray(manifest["canonical_pose"], dtype=np.float64)
        if pose16.shape != (16,):
            raise ValueError("canonical_pose must have 16 entries")
        CameraPose(pose16.reshape(4, 4)[:3, :3], pose16.reshape(4, 4)[:3, 3])
    except ValueError as exc:
        raise ValueError(f"container invalid: {exc}") from exc

    def read_image(name: str, expect_color: bool) -> np.ndarray:
        path = directory / name
        if not path.exists():
            raise ValueError(f"container invalid: missing file {name}")
        img = _read_png(path, bit_depth, expect_color)
        if img.shape[:2] != (res, res):
            raise ValueError(
                f"container invalid: {name} resolution {img.shape[:2]} does not "
                f"match manifest resolution {res}"
            )
        return img

    color = read_image(manifest["color_file"], expect_color=True)
    alphas = tuple(
        read_image(name, expect_color=False)[..., None] for name in manifest["alpha_files"]
    )
    background = None
    if "background_file" in manifest:
        background = read_image(manifest["background_file"], expect_color=True)
    try:
        mpi = MultiplaneImage(
            color,
            alphas,
            tuple(float(d) for d in manifest["depths"]),
            float(manifest["near"]),
            float(manifest["far"]),
            background=background,
        )
    except (ValueError, TypeError) as exc:
        raise ValueError(f"container invalid: {exc}") from exc
    return mpi, intrinsics


def load_depth_gt(directory) -> np.ndarray | None:
    """Ground-truth depth stored with a synthetic scene, if present."""
    directory = Path(directory)
    manifest = load_manifest(directory)
    if "depth_gt_file" not in manifest:
        return None
    normalized = _read_png(directory / manifest["depth_gt_file"], 16, expect_color=False)
    lo = float(manifest["depth_gt_min"])
    hi = float(manifest["depth_gt_max"])
    return lo + normalized * (hi - lo)


# -- trajectories ---------------------------------------------------------------


@dataclass(frozen=True)
class Trajectory:
    """Ordered labeled camera poses, with the generator spec that made them."""

    poses: tuple
    generator: dict | None = None

    def __post_init__(self):
        for pose, label in self.poses:
            if not isinstance(pose, CameraPose):
                raise ValueError("trajectory entries must be (CameraPose, label)")
            if not isinstance(label, str) or not label:
                raise ValueError("trajectory labels must be non-empty strings")

    def __len__(self) -> int:
        return len(self.poses)


def save_trajectory(trajectory: Trajectory, path) -> None:
    doc = {
        "format": TRAJECTORY_FORMAT,
        "version": FORMAT_VERSION,
        "poses": [
            {
                "label": label,
                "rotation": [float(v) for v in pose.rotation.reshape(-1)],
                "translation": [float(v) for v in pose.translation],
            }
            for pose, label in trajectory.poses
        ],
    }
    if trajectory.generator is not None:
        doc["generator"] = trajectory.generator
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_trajectory(path) -> Trajectory:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"trajectory invalid: not valid JSON ({exc})") from exc
    if doc.get("format") != TRAJECTORY_FORMAT:
        raise ValueError(f"trajectory invalid: unknown format {doc.get('format')!r}")
    poses = []
    for i, entry in enumerate(doc.get("poses", [])):
        try:
            rot = np.asarray(entry["rotation"], dtype=np.float64).reshape(3, 3)
            trans = np.asarray(entry["translation"], dtype=np.float64)
            poses.append((CameraPose(rot, trans), entry["label"]))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"trajectory invalid: pose {i}: {exc}") from exc
    return Trajectory(tuple(poses), doc.get("generator"))


def _look_at_pose(center: np.ndarray, target: np.ndarray) -> CameraPose:
    """Pose whose camera sits at `center` looking at `target` (y-down frame)."""
    z = target - center
    norm = np.linalg.norm(z)
    if norm < 1e-12:
        raise ValueError("look-at target coincides with the camera center")
    z = z / norm
    x = np.cross(np.array([0.0, 1.0, 0.0]), z)
    xn = np.linalg.norm(x)
    if xn < 1e-12:
        raise ValueError("look-at direction is parallel to the vertical axis")
    x = x / xn
    y = np.cross(z, x)
    rotation = np.stack([x, y, z], axis=1)
    return CameraPose(rotation, center)


def orbit_poses(
    yaw_range_deg=(-5.0, 5.0),
    pitch_range_deg=(0.0, 0.0),
    count: int = 9,
    pivot_depth: float = 1.035,
) -> Trajectory:
    """Look-at sweep: the camera rides a sphere around a pivot on the axis.

    The pivot sits at (0, 0, pivot_depth) and the orbit radius equals
    pivot_depth, so zero angles reproduce the canonical pose exactly. Yaw and
    pitch interpolate linearly from range start to range end over `count`
    frames; a single-frame sweep is the canonical view (both angles 0).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if pivot_depth <= 0:
        raise ValueError("pivot_depth must be positive")
    if count == 1:
        yaws = np.array([0.0])
        pitches = np.array([0.0])
    else:
        yaws = np.linspace(yaw_range_deg[0], yaw_range_deg[1], count)
        pitches = np.linspace(pitch_range_deg[0], pitch_range_deg[1], count)
    pivot = np.array([0.0, 0.0, pivot_depth])
    poses = []
    for i, (yaw_deg, pitch_deg) in enumerate(zip(yaws, pitches)):
        yaw = math.radians(yaw_deg)
        pitch = math.radians(pitch_deg)
        direction = np.array(
            [
                math.sin(yaw) * math.cos(pitch),
                -math.sin(pitch),
                math.cos(yaw) * math.cos(pitch),
            ]
        )
        center = pivot - pivot_depth * direction
        if yaw == 0.0 and pitch == 0.0:
            pose = CameraPose.identity()
        else:
            pose = _look_at_pose(center, pivot)
        poses.append((pose, f"frame_{i:03d}"))
    generator = {
        "kind": "orbit",
        "yaw_range_deg": [float(yaw_range_deg[0]), float(yaw_range_deg[1])],
        "pitch_range_deg": [float(pitch_range_deg[0]), float(pitch_range_deg[1])],
        "count": count,
        "pivot_depth": pivot_depth,
    }
    return Trajectory(tuple(poses), generator)


def translation_arc_poses(
    max_angle_deg: float = 5.0, count: int = 9, pivot_depth: float = 1.035
) -> Trajectory:
    """Pure-translation arc: canonical orientation, center on the orbit circle.

    With the rotation fixed at identity, a plane at depth d keeps normal z and
    offset b = d - t_z in the target frame, so image-space disparity is
    exactly fx * t_x / b: inversely proportional to plane offset. Useful when
    a test needs the parallax law uncontaminated by rotation.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    angles = (
        np.array([0.0])
        if count == 1
        else np.linspace(-math.radians(max_angle_deg), math.radians(max_angle_deg), count)
    )
    poses = []
    for i, theta in enumerate(angles):
        center = np.array(
            [-pivot_depth * math.sin(theta), 0.0, pivot_depth * (1.0 - math.cos(theta))]
        )
        poses.append((CameraPose(np.eye(3), center), f"frame_{i:03d}"))
    generator = {
        "kind": "translation-arc",
        "max_angle_deg": float(max_angle_deg),
        "count": count,
        "pivot_depth": pivot_depth,
    }
    return Trajectory(tuple(poses), generator)


# -- synthetic scenes -------------------------------------------------------------


@dataclass(frozen=True)
class SynthScene:
    """A procedural MPI with per-pixel ground truth for oracle tests."""

    mpi: MultiplaneImage
    depth: np.ndarray
    mask: np.ndarray
    intrinsics: CameraIntrinsics


def _default_intrinsics(resolution: int) -> CameraIntrinsics:
    f = 1.2 * resolution
    c = (resolution - 1) / 2.0
    return CameraIntrinsics(f, f, c, c, resolution, resolution)


def _disk_mask(resolution: int, center_xy, radius: float) -> np.ndarray:
    ys, xs = np.mgrid[0:resolution, 0:resolution]
    return (xs - center_xy[0]) ** 2 + (ys - center_xy[1]) ** 2 <= radius**2


def _layered_disks(params: dict, rng: np.random.Generator) -> SynthScene:
    res = int(params.get("resolution", 128))
    near = float(params.get("near", 0.95))
    far = float(params.get("far", 1.12))
    if "depths" in params:
        depths = [float(d) for d in params["depths"]]
        near = min(near, 0.95 * depths[0])
        far = max(far, 1.05 * depths[-1])
    else:
        n = int(params.get("num_disks", 3))
        span = far - near
        depths = list(np.linspace(near + 0.1 * span, far - 0.1 * span, n))
    n = len(depths)
    radius = float(params.get("disk_radius_frac", 0.08)) * res
    palette = np.array([[0.9, 0.1, 0.1], [0.1, 0.8, 0.1], [0.15, 0.2, 0.95], [0.9, 0.8, 0.1]])
    color = np.zeros((res, res, 3))
    gt = np.full((res, res), far)
    mask = np.zeros((res, res), dtype=bool)
    alphas = []
    # horizontally spread, never overlapping: the color image is shared
    for i, d in enumerate(depths):
        cx = (i + 1) / (n + 1) * (res - 1)
        cy = (res - 1) / 2.0 + rng.uniform(-0.05, 0.05) * res
        disk = _disk_mask(res, (cx, cy), radius)
        disk = disk & ~mask  # keep disks disjoint even if radii collide
        color[disk] = palette[i % len(palette)]
        gt[disk] = d
        mask |= disk
        alphas.append(disk.astype(np.float64)[..., None])
    alphas.append(np.ones((res, res, 1)))  # opaque backdrop
    all_depths = tuple(depths) + (far,)
    mpi = MultiplaneImage(
        color, tuple(alphas), all_depths, near, far, background=np.zeros((res, res, 3))
    )
    return SynthScene(mpi, gt, mask, _default_intrinsics(res))


def _checker_card(params: dict, rng: np.random.Generator) -> SynthScene:
    res = int(params.get("resolution", 128))
    near = float(params.get("near", 0.95))
    far = float(params.get("far", 1.12))
    card_depth = float(params.get("card_depth", near + 0.3 * (far - near)))
    half = float(params.get("card_size_frac", 0.3)) * res
    cells = int(params.get("checker_cells", 8))
    ys, xs = np.mgrid[0:res, 0:res]
    c = (res - 1) / 2.0
    card = (np.abs(xs - c) <= half) & (np.abs(ys - c) <= half)
    cell = max(1, int(2 * half / cells))
    checker = ((xs // cell + ys // cell) % 2).astype(np.float64)
    color = np.full((res, res, 3), 0.25)
    for ch, v in enumerate((0.95, 0.75, 0.2)):
        color[..., ch] = np.where(card, 0.05 + 0.9 * checker * v, color[..., ch])
    gt = np.where(card, card_depth, far)
    alphas = (card.astype(np.float64)[..., None], np.ones((res, res, 1)))
    mpi = MultiplaneImage(
        color,
        alphas,
        (card_depth, far),
        near,
        far,
        background=np.full((res, res, 3), 0.25),
    )
    return SynthScene(mpi, gt, card, _default_intrinsics(res))


def _sphere_billboards(params: dict, rng: np.random.Generator) -> SynthScene:
    res = int(params.get("resolution", 128))
    near = float(params.get("near", 0.95))
    far = float(params.get("far", 1.12))
    num_planes = int(params.get("planes", 32))
    count = int(params.get("num_spheres", 3))
    band_frac = float(params.get("depth_band_frac", 0.32))
    eps_frac = float(params.get("epsilon_frac", 0.1))
    span = far - near
    lo = near + band_frac * span
    hi = far - band_frac * span
    if hi <= lo:
        raise ValueError("depth_band_frac leaves no room for geometry")
    gt = np.full((res, res), hi)
    color = np.full((res, res, 3), 0.3)
    mask = np.zeros((res, res), dtype=bool)
    ys, xs = np.mgrid[0:res, 0:res]
    for _ in range(count):
        cx = rng.uniform(0.25, 0.75) * res
        cy = rng.uniform(0.25, 0.75) * res
        r = rng.uniform(0.10, 0.2) * res
        rho2 = ((xs - cx) ** 2 + (ys - cy) ** 2) / (r * r)
        inside = rho2 < 1.0
        bulge = np.sqrt(np.clip(1.0 - rho2, 0.0, 1.0))
        depth_here = hi - (hi - lo) * bulge
        gt = np.where(inside, np.minimum(gt, depth_here), gt)
        tint = rng.uniform(0.3, 1.0, size=3)
        shade = (0.35 + 0.65 * bulge)[..., None] * tint
        color = np.where(inside[..., None], shade, color)
        mask |= inside
    depths = place_planes_disparity(num_planes, near, far)
    epsilon = eps_frac * span
    alphas = tuple(depth_to_alpha(gt, depths, epsilon))
    mpi = MultiplaneImage(color, alphas, depths, near, far)
    return SynthScene(mpi, gt, mask, _default_intrinsics(res))


_SCENE_BUILDERS = {
    "layered-disks": _layered_disks,
    "checker-card": _checker_card,
    "sphere-billboards": _sphere_billboards,
}


def synth_scene(kind: str, params: dict | None = None, seed: int = 0) -> SynthScene:
    """Deterministic procedural MPI with known per-pixel ground-truth depth.

    kinds: layered-disks (disjoint opaque disks on separate planes),
    checker-card (a fronto-parallel textured card over a backdrop), and
    sphere-billboards (smooth depth bumps converted to alphas via
    depth_to_alpha, so the depth composite has a known round-trip bound).
    """
    if kind not in _SCENE_BUILDERS:
        raise ValueError(
            f"unknown scene kind {kind!r}; expected one of {sorted(_SCENE_BUILDERS)}"
        )
    kind_tag = zlib.crc32(kind.encode("utf-8"))
    rng = np.random.default_rng(np.random.SeedSequence([kind_tag, seed]))
    return _SCENE_BUILDERS[kind](dict(params or {}), rng)
