"""Shared fixtures-by-hand for the test suite: random poses, small MPIs."""

import numpy as np

from mpikit.core import CameraIntrinsics, CameraPose, MultiplaneImage, place_planes_disparity


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix for a unit axis and angle in radians."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def random_rotation(rng: np.random.Generator, max_angle_deg: float) -> np.ndarray:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, np.deg2rad(max_angle_deg))
    return rotation_about(axis, angle)


def random_pose(rng: np.random.Generator, max_angle_deg: float, max_trans: float) -> CameraPose:
    r = random_rotation(rng, max_angle_deg)
    t = rng.uniform(-1.0, 1.0, size=3)
    t *= rng.uniform(0.0, max_trans) / max(np.linalg.norm(t), 1e-12)
    return CameraPose(r, t)


def random_mpi(
    rng: np.random.Generator,
    h: int = 16,
    num_planes: int = 4,
    near: float = 0.95,
    far: float = 1.12,
    background: bool = False,
) -> MultiplaneImage:
    color = rng.uniform(0.0, 1.0, (h, h, 3))
    alphas = tuple(rng.uniform(0.0, 1.0, (h, h, 1)) for _ in range(num_planes))
    depths = tuple(place_planes_disparity(num_planes, near, far))
    bg = rng.uniform(0.0, 1.0, (h, h, 3)) if background else None
    return MultiplaneImage(color, alphas, depths, near, far, background=bg)


def square_intrinsics(h: int, focal: float | None = None) -> CameraIntrinsics:
    f = focal if focal is not None else 1.2 * h
    c = (h - 1) / 2.0
    return CameraIntrinsics(f, f, c, c, h, h)
