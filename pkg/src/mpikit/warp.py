"""Plane-induced homographies and bilinear image resampling.

Rendering an MPI from a new viewpoint warps each plane by the homography the
plane induces between the two cameras, then composites. This module provides
the homography construction (from intrinsics, relative pose, and the plane in
target-camera coordinates) and the inverse-warp resampler.

Pixel convention: integer coordinates are pixel centers, x runs along image
columns, y along rows. Homogeneous pixel vectors are [x, y, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mpikit.core import CameraIntrinsics, CameraPose, MultiplaneImage, PlaneGeometry, _freeze

# Homogeneous scale below this is treated as "projects behind the camera".
_W_EPS = 1e-9


@dataclass(frozen=True)
class Homography:
    """3x3 map from target pixel coords to canonical pixel coords."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _freeze(np.asarray(self.matrix))
        if m.shape != (3, 3):
            raise ValueError("homography matrix must be 3x3")
        scale = np.abs(m).max()
        if scale == 0.0 or abs(np.linalg.det(m / scale)) <= 1e-12:
            raise ValueError("homography is not invertible")
        object.__setattr__(self, "matrix", m)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map (..., 2) pixel coordinates through the homography."""
        p = np.asarray(points, dtype=np.float64)
        q = p @ self.matrix[:, :2].T + self.matrix[:, 2]
        return q[..., :2] / q[..., 2:3]

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))

    def is_exact_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(3)))


def plane_in_target_frame(d_i: float, relative_pose: CameraPose) -> PlaneGeometry:
    """Express the canonical plane z = d_i in target-camera coordinates.

    `relative_pose` maps target-frame points to canonical-frame points
    (X_cano = R X_tgt + t). Substituting into z_cano = d_i gives the target
    frame plane equation (R^T z_hat) . X_tgt = d_i - t_z.

    Raises:
      ValueError: plane-behind-camera, when the target camera sits at or
        beyond the plane (b <= 0).
    """
    if d_i <= 0:
        raise ValueError("plane depth must be positive")
    normal = relative_pose.rotation.T @ np.array([0.0, 0.0, 1.0])
    b = d_i - relative_pose.translation[2]
    return PlaneGeometry(normal, b)


def plane_homography(
    K_cano: CameraIntrinsics,
    K_tgt: CameraIntrinsics,
    relative_pose: CameraPose,
    plane: PlaneGeometry,
) -> Homography:
    """Homography induced by a plane between the target and canonical cameras.

    For a target pixel p', the ray through p' meets the plane n.X = b at
    X_tgt = (b / (n.v)) v with v = K_tgt^-1 [p', 1]; mapping X_tgt into the
    canonical frame and projecting yields, up to homogeneous scale,

        H = K_cano (R + t n^T / b) K_tgt^-1.

    The identity pose with equal intrinsics returns the exact identity matrix
    so that no-op warps reproduce their input bitwise.
    """
    if relative_pose.is_identity() and K_cano == K_tgt:
        return Homography(np.eye(3))
    m = relative_pose.rotation + np.outer(relative_pose.translation, plane.normal) / plane.b
    return Homography(K_cano.matrix() @ m @ K_tgt.inverse_matrix())


def _sample_plan(h: int, w: int, x: np.ndarray, y: np.ndarray, oob: str):
    """Bilinear gather plan: corner indices and weights for given coords.

    Both the forward sampler and the gradient scatter use this plan, so the
    backward pass is exact for the forward it pairs with.

    oob "zero": corners outside the image contribute weight 0 (values taper
    to 0 over the one-pixel border band). oob "clamp": coordinates are
    clamped to the image rectangle first (edge extension).
    """
    if oob not in ("zero", "clamp"):
        raise ValueError(f"unknown out-of-bounds mode {oob!r}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if oob == "clamp":
        x = np.clip(x, 0.0, w - 1.0)
        y = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    w00 = (1.0 - fy) * (1.0 - fx)
    w01 = (1.0 - fy) * fx
    w10 = fy * (1.0 - fx)
    w11 = fy * fx
    ix0 = x0.astype(np.int64)
    iy0 = y0.astype(np.int64)
    ix1 = ix0 + 1
    iy1 = iy0 + 1
    if oob == "zero":
        row0 = (iy0 >= 0) & (iy0 < h)
        row1 = (iy1 >= 0) & (iy1 < h)
        col0 = (ix0 >= 0) & (ix0 < w)
        col1 = (ix1 >= 0) & (ix1 < w)
        w00 = w00 * (row0 & col0)
        w01 = w01 * (row0 & col1)
        w10 = w10 * (row1 & col0)
        w11 = w11 * (row1 & col1)
    ix0 = np.clip(ix0, 0, w - 1)
    ix1 = np.clip(ix1, 0, w - 1)
    iy0 = np.clip(iy0, 0, h - 1)
    iy1 = np.clip(iy1, 0, h - 1)
    return (iy0, ix0, iy1, ix1, w00, w01, w10, w11)


def _plan_gather(image: np.ndarray, plan) -> np.ndarray:
    iy0, ix0, iy1, ix1, w00, w01, w10, w11 = plan
    return (
        w00[..., None] * image[iy0, ix0]
        + w01[..., None] * image[iy0, ix1]
        + w10[..., None] * image[iy1, ix0]
        + w11[..., None] * image[iy1, ix1]
    )


def _plan_scatter(grad_out: np.ndarray, plan, h: int, w: int) -> np.ndarray:
    """Adjoint of _plan_gather: scatter-add output gradients to the source."""
    iy0, ix0, iy1, ix1, w00, w01, w10, w11 = plan
    c = grad_out.shape[-1]
    grad_img = np.zeros((h, w, c))
    np.add.at(grad_img, (iy0, ix0), w00[..., None] * grad_out)
    np.add.at(grad_img, (iy0, ix1), w01[..., None] * grad_out)
    np.add.at(grad_img, (iy1, ix0), w10[..., None] * grad_out)
    np.add.at(grad_img, (iy1, ix1), w11[..., None] * grad_out)
    return grad_img


def bilinear_sample(image: np.ndarray, points: np.ndarray, oob: str = "zero") -> np.ndarray:
    """Bilinearly interpolate `image` (H, W, C) at continuous pixel coords.

    Args:
      image: (H, W, C) array.
      points: (..., 2) array of (x, y) coordinates; integer coordinates hit
        pixel centers exactly.
      oob: "zero" (values taper to 0 outside, used for alpha) or "clamp"
        (edge extension, used for color).

    Returns:
      (..., C) interpolated values.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError("image must be (H, W, C)")
    p = np.asarray(points, dtype=np.float64)
    plan = _sample_plan(image.shape[0], image.shape[1], p[..., 0], p[..., 1], oob)
    return _plan_gather(image, plan)


def _target_grid(out_w: int, out_h: int) -> tuple[np.ndarray, np.ndarray]:
    xs = np.arange(out_w, dtype=np.float64)
    ys = np.arange(out_h, dtype=np.float64)
    return np.meshgrid(xs, ys)


def _warp_coords(homography: Homography, out_w: int, out_h: int):
    """Source coords and validity for every target pixel under inverse warp."""
    gx, gy = _target_grid(out_w, out_h)
    m = homography.matrix
    sw = m[2, 0] * gx + m[2, 1] * gy + m[2, 2]
    valid = sw > _W_EPS
    safe = np.where(valid, sw, 1.0)
    sx = np.where(valid, (m[0, 0] * gx + m[0, 1] * gy + m[0, 2]) / safe, 0.0)
    sy = np.where(valid, (m[1, 0] * gx + m[1, 1] * gy + m[1, 2]) / safe, 0.0)
    return sx, sy, valid


def warp_plane(
    mpi: MultiplaneImage,
    i: int,
    homography: Homography,
    out_size: tuple[int, int] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Resample plane i of the MPI into the target view.

    Every target pixel p' is sampled from the canonical color and alpha
    images at H p'. Alpha outside the canonical image is 0 (empty space);
    color is edge-clamped so partially transparent borders do not pick up
    black fringes. Pixels whose ray projects behind the canonical camera get
    color 0, alpha 0.

    Args:
      mpi: source multiplane image.
      i: 0-based plane index.
      homography: target-to-canonical pixel map for this plane.
      out_size: (width, height) of the output; defaults to the MPI resolution.

    Returns:
      (color, alpha) arrays of shape (H', W', 3) and (H', W', 1).
    """
    if not 0 <= i < mpi.num_planes:
        raise ValueError(f"plane index {i} out of range [0, {mpi.num_planes})")
    color = mpi.plane_color(i)
    alpha = mpi.alphas[i]
    h = mpi.resolution
    out_w, out_h = out_size if out_size is not None else (h, h)
    if homography.is_exact_identity() and (out_w, out_h) == (h, h):
        return color.copy(), alpha.copy()
    sx, sy, valid = _warp_coords(homography, out_w, out_h)
    color_plan = _sample_plan(h, h, sx, sy, "clamp")
    alpha_plan = _sample_plan(h, h, sx, sy, "zero")
    out_color = _plan_gather(color, color_plan)
    out_alpha = _plan_gather(alpha, alpha_plan)
    out_color *= valid[..., None]
    out_alpha *= valid[..., None]
    return out_color, out_alpha
