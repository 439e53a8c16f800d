"""Core domain types for multiplane images and cameras.

A multiplane image (MPI) is a set of fronto-parallel planes at fixed depths
from a reference ("canonical") camera. Here the representation is one shared
color image plus one alpha map per plane: novel views are produced by warping
each plane with its induced homography and compositing front to back.

Conventions used throughout the package:
  * Camera frame: x right, y down, z forward. A plane at depth d is the set
    of points with z = d in the canonical frame.
  * Plane i = 1 is closest to the camera, i = L farthest.
  * Color and alpha are linear floating point in [0, 1]; 8/16-bit encodings
    exist only at the container boundary.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _freeze(a: np.ndarray, dtype=np.float64) -> np.ndarray:
    """Copy to a contiguous read-only array."""
    out = np.ascontiguousarray(a, dtype=dtype)
    if out is a:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics. Focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")

    def matrix(self) -> np.ndarray:
        """3x3 calibration matrix K."""
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    def inverse_matrix(self) -> np.ndarray:
        """Closed-form K^-1 (avoids a numerical solve)."""
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.cx / self.fx],
                [0.0, 1.0 / self.fy, -self.cy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )

    def scaled(self, width: int, height: int) -> "CameraIntrinsics":
        """Intrinsics for the same camera rendered at a different resolution."""
        sx = width / self.width
        sy = height / self.height
        return CameraIntrinsics(
            fx=self.fx * sx,
            fy=self.fy * sy,
            cx=self.cx * sx,
            cy=self.cy * sy,
            width=width,
            height=height,
        )


@dataclass(frozen=True)
class CameraPose:
    """Rigid transform mapping target-frame points into the canonical frame.

    X_cano = rotation @ X_tgt + translation. The translation therefore equals
    the target camera's center expressed in canonical coordinates. The
    identity pose is the canonical camera itself.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = _freeze(np.asarray(self.rotation))
        t = _freeze(np.asarray(self.translation))
        if r.shape != (3, 3) or t.shape != (3,):
            raise ValueError("rotation must be 3x3, translation a 3-vector")
        if not np.allclose(r.T @ r, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        if not np.isclose(np.linalg.det(r), 1.0, atol=1e-6):
            raise ValueError("rotation determinant is not +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(np.eye(3), np.zeros(3))

    def is_identity(self) -> bool:
        return bool(
            np.array_equal(self.rotation, np.eye(3))
            and np.array_equal(self.translation, np.zeros(3))
        )

    def inverse(self) -> "CameraPose":
        """The canonical-to-target transform."""
        r = self.rotation.T
        return CameraPose(r, -r @ self.translation)

    def transform(self, points: np.ndarray) -> np.ndarray:
        """Apply to points of shape (..., 3)."""
        return points @ self.rotation.T + self.translation

    def matrix4(self) -> np.ndarray:
        """Homogeneous 4x4 form."""
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def flattened16(self) -> np.ndarray:
        """Row-major flattened 4x4, as consumed by pose-conditioned scoring."""
        return self.matrix4().reshape(-1)


@dataclass(frozen=True)
class PlaneGeometry:
    """A 3D plane in target-camera coordinates: normal . X = b.

    The normal is unit length and points away from the camera (for the
    identity pose a fronto-parallel plane has normal (0, 0, 1)); b > 0 is the
    plane's depth from the target camera along that normal.
    """

    normal: np.ndarray
    b: float

    def __post_init__(self):
        n = _freeze(np.asarray(self.normal))
        if n.shape != (3,):
            raise ValueError("normal must be a 3-vector")
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("normal must be unit length")
        if not self.b > 0:
            raise ValueError("plane-behind-camera: b must be positive")
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class MultiplaneImage:
    """One shared color image plus L alpha maps at increasing depths.

    Fields:
      color: (H, H, 3) image in [0, 1], shared by all planes.
      alphas: tuple of L (H, H, 1) opacity maps in [0, 1], near to far.
      depths: tuple of L strictly increasing positive plane depths
        (distance from the canonical camera along its z axis).
      near, far: modeled depth range; near <= depths[0], depths[-1] <= far.
      background: optional (H, H, 3) color override for the last plane. The
        last plane acts as the scene background; when set, renderers sample
        plane L's color from this image instead of `color`.
    """

    color: np.ndarray
    alphas: tuple
    depths: tuple
    near: float
    far: float
    background: np.ndarray | None = field(default=None)

    def __post_init__(self):
        color = _freeze(np.asarray(self.color))
        if color.ndim != 3 or color.shape[2] != 3 or color.shape[0] != color.shape[1]:
            raise ValueError("color must be a square (H, H, 3) image")
        alphas = tuple(_freeze(np.asarray(a)) for a in self.alphas)
        if len(alphas) < 1:
            raise ValueError("need at least one plane")
        h = color.shape[0]
        for i, a in enumerate(alphas):
            if a.shape != (h, h, 1):
                raise ValueError(
                    f"alpha {i} has shape {a.shape}, expected {(h, h, 1)}"
                )
            if a.min() < 0.0 or a.max() > 1.0:
                raise ValueError(f"alpha {i} has values outside [0, 1]")
        if color.min() < 0.0 or color.max() > 1.0:
            raise ValueError("color has values outside [0, 1]")
        depths = tuple(float(d) for d in self.depths)
        if len(depths) != len(alphas):
            raise ValueError("one depth per alpha plane required")
        if depths[0] <= 0:
            raise ValueError("plane depths must be positive")
        if any(b <= a for a, b in zip(depths, depths[1:])):
            raise ValueError("plane depths must be strictly increasing")
        if not (self.near <= depths[0] and depths[-1] <= self.far):
            raise ValueError("depths must lie within [near, far]")
        background = self.background
        if background is not None:
            background = _freeze(np.asarray(background))
            if background.shape != color.shape:
                raise ValueError("background must match the color image shape")
            if background.min() < 0.0 or background.max() > 1.0:
                raise ValueError("background has values outside [0, 1]")
        object.__setattr__(self, "color", color)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "depths", depths)
        object.__setattr__(self, "near", float(self.near))
        object.__setattr__(self, "far", float(self.far))
        object.__setattr__(self, "background", background)

    @property
    def num_planes(self) -> int:
        return len(self.alphas)

    @property
    def resolution(self) -> int:
        return self.color.shape[0]

    def plane_color(self, i: int) -> np.ndarray:
        """Color image of plane i (0-based); the last plane may be overridden."""
        if i == self.num_planes - 1 and self.background is not None:
            return self.background
        return self.color

    def normalized_depths(self) -> np.ndarray:
        """All plane depths mapped through normalize_depth."""
        d1, dl = self.depths[0], self.depths[-1]
        return np.array([normalize_depth(d, d1, dl) for d in self.depths])


def place_planes_disparity(num_planes: int, near: float, far: float) -> np.ndarray:
    """Plane depths equally spaced in disparity (inverse depth).

    Returns `num_planes` strictly increasing depths whose inverses form an
    arithmetic sequence from 1/near to 1/far. For a single plane the near
    depth is used.

    Args:
      num_planes: number of planes L >= 1.
      near: depth of the closest plane, > 0.
      far: depth of the farthest plane, > near.

    Returns:
      (L,) array of depths with d[0] = near and d[-1] = far for L >= 2.
    """
    if num_planes < 1:
        raise ValueError("need at least one plane")
    if near <= 0 or near >= far:
        raise ValueError(f"invalid depth range [{near}, {far}]")
    if num_planes == 1:
        return np.array([near], dtype=np.float64)
    disparities = np.linspace(1.0 / near, 1.0 / far, num_planes)
    return 1.0 / disparities


def normalize_depth(d: float, d_first: float, d_last: float) -> float:
    """Map a plane depth linearly to [0, 1] over the stack's depth range.

    A single-plane stack has d_first == d_last; that degenerate range maps
    to 0 by convention.
    """
    if d_first > d_last:
        raise ValueError("d_first must not exceed d_last")
    if d_first == d_last:
        return 0.0
    if not (d_first <= d <= d_last):
        raise ValueError(f"depth {d} outside [{d_first}, {d_last}]")
    return (d - d_first) / (d_last - d_first)
