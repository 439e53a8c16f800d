"""Front-to-back alpha compositing, normals from depth, Lambertian shading.

The over operator combines warped planes near-to-far:

    I = sum_i C'_i a'_i prod_{j<i} (1 - a'_j)
    D = sum_i b_i  a'_i prod_{j<i} (1 - a'_j)
    T = prod_i (1 - a'_i)

T is the residual transmittance: the fraction of a background behind the
whole stack that would still be visible. It is returned explicitly rather
than composited to black so callers can choose a backdrop.

The depth sum uses one scalar b_i per plane (the plane's depth from the
rendering camera); where transmittance is nonzero the raw sum is not a
convex combination of the b_i, so consumers wanting "depth of the visible
content" should divide by (1 - T).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mpikit.core import CameraIntrinsics, CameraPose, MultiplaneImage, _freeze
from mpikit.warp import plane_homography, plane_in_target_frame, warp_plane

_RANGE_TOL = 1e-6


@dataclass(frozen=True)
class RenderOutput:
    """Composited view: color image, depth map, residual transmittance."""

    color: np.ndarray
    depth: np.ndarray | None
    transmittance: np.ndarray

    def __post_init__(self):
        color = _freeze(np.asarray(self.color))
        trans = _freeze(np.asarray(self.transmittance))
        if color.ndim != 3 or color.shape[2] != 3:
            raise ValueError("color must be (H, W, 3)")
        if trans.shape != color.shape[:2]:
            raise ValueError("transmittance must be (H, W)")
        if color.min() < -_RANGE_TOL or color.max() > 1.0 + _RANGE_TOL:
            raise ValueError("composited color outside [0, 1]")
        if trans.min() < -_RANGE_TOL or trans.max() > 1.0 + _RANGE_TOL:
            raise ValueError("transmittance outside [0, 1]")
        depth = self.depth
        if depth is not None:
            depth = _freeze(np.asarray(depth))
            if depth.shape != color.shape[:2]:
                raise ValueError("depth must be (H, W)")
            if not np.isfinite(depth).all():
                raise ValueError("depth contains non-finite values")
        object.__setattr__(self, "color", color)
        object.__setattr__(self, "depth", depth)
        object.__setattr__(self, "transmittance", trans)

    def over_backdrop(self, backdrop: np.ndarray) -> np.ndarray:
        """Composite the residual transmittance over a backdrop color/image."""
        backdrop = np.asarray(backdrop, dtype=np.float64)
        return self.color + self.transmittance[..., None] * backdrop


@dataclass(frozen=True)
class ShadingParams:
    """Lambertian shading: ambient k_a, diffuse k_d, unit light direction."""

    k_a: float
    k_d: float
    light_dir: np.ndarray

    def __post_init__(self):
        if self.k_a < 0 or self.k_d < 0:
            raise ValueError("shading coefficients must be non-negative")
        d = _freeze(np.asarray(self.light_dir))
        if d.shape != (3,):
            raise ValueError("light_dir must be a 3-vector")
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("light_dir must be unit length")
        object.__setattr__(self, "light_dir", d)


def over_composite(warped_planes, values=None) -> RenderOutput:
    """Composite (color, alpha) planes ordered near-to-far.

    Args:
      warped_planes: sequence of (C_i (H, W, 3), alpha_i (H, W, 1)) pairs,
        index 0 closest to the camera.
      values: optional per-plane scalars b_i; when given, the output carries
        the composited value map (used for depth).

    Returns:
      RenderOutput; depth is None when `values` is omitted.
    """
    planes = list(warped_planes)
    if not planes:
        raise ValueError("empty plane list")
    if values is not None and len(values) != len(planes):
        raise ValueError("need one value per plane")
    h, w = planes[0][0].shape[:2]
    color = np.zeros((h, w, 3))
    depth = np.zeros((h, w)) if values is not None else None
    trans = np.ones((h, w, 1))
    for i, (c, a) in enumerate(planes):
        wgt = a * trans
        color = color + wgt * c
        if depth is not None:
            depth = depth + wgt[..., 0] * float(values[i])
        trans = trans * (1.0 - a)
    return RenderOutput(color, depth, trans[..., 0])


def render(
    mpi: MultiplaneImage,
    k_cano: CameraIntrinsics,
    k_tgt: CameraIntrinsics,
    pose: CameraPose,
) -> RenderOutput:
    """Render the MPI from a target camera.

    Each plane is warped by its induced homography (target pixel to canonical
    pixel) and the results are over-composited with the plane depths measured
    from the target camera. Output resolution is k_tgt.width x k_tgt.height.
    Raises if any plane falls behind the target camera.
    """
    out_size = (k_tgt.width, k_tgt.height)
    planes = []
    values = []
    for i, d in enumerate(mpi.depths):
        geom = plane_in_target_frame(d, pose)
        hom = plane_homography(k_cano, k_tgt, pose, geom)
        planes.append(warp_plane(mpi, i, hom, out_size))
        values.append(geom.b)
    return over_composite(planes, values)


def normal_map(depth: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Per-pixel unit surface normals from a depth map.

    Pixels are back-projected to 3D through the intrinsics, tangents are taken
    as image-space derivatives of the 3D positions (second-order differences,
    exact for planar surfaces), and the normal is their cross product.
    Normals are oriented along the viewing direction (n_z > 0): a flat
    fronto-parallel surface yields (0, 0, 1) everywhere.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim != 2:
        raise ValueError("depth must be (H, W)")
    if depth.min() <= 0:
        raise ValueError("depth must be positive everywhere")
    h, w = depth.shape
    px, py = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    pos = np.stack(
        [
            (px - intrinsics.cx) / intrinsics.fx * depth,
            (py - intrinsics.cy) / intrinsics.fy * depth,
            depth,
        ],
        axis=-1,
    )
    edge = 2 if min(h, w) >= 3 else 1
    t_v, t_u = np.gradient(pos, axis=(0, 1), edge_order=edge)
    n = np.cross(t_u, t_v)
    norm = np.linalg.norm(n, axis=-1, keepdims=True)
    flat = norm[..., 0] < 1e-15
    n = np.where(flat[..., None], np.array([0.0, 0.0, 1.0]), n / np.where(norm == 0, 1.0, norm))
    # orient along the view direction
    n = np.where((n[..., 2:3] < 0), -n, n)
    return n


def apply_shading(color: np.ndarray, normals: np.ndarray, params: ShadingParams) -> np.ndarray:
    """Shade color with an ambient plus clamped-diffuse Lambertian term.

    C_out = clip(C * (k_a + k_d * max(0, l . n)), 0, 1). The diffuse dot
    product is clamped at zero so surfaces facing away from the light receive
    ambient only; the result is clamped to the valid color range.
    """
    color = np.asarray(color, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    if color.shape[:2] != normals.shape[:2] or normals.shape[-1] != 3:
        raise ValueError("color and normals must share (H, W)")
    lambert = np.maximum(0.0, normals @ params.light_dir)
    return np.clip(color * (params.k_a + params.k_d * lambert)[..., None], 0.0, 1.0)


def lighting_direction(l_h: float, l_v: float) -> np.ndarray:
    """Unit light direction from horizontal/vertical angles in radians.

    Zero angles give (0, 0, 1), a headlight along the camera axis. Positive
    l_h swings the light toward +x; positive l_v raises it above the axis
    (image y points down, so "above" is -y).
    """
    return np.array(
        [
            np.sin(l_h) * np.cos(l_v),
            -np.sin(l_v),
            np.cos(l_h) * np.cos(l_v),
        ]
    )


def sample_lighting_angles(rng: np.random.Generator) -> tuple[float, float]:
    """Draw (l_h, l_v) in radians: horizontal N(0, 0.2), vertical N(0.2, 0.05)."""
    return float(rng.normal(0.0, 0.2)), float(rng.normal(0.2, 0.05))


def sample_lighting(rng: np.random.Generator) -> np.ndarray:
    """Draw a random unit light direction (see sample_lighting_angles)."""
    l_h, l_v = sample_lighting_angles(rng)
    return lighting_direction(l_h, l_v)


def shading_schedule(iteration: int) -> tuple[float, float]:
    """Ambient/diffuse coefficients as a function of training iteration.

    Identity shading (1.0, 0.0) for the first 1000 iterations, then a linear
    ramp reaching (0.9, 0.1) at iteration 2000, constant afterwards.
    """
    if iteration < 0:
        raise ValueError("iteration must be non-negative")
    if iteration <= 1000:
        return 1.0, 0.0
    if iteration >= 2000:
        return 0.9, 0.1
    frac = (iteration - 1000) / 1000.0
    return 1.0 - 0.1 * frac, 0.1 * frac


def normalized_depth_mse(
    pred: np.ndarray, ref: np.ndarray, mask: np.ndarray | None = None
) -> float:
    """Mean squared difference after standardizing both depth maps.

    Each map is reduced to zero mean and unit variance over the masked pixels
    before comparison, making the metric invariant to affine depth rescaling.

    Raises:
      ValueError: degenerate-mask, when fewer than 2 pixels are selected or
        either map has zero variance over the mask.
    """
    pred = np.asarray(pred, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if pred.shape != ref.shape:
        raise ValueError("depth maps must share a shape")
    if mask is None:
        mask = np.ones(pred.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != pred.shape:
        raise ValueError("mask must match the depth maps")
    p = pred[mask]
    r = ref[mask]
    if p.size < 2:
        raise ValueError("degenerate-mask: need at least 2 pixels")
    ps, rs = p.std(), r.std()
    if ps == 0.0 or rs == 0.0:
        raise ValueError("degenerate-mask: zero variance over the mask")
    zp = (p - p.mean()) / ps
    zr = (r - r.mean()) / rs
    return float(np.mean((zp - zr) ** 2))
