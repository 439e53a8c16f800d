"""Geometry extraction: occupancy volumes from alpha stacks, marching cubes,
smoothing, and OBJ export.

The alpha stack is treated as an occupancy field (alpha as density): the
volume stores raw alpha values resampled onto a regular grid, not compositing
weights. The grid's XY footprint is the canonical frustum cross-section at
the far plane, so every plane's visible extent is covered; points that
project outside the image at a given depth read as empty. Grid construction
is vectorized per z-slice and marching cubes processes cells in a fixed
order, so outputs are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage import measure

from mpikit.core import CameraIntrinsics, MultiplaneImage, _freeze
from mpikit.warp import _plan_gather, _sample_plan

_DEGENERATE_AREA = 1e-12


@dataclass(frozen=True)
class OccupancyVolume:
    """Scalar occupancy on a regular grid, axes (x, y, z) in canonical space.

    grid[i, j, k] is the occupancy at origin + (i, j, k) * spacing; the z axis
    runs along canonical camera depth with slices between the first and last
    plane depths.
    """

    grid: np.ndarray
    spacing: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        grid = _freeze(self.grid)
        spacing = _freeze(self.spacing)
        origin = _freeze(self.origin)
        if grid.ndim != 3 or min(grid.shape) < 1:
            raise ValueError("grid must be a non-empty 3D array")
        if np.min(grid) < 0.0 or np.max(grid) > 1.0:
            raise ValueError("occupancy values must lie in [0, 1]")
        if spacing.shape != (3,) or origin.shape != (3,):
            raise ValueError("spacing and origin must be 3-vectors")
        if not (np.all(np.isfinite(spacing)) and np.all(np.isfinite(origin))):
            raise ValueError("spacing and origin must be finite")
        if np.any(spacing < 0.0):
            raise ValueError("spacing must be non-negative")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    @property
    def shape(self) -> tuple:
        return self.grid.shape

    def translated(self, offset) -> "OccupancyVolume":
        """Same field with the origin shifted by a world-space offset."""
        return OccupancyVolume(self.grid, self.spacing, self.origin + np.asarray(offset))


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle soup: (N, 3) float vertices, (M, 3) int triangles."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = _freeze(self.vertices)
        t = _freeze(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be (N, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValueError("triangles must be (M, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle indices out of range")
        if t.size:
            areas = _triangle_areas(v, t)
            if np.any(areas <= _DEGENERATE_AREA):
                raise ValueError("degenerate (zero-area) triangle")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset), self.triangles)


def _triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    a = vertices[triangles[:, 0]]
    b = vertices[triangles[:, 1]]
    c = vertices[triangles[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def empty_mesh() -> TriangleMesh:
    return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))


def build_occupancy(
    mpi: MultiplaneImage,
    intrinsics: CameraIntrinsics,
    grid_shape: tuple,
) -> OccupancyVolume:
    """Resample the alpha stack onto a regular (X, Y, Z) grid.

    Z slices run linearly from the first to the last plane depth; between
    adjacent planes alpha interpolates linearly, outside that range the field
    is 0. In XY each grid point is projected through `intrinsics` at the
    slice depth and the plane's alpha map is sampled bilinearly (zero outside
    the image). The grid's XY extent is the frustum cross-section at the far
    plane, which covers every shallower slice's footprint.
    """
    try:
        nx, ny, nz = (int(s) for s in grid_shape)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"grid shape must be 3 integers, got {grid_shape!r}") from exc
    if nx < 1 or ny < 1:
        raise ValueError("empty grid")
    if nz < 2:
        raise ValueError("at least 2 z-slices required")
    k = intrinsics
    depths = np.asarray(mpi.depths)
    d_first, d_last = depths[0], depths[-1]
    # far-plane frustum corners define the XY extent
    x_lo = (0.0 - k.cx) / k.fx * d_last
    x_hi = (k.width - 1.0 - k.cx) / k.fx * d_last
    y_lo = (0.0 - k.cy) / k.fy * d_last
    y_hi = (k.height - 1.0 - k.cy) / k.fy * d_last
    xs = np.linspace(x_lo, x_hi, nx)
    ys = np.linspace(y_lo, y_hi, ny)
    zs = np.linspace(d_first, d_last, nz)
    grid = np.zeros((nx, ny, nz))
    for iz, z in enumerate(zs):
        if z < d_first or z > d_last:
            continue
        if mpi.num_planes == 1:
            alpha = mpi.alphas[0]
        else:
            i = int(np.clip(np.searchsorted(depths, z, side="right") - 1, 0, mpi.num_planes - 2))
            t = (z - depths[i]) / (depths[i + 1] - depths[i])
            alpha = (1.0 - t) * mpi.alphas[i] + t * mpi.alphas[i + 1]
        px = np.broadcast_to((k.fx * xs / z + k.cx)[:, None], (nx, ny))
        py = np.broadcast_to((k.fy * ys / z + k.cy)[None, :], (nx, ny))
        plan = _sample_plan(k.height, k.width, px, py, "zero")
        grid[:, :, iz] = _plan_gather(alpha, plan)[..., 0]
    spacing = np.array(
        [
            (x_hi - x_lo) / (nx - 1) if nx > 1 else 0.0,
            (y_hi - y_lo) / (ny - 1) if ny > 1 else 0.0,
            (d_last - d_first) / (nz - 1),
        ]
    )
    origin = np.array([x_lo, y_lo, d_first])
    return OccupancyVolume(np.clip(grid, 0.0, 1.0), spacing, origin)


def marching_cubes(volume: OccupancyVolume, iso: float = 0.5) -> TriangleMesh:
    """Extract the iso-surface as a triangle mesh in world coordinates.

    Standard 256-case marching cubes with vertices linearly interpolated
    along cell edges. Fields that are 0 on the volume boundary yield
    watertight surfaces (every edge shared by exactly two triangles). An
    empty mesh is returned when the field never crosses iso.
    """
    if not 0.0 < iso < 1.0:
        raise ValueError("iso must lie strictly between 0 and 1")
    grid = volume.grid
    if min(grid.shape) < 2:
        return empty_mesh()
    if not (float(grid.min()) < iso < float(grid.max())):
        return empty_mesh()
    spacing = np.where(volume.spacing > 0, volume.spacing, 1.0)
    verts, faces, _, _ = measure.marching_cubes(grid, level=iso, spacing=tuple(spacing))
    verts = verts + volume.origin
    faces = faces.astype(np.int64)
    # iso values equal to data extremes collapse interpolated vertices onto
    # lattice corners; drop the resulting zero-area faces and compact
    areas = _triangle_areas(verts, faces)
    keep = areas > _DEGENERATE_AREA
    if not keep.all():
        faces = faces[keep]
        if faces.size == 0:
            return empty_mesh()
        used = np.unique(faces)
        remap = np.zeros(len(verts), dtype=np.int64)
        remap[used] = np.arange(used.size)
        verts = verts[used]
        faces = remap[faces]
    return TriangleMesh(verts, faces)


def _vertex_neighbors(mesh: TriangleMesh):
    """Unique undirected edges as two aligned index arrays (both directions)."""
    t = mesh.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    edges = np.unique(np.sort(edges, axis=1), axis=0)
    return np.concatenate([edges[:, 0], edges[:, 1]]), np.concatenate([edges[:, 1], edges[:, 0]])


def laplacian_smooth(mesh: TriangleMesh, iterations: int, factor: float = 0.5) -> TriangleMesh:
    """Move each vertex toward its neighbor centroid by `factor` per iteration.

    Connectivity and vertex count are unchanged; vertices without neighbors
    stay put.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0 or mesh.is_empty:
        return mesh
    src, dst = _vertex_neighbors(mesh)
    counts = np.zeros(len(mesh.vertices))
    np.add.at(counts, src, 1.0)
    movable = counts > 0
    safe = np.maximum(counts, 1.0)[:, None]
    verts = mesh.vertices.copy()
    for _ in range(iterations):
        sums = np.zeros_like(verts)
        np.add.at(sums, src, verts[dst])
        centroid = sums / safe
        verts = np.where(movable[:, None], verts + factor * (centroid - verts), verts)
    return TriangleMesh(verts, mesh.triangles)


def surface_area(mesh: TriangleMesh) -> float:
    if mesh.is_empty:
        return 0.0
    return float(np.sum(_triangle_areas(mesh.vertices, mesh.triangles)))


def _edge_use_counts(mesh: TriangleMesh) -> np.ndarray:
    t = mesh.triangles
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    _, counts = np.unique(np.sort(edges, axis=1), axis=0, return_counts=True)
    return counts

def is_watertight(mesh: TriangleMesh) -> bool:
    """True when every edge is shared by exactly two triangles."""
    if mesh.is_empty:
        return False
    return bool(np.all(_edge_use_counts(mesh) == 2))


def euler_characteristic(mesh: TriangleMesh) -> int:
    """V - E + F over the vertices actually referenced by triangles."""
    if mesh.is_empty:
        return 0
    t = mesh.triangles
    v = len(np.unique(t))
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    e = len(np.unique(np.sort(edges, axis=1), axis=0))
    return v - e + len(t)


def export_obj(mesh: TriangleMesh, path) -> None:
    """Write an ASCII OBJ: `v x y z` then 1-based `f i j k` lines.

    Coordinates use repr-exact formatting (%.17g), so a written file parses
    back to bit-identical vertices and re-exports to identical bytes.
    """
    lines = [f"# vertices {len(mesh.vertices)} triangles {len(mesh.triangles)}"]
    for v in mesh.vertices:
        lines.append("v %.17g %.17g %.17g" % (v[0], v[1], v[2]))
    for t in mesh.triangles:
        lines.append("f %d %d %d" % (t[0] + 1, t[1] + 1, t[2] + 1))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_obj(path) -> TriangleMesh:
    """Read the OBJ subset written by export_obj (v and f lines)."""
    verts = []
    tris = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts or parts[0] == "#":
                continue
            if parts[0] == "v":
                if len(parts) != 4:
                    raise ValueError(f"line {lineno}: malformed vertex: {raw.rstrip()!r}")
                verts.append([float(p) for p in parts[1:]])
            elif parts[0] == "f":
                if len(parts) != 4:
                    raise ValueError(f"line {lineno}: malformed face: {raw.rstrip()!r}")
                tris.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
            else:
                raise ValueError(f"line {lineno}: unsupported OBJ element {parts[0]!r}")
    if not verts:
        return empty_mesh()
    return TriangleMesh(np.asarray(verts, dtype=np.float64), np.asarray(tris, dtype=np.int64))
