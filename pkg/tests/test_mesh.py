"""Tests for occupancy volumes, marching cubes, smoothing, and OBJ I/O."""

import numpy as np
import pytest

from mpikit.core import MultiplaneImage
from mpikit.mesh import (
    OccupancyVolume,
    TriangleMesh,
    build_occupancy,
    empty_mesh,
    euler_characteristic,
    export_obj,
    is_watertight,
    laplacian_smooth,
    load_obj,
    marching_cubes,
    surface_area,
)
from mpikit.warp import bilinear_sample

from helpers import random_mpi, square_intrinsics


def sphere_volume(n=64, radius=0.35, ramp_voxels=2.0):
    """Linear-ramp occupancy of a sphere: exactly 0.5 at distance `radius`."""
    h = 1.0 / (n - 1)
    axis = np.linspace(-0.5, 0.5, n)
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    dist = np.sqrt(x * x + y * y + z * z)
    field = np.clip(0.5 + (radius - dist) / (2.0 * ramp_voxels * h), 0.0, 1.0)
    return OccupancyVolume(field, np.full(3, h), np.full(3, -0.5))


class TestOccupancyVolumeType:
    def test_validation(self):
        ok = OccupancyVolume(np.zeros((2, 2, 2)), np.ones(3), np.zeros(3))
        assert ok.shape == (2, 2, 2)
        with pytest.raises(ValueError, match="3D"):
            OccupancyVolume(np.zeros((2, 2)), np.ones(3), np.zeros(3))
        with pytest.raises(ValueError, match=r"\[0, 1\]"):
            OccupancyVolume(np.full((2, 2, 2), 1.5), np.ones(3), np.zeros(3))
        with pytest.raises(ValueError, match="3-vectors"):
            OccupancyVolume(np.zeros((2, 2, 2)), np.ones(2), np.zeros(3))
        with pytest.raises(ValueError, match="non-negative"):
            OccupancyVolume(np.zeros((2, 2, 2)), -np.ones(3), np.zeros(3))

    def test_translated_moves_origin_only(self):
        vol = OccupancyVolume(np.zeros((2, 2, 2)), np.ones(3), np.zeros(3))
        moved = vol.translated([1.0, 2.0, 3.0])
        assert np.allclose(moved.origin, [1.0, 2.0, 3.0])
        assert np.array_equal(moved.grid, vol.grid)


class TestTriangleMeshType:
    def test_validation(self):
        v = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
        t = np.array([[0, 1, 2]])
        mesh = TriangleMesh(v, t)
        assert not mesh.is_empty
        with pytest.raises(ValueError, match="out of range"):
            TriangleMesh(v, np.array([[0, 1, 3]]))
        with pytest.raises(ValueError, match="degenerate"):
            TriangleMesh(v, np.array([[0, 1, 1]]))

    def test_empty_mesh(self):
        m = empty_mesh()
        assert m.is_empty
        assert surface_area(m) == 0.0
        assert euler_characteristic(m) == 0
        assert not is_watertight(m)


class TestBuildOccupancy:
    def test_single_opaque_plane_slices_are_one(self):
        color = np.zeros((8, 8, 3))
        alphas = (np.ones((8, 8, 1)),)
        mpi = MultiplaneImage(color, alphas, (1.2,), 1.0, 1.5)
        vol = build_occupancy(mpi, square_intrinsics(8), (5, 5, 3))
        assert np.allclose(vol.grid, 1.0, atol=1e-12)
        assert vol.origin[2] == 1.2

    def test_midway_slice_averages_adjacent_planes(self):
        # Center grid point stays inside the image at every depth; corners of
        # shallow slices fall outside the frustum and read 0.
        color = np.zeros((4, 4, 3))
        a, b = 0.2, 0.8
        alphas = (np.full((4, 4, 1), a), np.full((4, 4, 1), b))
        mpi = MultiplaneImage(color, alphas, (1.0, 2.0), 0.9, 2.1)
        vol = build_occupancy(mpi, square_intrinsics(4), (5, 5, 3))
        assert vol.grid[2, 2, 1] == pytest.approx((a + b) / 2, abs=1e-12)
        assert vol.grid[2, 2, 0] == pytest.approx(a, abs=1e-12)
        assert vol.grid[2, 2, 2] == pytest.approx(b, abs=1e-12)
        assert np.allclose(vol.grid[:, :, 2], b, atol=1e-12)
        assert vol.grid[0, 0, 0] == 0.0

    def test_plane_depth_slice_matches_bilinear_sample(self):
        # Linearly spaced plane depths so grid slices land exactly on planes.
        rng = np.random.default_rng(0)
        h, L = 12, 5
        color = rng.uniform(size=(h, h, 3))
        alphas = tuple(rng.uniform(0.0, 1.0, size=(h, h, 1)) for _ in range(L))
        depths = tuple(np.linspace(1.0, 2.0, L))
        mpi = MultiplaneImage(color, alphas, depths, 0.9, 2.1)
        k = square_intrinsics(h)
        nx, ny, nz = 7, 6, L
        vol = build_occupancy(mpi, k, (nx, ny, nz))
        d_last = depths[-1]
        xs = np.linspace((0 - k.cx) / k.fx * d_last, (h - 1 - k.cx) / k.fx * d_last, nx)
        ys = np.linspace((0 - k.cy) / k.fy * d_last, (h - 1 - k.cy) / k.fy * d_last, ny)
        for iz, z in enumerate(depths):
            px = k.fx * xs[:, None] / z + k.cx
            py = k.fy * ys[None, :] / z + k.cy
            pts = np.stack([np.broadcast_to(px, (nx, ny)), np.broadcast_to(py, (nx, ny))], axis=-1)
            want = bilinear_sample(mpi.alphas[iz], pts, oob="zero")[..., 0]
            assert np.allclose(vol.grid[:, :, iz], want, atol=1e-6)

    def test_near_slices_vanish_outside_frustum(self):
        # At the near plane the far-plane footprint extends past the image,
        # so corner grid points sample outside and read 0.
        color = np.zeros((8, 8, 3))
        alphas = (np.ones((8, 8, 1)), np.ones((8, 8, 1)))
        mpi = MultiplaneImage(color, alphas, (0.5, 2.0), 0.4, 2.1)
        vol = build_occupancy(mpi, square_intrinsics(8), (9, 9, 5))
        assert vol.grid[0, 0, 0] == 0.0
        assert vol.grid[4, 4, 0] == 1.0
        assert np.allclose(vol.grid[:, :, -1], 1.0, atol=1e-12)

    def test_grid_shape_validation(self):
        mpi = random_mpi(np.random.default_rng(1))
        k = square_intrinsics(16)
        with pytest.raises(ValueError, match="empty grid"):
            build_occupancy(mpi, k, (0, 4, 4))
        with pytest.raises(ValueError, match="z-slices"):
            build_occupancy(mpi, k, (4, 4, 1))
        with pytest.raises(ValueError, match="3 integers"):
            build_occupancy(mpi, k, (4, 4))

    def test_spacing_and_origin_describe_grid(self):
        mpi = random_mpi(np.random.default_rng(2), h=8, num_planes=3)
        k = square_intrinsics(8)
        vol = build_occupancy(mpi, k, (5, 5, 4))
        top = vol.origin + vol.spacing * (np.array(vol.shape) - 1)
        d_last = mpi.depths[-1]
        assert top[0] == pytest.approx((8 - 1 - k.cx) / k.fx * d_last)
        assert top[2] == pytest.approx(d_last)


class TestMarchingCubes:
    def test_uniform_below_iso_is_empty(self):
        vol = OccupancyVolume(np.full((8, 8, 8), 0.2), np.ones(3), np.zeros(3))
        assert marching_cubes(vol, 0.5).is_empty

    def test_sphere_area_and_topology(self):
        radius = 0.35
        mesh = marching_cubes(sphere_volume(64, radius), 0.5)
        want = 4.0 * np.pi * radius**2
        assert abs(surface_area(mesh) - want) / want < 0.05
        assert is_watertight(mesh)
        assert euler_characteristic(mesh) == 2

    def test_sphere_vertices_near_radius(self):
        radius = 0.35
        mesh = marching_cubes(sphere_volume(64, radius), 0.5)
        r = np.linalg.norm(mesh.vertices, axis=1)
        assert np.max(np.abs(r - radius)) < 2.0 / 63

    def test_single_interior_voxel_closed_surface(self):
        field = np.zeros((5, 5, 5))
        field[2, 2, 2] = 1.0
        vol = OccupancyVolume(field, np.ones(3), np.zeros(3))
        mesh = marching_cubes(vol, 0.5)
        assert not mesh.is_empty
        assert is_watertight(mesh)
        assert euler_characteristic(mesh) == 2

    def test_vertices_interpolate_iso_crossings(self):
        vol = sphere_volume(24, 0.3)
        iso = 0.5
        mesh = marching_cubes(vol, iso)
        idx = (mesh.vertices - vol.origin) / vol.spacing
        off_axis = np.abs(idx - np.round(idx))
        frac_axes = (off_axis > 1e-9).sum(axis=1)
        assert np.all(frac_axes <= 1)  # vertices sit on cell edges
        for v_idx in range(0, len(idx), max(1, len(idx) // 200)):
            coord = idx[v_idx]
            axis = int(np.argmax(off_axis[v_idx]))
            if off_axis[v_idx, axis] <= 1e-9:
                lo_idx = tuple(int(round(c)) for c in coord)
                assert abs(vol.grid[lo_idx] - iso) <= 1e-6
                continue
            lo = [int(round(c)) for c in coord]
            lo[axis] = int(np.floor(coord[axis]))
            hi = list(lo)
            hi[axis] += 1
            f0 = vol.grid[tuple(lo)]
            f1 = vol.grid[tuple(hi)]
            t = coord[axis] - lo[axis]
            assert min(f0, f1) - 1e-9 <= iso <= max(f0, f1) + 1e-9
            assert abs(f0 + t * (f1 - f0) - iso) <= 1e-6

    def test_translation_equivariance(self):
        vol = sphere_volume(20, 0.3)
        offset = np.array([0.7, -1.3, 2.4])
        a = marching_cubes(vol.translated(offset), 0.5)
        b = marching_cubes(vol, 0.5)
        assert np.array_equal(a.triangles, b.triangles)
        assert np.allclose(a.vertices, b.vertices + offset, atol=1e-9)

    def test_iso_range_enforced(self):
        vol = sphere_volume(8, 0.3)
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError, match="iso"):
                marching_cubes(vol, bad)

    def test_deterministic(self):
        vol = sphere_volume(16, 0.3)
        a = marching_cubes(vol, 0.5)
        b = marching_cubes(vol, 0.5)
        assert np.array_equal(a.vertices, b.vertices)
        assert np.array_equal(a.triangles, b.triangles)


class TestLaplacianSmooth:
    def test_zero_iterations_identity(self):
        mesh = marching_cubes(sphere_volume(16, 0.3), 0.5)
        out = laplacian_smooth(mesh, 0)
        assert out is mesh

    def test_noisy_sphere_gets_rounder(self):
        rng = np.random.default_rng(3)
        mesh = marching_cubes(sphere_volume(32, 0.35), 0.5)
        noisy_v = mesh.vertices * (1.0 + rng.uniform(-0.03, 0.03, size=(len(mesh.vertices), 1)))
        noisy = TriangleMesh(noisy_v, mesh.triangles)
        smooth = laplacian_smooth(noisy, 10, factor=0.5)
        before = np.std(np.linalg.norm(noisy.vertices, axis=1))
        after = np.std(np.linalg.norm(smooth.vertices, axis=1))
        assert after < before

    def test_connectivity_and_count_unchanged(self):
        mesh = marching_cubes(sphere_volume(16, 0.3), 0.5)
        out = laplacian_smooth(mesh, 3, factor=0.3)
        assert np.array_equal(out.triangles, mesh.triangles)
        assert out.vertices.shape == mesh.vertices.shape

    def test_negative_iterations_rejected(self):
        with pytest.raises(ValueError, match="iterations"):
            laplacian_smooth(empty_mesh(), -1)

    def test_empty_mesh_passthrough(self):
        m = empty_mesh()
        assert laplacian_smooth(m, 5) is m


class TestObjRoundTrip:
    def test_unit_triangle_layout(self, tmp_path):
        mesh = TriangleMesh(
            np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]), np.array([[0, 1, 2]])
        )
        path = tmp_path / "tri.obj"
        export_obj(mesh, path)
        lines = path.read_text().splitlines()
        assert lines[1:] == ["v 0 0 0", "v 1 0 0", "v 0 1 0", "f 1 2 3"]

    def test_empty_mesh_valid_file(self, tmp_path):
        path = tmp_path / "empty.obj"
        export_obj(empty_mesh(), path)
        loaded = load_obj(path)
        assert loaded.is_empty

    def test_sphere_round_trip_byte_stable(self, tmp_path):
        mesh = laplacian_smooth(marching_cubes(sphere_volume(16, 0.3), 0.5), 2)
        p1 = tmp_path / "a.obj"
        p2 = tmp_path / "b.obj"
        export_obj(mesh, p1)
        loaded = load_obj(p1)
        assert np.array_equal(loaded.vertices, mesh.vertices)
        assert np.array_equal(loaded.triangles, mesh.triangles)
        export_obj(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_malformed_lines_rejected(self, tmp_path):
        path = tmp_path / "bad.obj"
        path.write_text("v 1 2\n")
        with pytest.raises(ValueError, match="malformed vertex"):
            load_obj(path)
        path.write_text("vt 0 0\n")
        with pytest.raises(ValueError, match="unsupported"):
            load_obj(path)
        path.write_text("f 1 2\n")
        with pytest.raises(ValueError, match="malformed face"):
            load_obj(path)


class TestMpiToMeshPipeline:
    def test_surface_like_mpi_yields_mesh(self):
        # Build an MPI whose alphas step from 0 to 1 behind a fixed depth;
        # the extracted surface should sit near that depth.
        h, L = 16, 8
        depths = np.linspace(1.0, 2.0, L)
        surface_depth = 1.5
        color = np.full((h, h, 3), 0.5)
        alphas = tuple(
            np.full((h, h, 1), 1.0 if d >= surface_depth else 0.001) for d in depths
        )
        mpi = MultiplaneImage(color, alphas, tuple(depths), 0.9, 2.1)
        k = square_intrinsics(h)
        vol = build_occupancy(mpi, k, (24, 24, 24))
        mesh = marching_cubes(vol, 0.5)
        assert not mesh.is_empty
        front = mesh.vertices[:, 2].min()
        assert 1.3 < front < 1.6
