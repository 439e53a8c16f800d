import numpy as np
import pytest

from mpikit.core import (
    CameraIntrinsics,
    CameraPose,
    MultiplaneImage,
    PlaneGeometry,
    normalize_depth,
    place_planes_disparity,
)


def make_mpi(h=8, L=3, rng=None):
    rng = rng or np.random.default_rng(0)
    color = rng.uniform(0, 1, (h, h, 3))
    alphas = [rng.uniform(0, 1, (h, h, 1)) for _ in range(L)]
    depths = place_planes_disparity(L, 0.95, 1.12)
    return MultiplaneImage(color, tuple(alphas), tuple(depths), 0.95, 1.12)


class TestIntrinsics:
    def test_matrix_layout(self):
        k = CameraIntrinsics(100.0, 110.0, 32.0, 30.0, 64, 60)
        m = k.matrix()
        assert m[0, 0] == 100.0 and m[1, 1] == 110.0
        assert m[0, 2] == 32.0 and m[1, 2] == 30.0
        assert m[2, 2] == 1.0 and m[0, 1] == 0.0

    def test_inverse_is_exact(self):
        k = CameraIntrinsics(123.4, 98.7, 31.5, 29.5, 64, 60)
        kk = k.matrix() @ k.inverse_matrix()
        assert np.allclose(kk, np.eye(3), atol=1e-14)

    def test_scaled_halves_everything(self):
        k = CameraIntrinsics(100.0, 100.0, 32.0, 32.0, 64, 64)
        s = k.scaled(32, 32)
        assert s.fx == 50.0 and s.cy == 16.0 and s.width == 32

    def test_rejects_nonpositive_focal(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(0.0, 1.0, 0.0, 0.0, 4, 4)


class TestPose:
    def test_identity(self):
        p = CameraPose.identity()
        assert p.is_identity()
        assert np.array_equal(p.matrix4(), np.eye(4))

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            CameraPose(np.eye(3) * 1.01, np.zeros(3))

    def test_rejects_reflection(self):
        r = np.diag([1.0, 1.0, -1.0])
        with pytest.raises(ValueError):
            CameraPose(r, np.zeros(3))

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            w, x, y, z = q
            r = np.array(
                [
                    [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                    [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                    [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
                ]
            )
            p = CameraPose(r, rng.normal(size=3))
            pts = rng.normal(size=(10, 3))
            back = p.inverse().transform(p.transform(pts))
            assert np.allclose(back, pts, atol=1e-12)

    def test_flattened16_row_major(self):
        p = CameraPose(np.eye(3), np.array([1.0, 2.0, 3.0]))
        f = p.flattened16()
        assert f.shape == (16,)
        assert f[3] == 1.0 and f[7] == 2.0 and f[11] == 3.0
        assert f[15] == 1.0

    def test_immutability(self):
        p = CameraPose.identity()
        with pytest.raises(ValueError):
            p.rotation[0, 0] = 2.0


class TestPlaneGeometry:
    def test_valid(self):
        g = PlaneGeometry(np.array([0.0, 0.0, 1.0]), 1.0)
        assert g.b == 1.0

    def test_rejects_non_unit_normal(self):
        with pytest.raises(ValueError):
            PlaneGeometry(np.array([0.0, 0.0, 2.0]), 1.0)

    def test_rejects_plane_behind_camera(self):
        with pytest.raises(ValueError, match="behind"):
            PlaneGeometry(np.array([0.0, 0.0, 1.0]), -0.5)


class TestMultiplaneImage:
    def test_valid_construction(self):
        m = make_mpi()
        assert m.num_planes == 3
        assert m.resolution == 8

    def test_rejects_out_of_range_alpha(self):
        m = make_mpi()
        bad = np.array(m.alphas[0])
        bad[0, 0, 0] = 1.5
        with pytest.raises(ValueError, match="alpha 0"):
            MultiplaneImage(m.color, (bad,) + m.alphas[1:], m.depths, m.near, m.far)

    def test_rejects_unsorted_depths(self):
        m = make_mpi()
        with pytest.raises(ValueError, match="increasing"):
            MultiplaneImage(
                m.color, m.alphas, (m.depths[1], m.depths[0], m.depths[2]), m.near, m.far
            )

    def test_rejects_depths_outside_range(self):
        m = make_mpi()
        with pytest.raises(ValueError, match="within"):
            MultiplaneImage(m.color, m.alphas, m.depths, 1.0, 1.12)

    def test_rejects_non_square_color(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ValueError, match="square"):
            MultiplaneImage(
                rng.uniform(0, 1, (4, 6, 3)),
                (np.zeros((4, 4, 1)),),
                (1.0,),
                1.0,
                1.0,
            )

    def test_arrays_are_read_only(self):
        m = make_mpi()
        with pytest.raises(ValueError):
            m.color[0, 0, 0] = 0.5
        with pytest.raises(ValueError):
            m.alphas[0][0, 0, 0] = 0.5

    def test_source_mutation_does_not_leak(self):
        rng = np.random.default_rng(2)
        color = rng.uniform(0, 1, (4, 4, 3))
        alpha = rng.uniform(0, 1, (4, 4, 1))
        m = MultiplaneImage(color, (alpha,), (1.0,), 1.0, 1.0)
        color[0, 0, 0] = 0.123
        assert m.color[0, 0, 0] != 0.123

    def test_plane_color_default_is_shared(self):
        m = make_mpi()
        for i in range(m.num_planes):
            assert m.plane_color(i) is m.color

    def test_plane_color_background_override(self):
        m = make_mpi()
        bg = np.zeros((8, 8, 3))
        m2 = MultiplaneImage(m.color, m.alphas, m.depths, m.near, m.far, background=bg)
        assert np.array_equal(m2.plane_color(m2.num_planes - 1), bg)
        assert m2.plane_color(0) is m2.color

    def test_background_shape_checked(self):
        m = make_mpi()
        with pytest.raises(ValueError, match="background"):
            MultiplaneImage(
                m.color, m.alphas, m.depths, m.near, m.far, background=np.zeros((4, 4, 3))
            )


class TestPlanePlacement:
    def test_two_planes_are_endpoints(self):
        d = place_planes_disparity(2, 0.95, 1.12)
        assert np.allclose(d, [0.95, 1.12], atol=1e-15)

    def test_three_planes_harmonic_midpoint(self):
        # Middle plane sits at the disparity midpoint: 1/d = (1/1 + 1/2) / 2.
        d = place_planes_disparity(3, 1.0, 2.0)
        assert np.allclose(d, [1.0, 4.0 / 3.0, 2.0], atol=1e-12)

    def test_single_plane(self):
        d = place_planes_disparity(1, 0.95, 1.12)
        assert d.shape == (1,) and d[0] == 0.95

    @pytest.mark.parametrize("L", [2, 5, 32, 96])
    def test_disparity_is_arithmetic(self, L):
        d = place_planes_disparity(L, 0.95, 1.12)
        disp = 1.0 / d
        steps = np.diff(disp)
        assert np.all(np.abs(steps - steps[0]) <= 1e-12 * abs(steps[0]))

    @pytest.mark.parametrize("L", [2, 7, 32])
    def test_monotone_increasing_within_range(self, L):
        d = place_planes_disparity(L, 2.55, 2.8)
        assert np.all(np.diff(d) > 0)
        assert d[0] == pytest.approx(2.55) and d[-1] == pytest.approx(2.8)

    def test_rejects_bad_range(self):
        with pytest.raises(ValueError):
            place_planes_disparity(3, 1.2, 1.0)
        with pytest.raises(ValueError):
            place_planes_disparity(3, 0.0, 1.0)
        with pytest.raises(ValueError):
            place_planes_disparity(0, 1.0, 2.0)


class TestNormalizeDepth:
    def test_endpoints(self):
        assert normalize_depth(0.95, 0.95, 1.12) == 0.0
        assert normalize_depth(1.12, 0.95, 1.12) == 1.0

    def test_midpoint(self):
        assert normalize_depth(1.5, 1.0, 2.0) == pytest.approx(0.5)

    def test_degenerate_single_plane(self):
        assert normalize_depth(1.0, 1.0, 1.0) == 0.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            normalize_depth(0.5, 1.0, 2.0)

    def test_mpi_normalized_depths(self):
        m = make_mpi(L=4)
        nd = m.normalized_depths()
        assert nd[0] == 0.0 and nd[-1] == 1.0
        assert np.all(np.diff(nd) > 0)
