"""Acceptance gate: every shipped guarantee, each at its stated tolerance.

One test per criterion, each tagged with a `criterion` marker; the conftest
prints a PASS/FAIL line per criterion after the run. Tolerances and budgets
here are contractual - do not loosen them to make a failure go away.
"""

import time

import numpy as np
import pytest

from mpikit.composite import over_composite, render, shading_schedule
from mpikit.container import synth_scene, translation_arc_poses
from mpikit.core import CameraPose, MultiplaneImage, place_planes_disparity
from mpikit.genstack import (
    LossParams,
    ToyGenConfig,
    ToyGenerator,
    channel_dim,
    depth_to_alpha,
    gan_loss_terms,
    nonsaturating_score,
    truncate_style,
)
from mpikit.grad import finite_diff_check, kink_skip_masks, render_backward
from mpikit.mesh import (
    OccupancyVolume,
    euler_characteristic,
    is_watertight,
    marching_cubes,
    surface_area,
)
from mpikit.warp import plane_homography, plane_in_target_frame

from helpers import random_mpi, random_pose, square_intrinsics

NEAR, FAR = 0.95, 1.12


@pytest.mark.criterion(
    "homography matches ray-plane-projection oracle "
    "(50 poses x 32 planes x 1000 px, <=1e-5 px, <10 s)"
)
def test_homography_matches_ray_plane_oracle():
    rng = np.random.default_rng(20240901)
    depths = place_planes_disparity(32, NEAR, FAR)
    h = 64
    k_cano = square_intrinsics(h)
    k_tgt = square_intrinsics(h, focal=1.1 * h)
    k_tgt_inv = np.linalg.inv(k_tgt.matrix())
    start = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        pose = random_pose(rng, max_angle_deg=20.0, max_trans=0.2 * NEAR)
        pixels = rng.uniform(-0.5, h - 0.5, size=(1000, 2))
        homogeneous = np.concatenate([pixels, np.ones((1000, 1))], axis=1)
        rays = homogeneous @ k_tgt_inv.T
        for d in depths:
            geom = plane_in_target_frame(d, pose)
            mapped = plane_homography(k_cano, k_tgt, pose, geom).apply(pixels)
            # oracle: back-project the pixel ray, intersect the plane,
            # move the hit point to the canonical frame, project
            scale = geom.b / (rays @ geom.normal)
            x_tgt = scale[:, None] * rays
            x_cano = x_tgt @ pose.rotation.T + pose.translation
            proj = x_cano @ k_cano.matrix().T
            oracle = proj[:, :2] / proj[:, 2:3]
            worst = max(worst, float(np.abs(mapped - oracle).max()))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-5, f"worst pixel error {worst:.2e}"
    assert elapsed < 10.0, f"took {elapsed:.1f} s"


@pytest.mark.criterion(
    "canonical render equals direct compositing bitwise; "
    "opaque first plane returns the color image exactly"
)
def test_identity_reduction():
    rng = np.random.default_rng(7)
    h, num = 32, 8
    mpi = random_mpi(rng, h=h, num_planes=num)
    k = square_intrinsics(h)
    out = render(mpi, k, k, CameraPose.identity())
    planes = [(mpi.plane_color(i), mpi.alphas[i]) for i in range(num)]
    direct = over_composite(planes, values=list(mpi.depths))
    assert np.array_equal(out.color, direct.color)
    assert np.array_equal(out.depth, direct.depth)
    assert np.array_equal(out.transmittance, direct.transmittance)

    alphas = (np.ones((h, h, 1)),) + mpi.alphas[1:]
    opaque_front = MultiplaneImage(mpi.color, alphas, mpi.depths, NEAR, FAR)
    out2 = render(opaque_front, k, k, CameraPose.identity())
    assert np.array_equal(out2.color, opaque_front.color)


@pytest.mark.criterion(
    "partition of unity: weights + transmittance = 1 per pixel "
    "(100 stacks, L in {1,2,8,32}, +-1e-6)"
)
def test_partition_of_unity():
    rng = np.random.default_rng(11)
    h = 16
    checked = 0
    for num in (1, 2, 8, 32):
        for _ in range(25):
            stack = [
                (np.zeros((h, h, 3)), rng.uniform(0.0, 1.0, (h, h, 1)))
                for _ in range(num)
            ]
            # compositing ones as the value map sums the per-plane weights
            out = over_composite(stack, values=[1.0] * num)
            total = out.depth + out.transmittance
            assert np.abs(total - 1.0).max() <= 1e-6
            checked += 1
    assert checked == 100


@pytest.mark.criterion(
    "analytic render gradients match central finite differences "
    "(20 seeds, 8x8 L=4, rel <=1e-3 off kinks, <60 s)"
)
def test_gradients_match_finite_differences():
    size, num = 8, 4
    depths = tuple(place_planes_disparity(num, NEAR, FAR))
    k = square_intrinsics(size)
    start = time.perf_counter()
    for seed in range(20):
        rng = np.random.default_rng(seed)
        mpi = MultiplaneImage(
            rng.uniform(0.05, 0.95, (size, size, 3)),
            tuple(rng.uniform(0.05, 0.95, (size, size, 1)) for _ in range(num)),
            depths,
            NEAR,
            FAR,
        )
        pose = random_pose(rng, max_angle_deg=5.0, max_trans=0.05)

        params = {"color": mpi.color}
        for i, a in enumerate(mpi.alphas):
            params[f"alpha_{i}"] = a

        def forward(p):
            rebuilt = MultiplaneImage(
                p["color"],
                tuple(p[f"alpha_{i}"] for i in range(num)),
                depths,
                NEAR,
                FAR,
            )
            return float(np.mean(render(rebuilt, k, k, pose).color))

        upstream = np.full((size, size, 3), 1.0 / (size * size * 3))
        grads = render_backward(mpi, k, k, pose, upstream)
        analytic = {"color": grads.d_loss_d_color}
        for i, g in enumerate(grads.d_loss_d_alpha):
            analytic[f"alpha_{i}"] = g
        skip = kink_skip_masks(mpi, k, k, pose)
        report = finite_diff_check(
            forward, params, analytic, h=1e-5, tol=1e-3, skip=skip
        )
        assert report.passed, f"seed {seed}:\n{report.format_table()}"
    elapsed = time.perf_counter() - start
    assert elapsed < 60.0, f"took {elapsed:.1f} s"


@pytest.mark.criterion(
    "depth->alpha->composite round trip within eps + half plane spacing "
    "(eps in {0.3,0.1,0.05} of the depth range, 64 planes)"
)
def test_depth_to_alpha_round_trip():
    span = FAR - NEAR
    h = 32
    ys, xs = np.meshgrid(
        np.linspace(0.0, 2.0 * np.pi, h), np.linspace(0.0, 2.0 * np.pi, h), indexing="ij"
    )
    # smooth surface kept inside the middle of the volume so every ramp,
    # including the widest (0.3 span), saturates before the far plane
    depth = NEAR + span * (0.5 + 0.15 * np.sin(xs) * np.cos(ys))
    planes = np.linspace(NEAR, FAR, 64)
    spacing = planes[1] - planes[0]
    for frac in (0.3, 0.1, 0.05):
        eps = frac * span
        alphas = depth_to_alpha(depth, planes, eps)
        stack = [(np.zeros((h, h, 3)), a) for a in alphas]
        out = over_composite(stack, values=list(planes))
        assert out.transmittance.max() <= 1e-12  # surface fully opaque from behind
        err = np.abs(out.depth - depth).max()
        assert err <= eps + spacing / 2.0, f"eps={eps:.4f}: error {err:.5f}"


@pytest.mark.criterion(
    "parallax law: near/far disk displacement ratio equals b_far/b_near "
    "(+-5 deg arc, +-2%)"
)
def test_parallax_displacement_ratio():
    res = 128
    scene = synth_scene("layered-disks", {"resolution": res, "num_disks": 2}, seed=0)
    mpi, k = scene.mpi, scene.intrinsics
    traj = translation_arc_poses(max_angle_deg=5.0, count=3, pivot_depth=1.035)
    cols, rows = np.meshgrid(
        np.arange(res, dtype=np.float64), np.arange(res, dtype=np.float64)
    )

    def centroid(image, color):
        hit = np.linalg.norm(image - color, axis=-1) < 0.35
        assert hit.sum() > 50, "disk not found in frame"
        return np.array([cols[hit].mean(), rows[hit].mean()])

    disk_colors = [
        scene.mpi.color[scene.mpi.alphas[i][..., 0] > 0.5].mean(axis=0)
        for i in range(2)
    ]
    frames = [render(mpi, k, k, pose).color for pose, _ in traj.poses]
    base = [centroid(frames[1], c) for c in disk_colors]  # middle frame: canonical

    # average the two opposite-sign sweeps; the tiny common t_z term cancels
    displacement = []
    for i, color in enumerate(disk_colors):
        moves = [np.linalg.norm(centroid(frames[j], color) - base[i]) for j in (0, 2)]
        displacement.append(0.5 * (moves[0] + moves[1]))

    t_z = traj.poses[0][0].translation[2]
    b_near = mpi.depths[0] - t_z
    b_far = mpi.depths[1] - t_z
    measured = displacement[0] / displacement[1]
    expected = b_far / b_near
    assert abs(measured / expected - 1.0) <= 0.02, (
        f"measured ratio {measured:.4f}, expected {expected:.4f}"
    )


@pytest.mark.criterion("shading schedule spot values at iterations {500, 1500, 5000}")
def test_shading_schedule_spot_values():
    assert shading_schedule(500) == (1.0, 0.0)
    assert shading_schedule(1500) == (0.95, 0.05)
    assert shading_schedule(5000) == (0.9, 0.1)
    # plateau boundaries and linearity between them
    assert shading_schedule(1000) == (1.0, 0.0)
    assert shading_schedule(2000) == (0.9, 0.1)
    k_a, k_d = shading_schedule(1250)
    assert (k_a, k_d) == pytest.approx((0.975, 0.025), abs=1e-15)


@pytest.mark.criterion(
    "loss formulas: f(0) = -log 2 (1e-12), stable at |x| = 1e4, "
    "R1 weight 10 adds exactly lambda |grad|^2 for a linear discriminator"
)
def test_loss_formulas():
    assert abs(float(nonsaturating_score(0.0)) + np.log(2.0)) <= 1e-12
    big = nonsaturating_score(np.array([1e4, -1e4]))
    assert np.isfinite(big).all()
    assert abs(big[0]) < 1e-300  # f(+1e4): indistinguishable from 0, not NaN
    assert big[1] == pytest.approx(-1e4, rel=1e-12)

    # linear discriminator D(x) = w.x + b has gradient w everywhere, so the
    # penalty contribution must be exactly r1_weight * |w|^2 per real sample
    rng = np.random.default_rng(3)
    w = rng.normal(size=5)
    xs = rng.normal(size=(4, 5))
    logits = xs @ w + 0.7
    gnsq = np.full(4, float(w @ w))
    fake = rng.normal(size=4)
    with_r1 = gan_loss_terms(fake, logits, gnsq, LossParams(r1_weight=10.0))
    without = gan_loss_terms(fake, logits, np.zeros(4), LossParams(r1_weight=10.0))
    assert with_r1 - without == pytest.approx(10.0 * float(w @ w), rel=1e-12)


@pytest.mark.criterion(
    "style truncation: psi=1 identity, psi=0 returns the mean, "
    "affine in psi (collinearity within 1e-12)"
)
def test_truncation_properties():
    rng = np.random.default_rng(5)
    omega = rng.normal(size=64)
    omega_bar = rng.normal(size=64)
    assert np.array_equal(truncate_style(omega, omega_bar, 1.0), omega)
    assert np.array_equal(truncate_style(omega, omega_bar, 0.0), omega_bar)
    lo = truncate_style(omega, omega_bar, 0.25)
    mid = truncate_style(omega, omega_bar, 0.5)
    hi = truncate_style(omega, omega_bar, 0.75)
    assert np.abs(mid - 0.5 * (lo + hi)).max() <= 1e-12


@pytest.mark.criterion(
    "marching cubes on a 64^3 sphere: watertight, area within 5% of 4 pi r^2, "
    "Euler characteristic 2, <5 s"
)
def test_marching_cubes_sphere():
    n, radius = 64, 0.35
    h = 1.0 / (n - 1)
    axis = np.linspace(-0.5, 0.5, n)
    x, y, z = np.meshgrid(axis, axis, axis, indexing="ij")
    dist = np.sqrt(x * x + y * y + z * z)
    field = np.clip(0.5 + (radius - dist) / (4.0 * h), 0.0, 1.0)
    volume = OccupancyVolume(field, np.full(3, h), np.full(3, -0.5))
    start = time.perf_counter()
    mesh = marching_cubes(volume, iso=0.5)
    elapsed = time.perf_counter() - start
    assert is_watertight(mesh)
    assert euler_characteristic(mesh) == 2
    analytic = 4.0 * np.pi * radius**2
    assert abs(surface_area(mesh) - analytic) / analytic <= 0.05
    assert elapsed < 5.0, f"took {elapsed:.1f} s"


@pytest.mark.criterion(
    "plane-count flexibility: L=32 and L=96 share the color image bitwise "
    "and canonical renders differ by MAD <= 0.02"
)
def test_plane_count_flexibility():
    config = ToyGenConfig(resolution=64, alpha_resolution=64, seed=13)
    generator = ToyGenerator(config)
    rng = np.random.default_rng(29)
    z = rng.normal(size=config.latent_dim)
    mpi_32 = generator.generate(z, num_planes=32)
    mpi_96 = generator.generate(z, num_planes=96)
    assert np.array_equal(mpi_32.color, mpi_96.color)
    k = square_intrinsics(config.resolution)
    out_32 = render(mpi_32, k, k, CameraPose.identity()).color
    out_96 = render(mpi_96, k, k, CameraPose.identity()).color
    mad = float(np.abs(out_32 - out_96).mean())
    assert mad <= 0.02, f"mean absolute difference {mad:.5f}"


@pytest.mark.criterion("channel rule min(2^15/h, 512): h=4->512, h=256->128, h=1024->32")
def test_channel_rule():
    assert channel_dim(4) == 512
    assert channel_dim(256) == 128
    assert channel_dim(1024) == 32


@pytest.mark.suite_budget
@pytest.mark.criterion("full primary suite wall clock < 180 s")
def test_suite_wall_clock(request):
    elapsed = time.perf_counter() - request.config._suite_start
    assert elapsed < 180.0, f"suite took {elapsed:.1f} s"
