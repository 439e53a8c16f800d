"""Command-line front end for the MPI toolkit.

Subcommands: render (trajectory -> images), orbit (write a look-at
trajectory), gradcheck (finite-difference verification of the analytic
gradients), mesh (container -> OBJ), synth (procedural scene -> container),
toygen (seeded toy generator -> container).

Exit codes are a frozen contract: 0 success, 1 verification or runtime
failure, 2 usage error. All angle flags take degrees; conversion to radians
happens at this boundary. Every command is deterministic for fixed flags, so
running one twice produces byte-identical outputs.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from mpikit.composite import ShadingParams, apply_shading, lighting_direction, normal_map, render
from mpikit.container import (
    Trajectory,
    _default_intrinsics,
    _write_png,
    load_mpi,
    load_trajectory,
    orbit_poses,
    save_mpi,
    save_trajectory,
    synth_scene,
)
from mpikit.core import CameraIntrinsics, CameraPose, MultiplaneImage, place_planes_disparity
from mpikit.genstack import ToyGenConfig, ToyGenerator, parse_toy_config
from mpikit.grad import finite_diff_check, kink_skip_masks, render_backward
from mpikit.mesh import build_occupancy, export_obj, laplacian_smooth, marching_cubes
from mpikit.warp import plane_in_target_frame


def _write_depth16(path: Path, depth: np.ndarray) -> None:
    """16-bit depth PNG, normalized; true range goes to a text sidecar."""
    lo = float(depth.min())
    hi = float(depth.max())
    span = hi - lo if hi > lo else 1.0
    _write_png(path, (depth - lo) / span, 16)
    sidecar = path.with_suffix(".txt")
    sidecar.write_text("min %.17g\nmax %.17g\n" % (lo, hi))


def _render_frame(mpi, k, pose, label, out_dir: Path, args, shading) -> None:
    """Render one trajectory frame and write its image files.

    Self-contained per frame so frames can run concurrently; each writes only
    its own label-prefixed files.
    """
    result = render(mpi, k, k, pose)
    color = result.color
    if args.backdrop is not None:
        color = result.over_backdrop(np.asarray(args.backdrop, dtype=np.float64))
    _write_png(out_dir / f"{label}_color.png", color, 8)
    if args.depth or args.normal or args.shaded:
        # pixels no plane covers (possible once the pose tilts the frustum off
        # the canonical image) get the last plane's offset, keeping the depth
        # map positive and the normals defined
        backstop = plane_in_target_frame(mpi.depths[-1], pose).b
        depth = result.depth + result.transmittance * backstop
    if args.depth:
        _write_depth16(out_dir / f"{label}_depth.png", depth)
    if args.normal or args.shaded:
        normals = normal_map(depth, k)
        if args.normal:
            _write_png(out_dir / f"{label}_normal.png", (normals + 1.0) / 2.0, 8)
        if args.shaded:
            shaded = apply_shading(color, normals, shading)
            _write_png(out_dir / f"{label}_shaded.png", shaded, 8)


def cmd_render(args) -> int:
    mpi, k = load_mpi(args.mpi_dir)
    if args.trajectory:
        traj = load_trajectory(args.trajectory)
    else:
        traj = Trajectory(((CameraPose.identity(), "canonical"),))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    shading = None
    if args.shaded:
        light = lighting_direction(math.radians(args.light_h), math.radians(args.light_v))
        shading = ShadingParams(args.ka, args.kd, light)
    if len(traj) == 1:
        pose, label = traj.poses[0]
        _render_frame(mpi, k, pose, label, out_dir, args, shading)
    else:
        with ThreadPoolExecutor(max_workers=min(len(traj), os.cpu_count() or 1)) as pool:
            futures = [
                pool.submit(_render_frame, mpi, k, pose, label, out_dir, args, shading)
                for pose, label in traj.poses
            ]
            for future in futures:
                future.result()
    print(f"rendered {len(traj)} pose(s) to {out_dir}")
    return 0


def cmd_orbit(args) -> int:
    pivot = 0.5 * (args.near + args.far) if args.pivot_depth is None else args.pivot_depth
    traj = orbit_poses(
        tuple(args.yaw_range), tuple(args.pitch_range), args.count, pivot_depth=pivot
    )
    save_trajectory(traj, args.out)
    print(f"wrote {len(traj)}-pose orbit trajectory to {args.out}")
    return 0


def _gradcheck_once(seed: int, size: int, planes: int, inject_bug: bool) -> bool:
    rng = np.random.default_rng(seed)
    color = rng.uniform(0.05, 0.95, size=(size, size, 3))
    alphas = tuple(
        rng.uniform(0.05, 0.95, size=(size, size, 1)) for _ in range(planes)
    )
    depths = place_planes_disparity(planes, 0.95, 1.12)
    mpi = MultiplaneImage(color, alphas, tuple(depths), 0.95, 1.12)
    f = 1.2 * size
    c = (size - 1) / 2.0
    k = CameraIntrinsics(f, f, c, c, size, size)
    angle = math.radians(3.0)
    rot = np.array(
        [
            [math.cos(angle), 0.0, math.sin(angle)],
            [0.0, 1.0, 0.0],
            [-math.sin(angle), 0.0, math.cos(angle)],
        ]
    )
    pose = CameraPose(rot, np.array([0.01, -0.005, 0.004]))

    params = {"color": mpi.color}
    for i, a in enumerate(mpi.alphas):
        params[f"alpha_{i}"] = a

    def rebuild(p):
        return MultiplaneImage(
            p["color"],
            tuple(p[f"alpha_{i}"] for i in range(planes)),
            tuple(depths),
            0.95,
            1.12,
        )

    def forward(p):
        out = render(rebuild(p), k, k, pose)
        return float(np.mean(out.color))

    upstream = np.full((size, size, 3), 1.0 / (size * size * 3))
    grads = render_backward(mpi, k, k, pose, upstream)
    analytic = {"color": grads.d_loss_d_color}
    for i, g in enumerate(grads.d_loss_d_alpha):
        analytic[f"alpha_{i}"] = g
    if inject_bug:
        analytic["color"] = analytic["color"] * 1.01
    skip = kink_skip_masks(mpi, k, k, pose)
    skip = {name: mask for name, mask in skip.items() if name in params}
    report = finite_diff_check(forward, params, analytic, h=1e-5, tol=1e-3, skip=skip)
    print(f"[seed {seed}] size={size} planes={planes}")
    print(report.format_table())
    return report.passed


def cmd_gradcheck(args) -> int:
    ok = True
    for i in range(args.checks):
        ok = _gradcheck_once(args.seed + i, args.size, args.planes, args.self_test) and ok
    if args.self_test:
        if ok:
            print("self-test FAILED: injected gradient bug was not detected")
            return 1
        print("self-test: injected bug detected as expected")
        return 1
    return 0 if ok else 1


def cmd_mesh(args) -> int:
    mpi, k = load_mpi(args.mpi_dir)
    volume = build_occupancy(mpi, k, tuple(args.grid))
    mesh = marching_cubes(volume, args.iso)
    if args.smooth_iterations > 0:
        mesh = laplacian_smooth(mesh, args.smooth_iterations, args.smooth_factor)
    export_obj(mesh, args.out)
    if mesh.is_empty:
        print(f"warning: no iso-{args.iso} surface found; wrote empty mesh", file=sys.stderr)
    print(f"wrote {len(mesh.triangles)} triangles to {args.out}")
    return 0


def cmd_synth(args) -> int:
    params = {}
    for name in ("resolution", "num_disks", "num_spheres", "planes"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.epsilon_frac is not None:
        params["epsilon_frac"] = args.epsilon_frac
    scene = synth_scene(args.kind, params, seed=args.seed)
    save_mpi(scene.mpi, scene.intrinsics, args.out, bit_depth=args.bit_depth, depth_gt=scene.depth)
    print(f"wrote {args.kind} scene ({scene.mpi.num_planes} planes) to {args.out}")
    return 0


def cmd_toygen(args) -> int:
    if args.config:
        config = parse_toy_config(Path(args.config).read_text())
    else:
        config = ToyGenConfig()
    overrides = {}
    if args.planes is not None:
        overrides["num_planes"] = args.planes
    if args.resolution is not None:
        overrides["resolution"] = args.resolution
    if args.alpha_resolution is not None:
        overrides["alpha_resolution"] = args.alpha_resolution
    if args.near is not None:
        overrides["near"] = args.near
    if args.far is not None:
        overrides["far"] = args.far
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        config = dataclasses.replace(config, **overrides)
    generator = ToyGenerator(config)
    z_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    z = z_rng.normal(size=config.latent_dim)
    mpi = generator.generate(z, psi=args.psi)
    save_mpi(mpi, _default_intrinsics(config.resolution), args.out, bit_depth=args.bit_depth)
    print(
        f"wrote toy MPI (seed {config.seed}, {mpi.num_planes} planes, "
        f"{config.resolution}px) to {args.out}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpikit",
        description="Multiplane-image rendering, geometry, and container tools.",
        epilog="Exit codes: 0 success, 1 verification/runtime failure, 2 usage error.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a trajectory from an MPI container")
    p.add_argument("mpi_dir", help="container directory")
    p.add_argument("--trajectory", help="trajectory JSON (default: canonical pose only)")
    p.add_argument("--out", required=True, help="output image directory")
    p.add_argument("--depth", action="store_true", help="also write 16-bit depth maps")
    p.add_argument("--normal", action="store_true", help="also write normal maps")
    p.add_argument("--shaded", action="store_true", help="also write shaded color")
    p.add_argument("--ka", type=float, default=0.9, help="ambient coefficient (shaded)")
    p.add_argument("--kd", type=float, default=0.1, help="diffuse coefficient (shaded)")
    p.add_argument("--light-h", type=float, default=0.0, help="light horizontal angle, degrees")
    p.add_argument("--light-v", type=float, default=11.5, help="light vertical angle, degrees")
    p.add_argument(
        "--backdrop",
        type=float,
        nargs=3,
        metavar=("R", "G", "B"),
        help="composite remaining transmittance over this color",
    )
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("orbit", help="write a look-at orbit trajectory")
    p.add_argument("--yaw-range", type=float, nargs=2, default=[-5.0, 5.0], metavar=("MIN", "MAX"))
    p.add_argument(
        "--pitch-range", type=float, nargs=2, default=[0.0, 0.0], metavar=("MIN", "MAX")
    )
    p.add_argument("--count", type=int, default=9)
    p.add_argument("--near", type=float, default=0.95, help="used for the pivot depth")
    p.add_argument("--far", type=float, default=1.12, help="used for the pivot depth")
    p.add_argument("--pivot-depth", type=float, default=None, help="override (near+far)/2")
    p.add_argument("--out", required=True, help="output trajectory JSON")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("gradcheck", help="finite-difference check of analytic gradients")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=8, help="image resolution")
    p.add_argument("--planes", type=int, default=4)
    p.add_argument("--checks", type=int, default=3, help="number of random configurations")
    p.add_argument(
        "--self-test",
        action="store_true",
        help="inject a known gradient bug; the check must fail (exit 1)",
    )
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("mesh", help="extract an iso-surface mesh from a container")
    p.add_argument("mpi_dir", help="container directory")
    p.add_argument("--grid", type=int, nargs=3, default=[64, 64, 64], metavar=("X", "Y", "Z"))
    p.add_argument("--iso", type=float, default=0.5)
    p.add_argument("--smooth-iterations", type=int, default=0)
    p.add_argument("--smooth-factor", type=float, default=0.5)
    p.add_argument("--out", required=True, help="output OBJ path")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("synth", help="write a synthetic scene container")
    p.add_argument(
        "--kind",
        default="layered-disks",
        choices=["layered-disks", "checker-card", "sphere-billboards"],
    )
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--num-disks", type=int, default=None, dest="num_disks")
    p.add_argument("--num-spheres", type=int, default=None, dest="num_spheres")
    p.add_argument("--planes", type=int, default=None)
    p.add_argument("--epsilon-frac", type=float, default=None, dest="epsilon_frac")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bit-depth", type=int, default=8, choices=[8, 16], dest="bit_depth")
    p.add_argument("--out", required=True, help="output container directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("toygen", help="write a toy-generator MPI container")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--planes", type=int, default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument(
        "--alpha-resolution", type=int, default=None, dest="alpha_resolution"
    )
    p.add_argument("--near", type=float, default=None)
    p.add_argument("--far", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--psi", type=float, default=1.0, help="style truncation strength")
    p.add_argument("--bit-depth", type=int, default=8, choices=[8, 16], dest="bit_depth")
    p.add_argument("--out", required=True, help="output container directory")
    p.set_defaults(func=cmd_toygen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
