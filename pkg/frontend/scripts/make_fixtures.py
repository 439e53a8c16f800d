"""Regenerate the viewer test fixtures from the Python toolkit.

The viewer's tests compare its CPU renderer against images produced by the
`mpikit` CLI, so the fixtures are generated once and checked in. Rerun this
script after changing the container format or the synthetic scenes:

    python3 scripts/make_fixtures.py

Requires the primary package installed (`pip install -e .. --no-build-isolation`).
"""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import cv2
import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def run(*args: str) -> None:
    cmd = [sys.executable, "-m", "mpikit.cli", *args]
    print("+", " ".join(args))
    subprocess.run(cmd, check=True)


def sample_grid(path: Path) -> dict:
    """Decoded-pixel ground truth for the PNG decoder tests.

    Records image geometry, a handful of raw sample values, and the integer
    sum of every sample so a single mismatch anywhere in the decode (filters
    included) is caught.
    """
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw.ndim == 3:
        raw = raw[:, :, ::-1]  # BGR -> RGB
    h, w = raw.shape[:2]
    channels = 1 if raw.ndim == 2 else raw.shape[2]
    points = [(0, 0), (w - 1, 0), (0, h - 1), (w - 1, h - 1), (w // 2, h // 2), (w // 3, 2 * h // 3)]
    samples = []
    for x, y in points:
        value = raw[y, x]
        samples.append([x, y, [int(value)] if channels == 1 else [int(v) for v in value]])
    return {
        "path": [path.parent.name, path.name],
        "width": w,
        "height": h,
        "channels": channels,
        "bit_depth": 16 if raw.dtype == np.uint16 else 8,
        "samples": samples,
        "sample_sum": int(raw.astype(np.uint64).sum()),
    }


def main() -> None:
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    FIXTURES.mkdir(parents=True)

    disks = FIXTURES / "disks"
    spheres32 = FIXTURES / "spheres32"
    spheres32_16 = FIXTURES / "spheres32_16"
    renders = FIXTURES / "renders"
    orbit = FIXTURES / "orbit_pm10.json"

    run("synth", "--kind", "layered-disks", "--resolution", "128", "--seed", "3", "--out", str(disks))
    run(
        "synth", "--kind", "sphere-billboards", "--resolution", "64", "--planes", "32",
        "--seed", "7", "--out", str(spheres32),
    )
    # same scene at 16 bits: its depth-derived alphas are smooth, so the
    # extra precision is visible in the decoded values
    run(
        "synth", "--kind", "sphere-billboards", "--resolution", "64", "--planes", "32",
        "--seed", "7", "--bit-depth", "16", "--out", str(spheres32_16),
    )

    run("orbit", "--yaw-range", "-10", "10", "--count", "2", "--out", str(orbit))
    run("render", str(disks), "--out", str(renders), "--depth", "--shaded")
    run("render", str(disks), "--trajectory", str(orbit), "--out", str(renders))

    expected = [
        sample_grid(disks / "color.png"),
        sample_grid(disks / "alpha_001.png"),
        sample_grid(spheres32_16 / "alpha_016.png"),
        sample_grid(renders / "canonical_color.png"),
        sample_grid(renders / "canonical_depth.png"),
    ]
    (FIXTURES / "expected_pixels.json").write_text(json.dumps(expected, indent=2) + "\n")
    print(f"fixtures written to {FIXTURES}")


if __name__ == "__main__":
    main()
