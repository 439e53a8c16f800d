"""
Depth, normals, and Lambertian shading
======================================

The compositor returns a depth map alongside color. From depth we get a
normal map by central differences on the back-projected surface, and from
normals a simple shaded image: C * (k_a + k_d * max(0, l . n)).
"""

import math
from pathlib import Path

import cv2
import numpy as np

from mpikit import (
    CameraPose,
    ShadingParams,
    apply_shading,
    lighting_direction,
    normal_map,
    render,
    shading_schedule,
    synth_scene,
)

out_dir = Path(__file__).parent / "out" / "shading"
out_dir.mkdir(parents=True, exist_ok=True)


def save(name, values):
    bgr = (np.clip(values, 0.0, 1.0) * 255.0).round().astype(np.uint8)
    if bgr.ndim == 3:
        bgr = bgr[..., ::-1]
    cv2.imwrite(str(out_dir / name), bgr)


# smooth depth bumps give non-trivial normals
scene = synth_scene("sphere-billboards", {"resolution": 128, "planes": 32}, seed=1)
result = render(scene.mpi, scene.intrinsics, scene.intrinsics, CameraPose.identity())

save("color.png", result.color)

depth = result.depth
save("depth.png", (depth - depth.min()) / (depth.max() - depth.min()))
print(f"depth range: {depth.min():.4f} .. {depth.max():.4f}")

normals = normal_map(depth, scene.intrinsics)
save("normals.png", (normals + 1.0) / 2.0)  # [-1,1] -> displayable [0,1]

# light 25 degrees off axis, and the ambient/diffuse split the training
# schedule would use at iteration 5000
k_a, k_d = shading_schedule(5000)
light = lighting_direction(math.radians(25.0), math.radians(10.0))
shaded = apply_shading(result.color, normals, ShadingParams(k_a, k_d, light))
save("shaded.png", shaded)

print(f"schedule at 5000 iters: ambient {k_a}, diffuse {k_d}")
print(f"light direction: {np.round(light, 4)}")
print(f"wrote color/depth/normals/shaded to {out_dir}")
