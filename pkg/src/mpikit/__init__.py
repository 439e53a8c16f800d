"""mpikit: multiplane-image rendering and geometry toolkit."""

from mpikit.composite import (
    RenderOutput,
    ShadingParams,
    apply_shading,
    lighting_direction,
    normal_map,
    normalized_depth_mse,
    over_composite,
    render,
    sample_lighting,
    shading_schedule,
)
from mpikit.container import (
    Trajectory,
    load_depth_gt,
    load_manifest,
    load_mpi,
    load_trajectory,
    orbit_poses,
    save_mpi,
    save_trajectory,
    synth_scene,
    translation_arc_poses,
)
from mpikit.core import (
    CameraIntrinsics,
    CameraPose,
    MultiplaneImage,
    PlaneGeometry,
    normalize_depth,
    place_planes_disparity,
)
from mpikit.genstack import (
    FeaturePyramid,
    LossParams,
    StyleState,
    ToyGenConfig,
    ToyGenerator,
    accumulate_pyramid,
    alpha_pyramid,
    background_fill,
    channel_dim,
    depth_to_alpha,
    gan_loss_terms,
    nonsaturating_score,
    plane_feature,
    projection_logit,
    toy_mpi_generate,
    truncate_style,
    upsample2x,
    upsample_to,
)
from mpikit.grad import (
    FiniteDiffReport,
    RenderGradients,
    composite_backward,
    finite_diff_check,
    kink_skip_masks,
    render_backward,
    warp_backward,
)
from mpikit.mesh import (
    OccupancyVolume,
    TriangleMesh,
    build_occupancy,
    euler_characteristic,
    export_obj,
    is_watertight,
    laplacian_smooth,
    load_obj,
    marching_cubes,
    surface_area,
)
from mpikit.warp import (
    Homography,
    bilinear_sample,
    plane_homography,
    plane_in_target_frame,
    warp_plane,
)

__all__ = [
    "CameraIntrinsics",
    "CameraPose",
    "FeaturePyramid",
    "FiniteDiffReport",
    "Homography",
    "LossParams",
    "MultiplaneImage",
    "OccupancyVolume",
    "PlaneGeometry",
    "RenderGradients",
    "RenderOutput",
    "ShadingParams",
    "StyleState",
    "ToyGenConfig",
    "ToyGenerator",
    "Trajectory",
    "TriangleMesh",
    "accumulate_pyramid",
    "alpha_pyramid",
    "apply_shading",
    "background_fill",
    "bilinear_sample",
    "build_occupancy",
    "channel_dim",
    "composite_backward",
    "depth_to_alpha",
    "euler_characteristic",
    "export_obj",
    "finite_diff_check",
    "gan_loss_terms",
    "is_watertight",
    "kink_skip_masks",
    "laplacian_smooth",
    "lighting_direction",
    "load_depth_gt",
    "load_manifest",
    "load_mpi",
    "load_obj",
    "load_trajectory",
    "marching_cubes",
    "nonsaturating_score",
    "normal_map",
    "normalize_depth",
    "normalized_depth_mse",
    "orbit_poses",
    "over_composite",
    "place_planes_disparity",
    "plane_feature",
    "plane_homography",
    "plane_in_target_frame",
    "projection_logit",
    "render",
    "render_backward",
    "sample_lighting",
    "save_mpi",
    "save_trajectory",
    "shading_schedule",
    "surface_area",
    "synth_scene",
    "toy_mpi_generate",
    "translation_arc_poses",
    "truncate_style",
    "upsample2x",
    "upsample_to",
    "warp_backward",
    "warp_plane",
]

__version__ = "0.1.0"
