"""Analytic gradients of the rendered color image, plus a verification harness.

Rendering is two stages: bilinear warps (linear in the image values) and the
over composite (multilinear in colors and alphas). Both backward passes are
exact:

  * composite: dI/dC'_i = w_i; dI/da'_k = T_k (C'_k - S_k) where T_k is the
    transmittance in front of plane k and S_k is the composite of the planes
    behind k. S is computed by a back-to-front recurrence, avoiding the
    division by (1 - a_k) that fails at a = 1.
  * warp: the adjoint of the bilinear gather is a scatter-add through the
    same four weights, reusing the forward's sample plan.

Gradients exist only for the image values (color, alphas, background): plane
depths and camera poses are fixed inputs here, not trainable parameters, so
RenderGradients has no fields for them.

All gradient work is 64-bit; finite-difference verification is meaningless in
32-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mpikit.core import CameraIntrinsics, CameraPose, MultiplaneImage, _freeze
from mpikit.warp import (
    Homography,
    _plan_scatter,
    _sample_plan,
    _warp_coords,
    plane_homography,
    plane_in_target_frame,
)


@dataclass(frozen=True)
class RenderGradients:
    """Gradients of a scalar loss w.r.t. the source MPI's images."""

    d_loss_d_color: np.ndarray
    d_loss_d_alpha: tuple
    d_loss_d_background: np.ndarray | None = None

    def __post_init__(self):
        c = _freeze(np.asarray(self.d_loss_d_color))
        alphas = tuple(_freeze(np.asarray(a)) for a in self.d_loss_d_alpha)
        if not np.isfinite(c).all():
            raise ValueError("non-finite color gradient")
        for i, a in enumerate(alphas):
            if not np.isfinite(a).all():
                raise ValueError(f"non-finite alpha gradient for plane {i}")
        bg = self.d_loss_d_background
        if bg is not None:
            bg = _freeze(np.asarray(bg))
            if not np.isfinite(bg).all():
                raise ValueError("non-finite background gradient")
        object.__setattr__(self, "d_loss_d_color", c)
        object.__setattr__(self, "d_loss_d_alpha", alphas)
        object.__setattr__(self, "d_loss_d_background", bg)


def composite_backward(warped_planes, upstream: np.ndarray):
    """Backpropagate d_loss/d_image through the over composite.

    Args:
      warped_planes: the forward's (C'_i, a'_i) pairs, near to far.
      upstream: (H, W, 3) gradient of the loss w.r.t. the composited color.

    Returns:
      List of (d_color_i (H, W, 3), d_alpha_i (H, W, 1)) per plane.
    """
    planes = list(warped_planes)
    if not planes:
        raise ValueError("empty plane list")
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != planes[0][0].shape:
        raise ValueError("upstream must match the composited image shape")
    L = len(planes)
    # Front transmittance T_k before each plane.
    trans = [None] * L
    t = np.ones_like(planes[0][1])
    for k, (_, a) in enumerate(planes):
        trans[k] = t
        t = t * (1.0 - a)
    # Behind-composite S_k, built back to front.
    behind = [None] * L
    s = np.zeros_like(planes[0][0])
    for k in range(L - 1, -1, -1):
        behind[k] = s
        c, a = planes[k]
        s = c * a + (1.0 - a) * s
    grads = []
    for k, (c, a) in enumerate(planes):
        d_color = upstream * (a * trans[k])
        d_alpha = np.sum(upstream * trans[k] * (c - behind[k]), axis=-1, keepdims=True)
        grads.append((d_color, d_alpha))
    return grads


def warp_backward(
    mpi: MultiplaneImage,
    i: int,
    homography: Homography,
    upstream_color: np.ndarray,
    upstream_alpha: np.ndarray,
    out_size: tuple[int, int] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Backpropagate warp_plane: scatter output gradients to canonical images.

    Must be called with the same (i, homography, out_size) as the forward.
    Returns (d_color, d_alpha) on the canonical grid; when plane i draws its
    color from the background override, d_color is the background's gradient.
    """
    if not 0 <= i < mpi.num_planes:
        raise ValueError(f"plane index {i} out of range [0, {mpi.num_planes})")
    h = mpi.resolution
    out_w, out_h = out_size if out_size is not None else (h, h)
    upstream_color = np.asarray(upstream_color, dtype=np.float64)
    upstream_alpha = np.asarray(upstream_alpha, dtype=np.float64)
    if upstream_color.shape != (out_h, out_w, 3) or upstream_alpha.shape != (out_h, out_w, 1):
        raise ValueError("upstream shapes must match the warp output")
    if homography.is_exact_identity() and (out_w, out_h) == (h, h):
        return upstream_color.copy(), upstream_alpha.copy()
    sx, sy, valid = _warp_coords(homography, out_w, out_h)
    v = valid[..., None]
    d_color = _plan_scatter(upstream_color * v, _sample_plan(h, h, sx, sy, "clamp"), h, h)
    d_alpha = _plan_scatter(upstream_alpha * v, _sample_plan(h, h, sx, sy, "zero"), h, h)
    return d_color, d_alpha


def render_backward(
    mpi: MultiplaneImage,
    k_cano: CameraIntrinsics,
    k_tgt: CameraIntrinsics,
    pose: CameraPose,
    upstream: np.ndarray,
) -> RenderGradients:
    """Gradients of a scalar loss w.r.t. (color, alphas, background).

    `upstream` is d_loss/d_I for the image produced by render() with the same
    arguments. Replays the forward warps, runs composite_backward, then
    scatters each plane's gradients back to the canonical images. The shared
    color image accumulates contributions from every plane that uses it.
    """
    from mpikit.composite import over_composite  # local import avoids a cycle
    from mpikit.warp import warp_plane

    out_size = (k_tgt.width, k_tgt.height)
    homs = []
    planes = []
    for i, d in enumerate(mpi.depths):
        geom = plane_in_target_frame(d, pose)
        hom = plane_homography(k_cano, k_tgt, pose, geom)
        homs.append(hom)
        planes.append(warp_plane(mpi, i, hom, out_size))
    plane_grads = composite_backward(planes, upstream)
    h = mpi.resolution
    d_color = np.zeros((h, h, 3))
    d_background = np.zeros((h, h, 3)) if mpi.background is not None else None
    d_alphas = []
    for i, (duc, dua) in enumerate(plane_grads):
        dc, da = warp_backward(mpi, i, homs[i], duc, dua, out_size)
        if d_background is not None and i == mpi.num_planes - 1:
            d_background += dc
        else:
            d_color += dc
        d_alphas.append(da)
    return RenderGradients(d_color, tuple(d_alphas), d_background)


@dataclass(frozen=True)
class ParamCheck:
    """Finite-difference summary for one named parameter array."""

    name: str
    checked: int
    failed: int
    max_rel_error: float
    worst_index: tuple
    worst_analytic: float
    worst_fd: float


@dataclass(frozen=True)
class FiniteDiffReport:
    checks: tuple
    h: float
    tol: float

    @property
    def passed(self) -> bool:
        return all(c.failed == 0 for c in self.checks)

    def format_table(self) -> str:
        lines = [
            f"{'param':<12} {'checked':>8} {'failed':>7} {'max rel err':>12}  worst (analytic vs fd)",
        ]
        for c in self.checks:
            lines.append(
                f"{c.name:<12} {c.checked:>8} {c.failed:>7} {c.max_rel_error:>12.3e}  "
                f"{c.worst_analytic:.6e} vs {c.worst_fd:.6e} at {c.worst_index}"
            )
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"gradient check: {verdict} (h={self.h:g}, tol={self.tol:g})")
        return "\n".join(lines)


def finite_diff_check(
    forward,
    params: dict,
    analytic: dict,
    h: float = 1e-5,
    tol: float = 1e-3,
    eps_floor: float = 1e-6,
    skip: dict | None = None,
    max_elements: int | None = None,
    rng: np.random.Generator | None = None,
) -> FiniteDiffReport:
    """Compare analytic gradients against central finite differences.

    Args:
      forward: deterministic callable mapping a {name: array} dict to a float.
      params: parameter arrays at the evaluation point (64-bit).
      analytic: claimed gradients, same keys and shapes as params.
      h: central-difference step.
      tol: relative-error threshold for a per-element failure.
      eps_floor: denominator floor in |g_a - g_fd| / max(|g_fd|, eps_floor),
        so near-zero gradients are compared absolutely.
      skip: optional {name: bool array} of elements to exclude (e.g. samples
        sitting on a bilinear grid line, where the derivative is one-sided).
      max_elements: if set, check at most this many randomly chosen elements
        per parameter (requires rng).

    Returns:
      FiniteDiffReport; .passed is True when no checked element fails.
    """
    if set(params) != set(analytic):
        raise ValueError("params and analytic must have identical keys")
    checks = []
    for name in params:
        base = np.asarray(params[name], dtype=np.float64)
        grad = np.asarray(analytic[name], dtype=np.float64)
        if grad.shape != base.shape:
            raise ValueError(f"gradient shape mismatch for {name!r}")
        skip_mask = None
        if skip is not None and name in skip:
            skip_mask = np.asarray(skip[name], dtype=bool)
        indices = np.arange(base.size)
        if skip_mask is not None:
            indices = indices[~skip_mask.reshape(-1)]
        if max_elements is not None and indices.size > max_elements:
            if rng is None:
                raise ValueError("max_elements requires an rng")
            indices = rng.choice(indices, size=max_elements, replace=False)
        work = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
        flat = work[name].reshape(-1)
        checked = failed = 0
        max_rel = 0.0
        worst = ((), 0.0, 0.0)
        for idx in indices:
            orig = flat[idx]
            flat[idx] = orig + h
            f_plus = float(forward(work))
            flat[idx] = orig - h
            f_minus = float(forward(work))
            flat[idx] = orig
            g_fd = (f_plus - f_minus) / (2.0 * h)
            g_an = grad.reshape(-1)[idx]
            rel = abs(g_an - g_fd) / max(abs(g_fd), eps_floor)
            checked += 1
            if rel > max_rel:
                max_rel = rel
                worst = (np.unravel_index(idx, base.shape), float(g_an), float(g_fd))
            if rel > tol:
                failed += 1
        checks.append(
            ParamCheck(
                name=name,
                checked=checked,
                failed=failed,
                max_rel_error=max_rel,
                worst_index=worst[0],
                worst_analytic=worst[1],
                worst_fd=worst[2],
            )
        )
    return FiniteDiffReport(tuple(checks), h=h, tol=tol)


def kink_skip_masks(
    mpi: MultiplaneImage,
    k_cano: CameraIntrinsics,
    k_tgt: CameraIntrinsics,
    pose: CameraPose,
    band: float = 1e-3,
) -> dict:
    """Skip masks for canonical pixels influenced by near-grid-line samples.

    Bilinear interpolation is only piecewise smooth in the sample coordinates:
    each grid line is a kink. The rendered image is still exactly linear in
    the color/alpha values, but a sample point within `band` of a line gives
    one corner a weight near zero, and the gradient such a corner receives is
    roundoff-scale noise rather than signal. This marks every target pixel
    whose sample point sits that close to a line and scatters the marks back
    through the warp, so the affected canonical elements can be excluded from
    finite-difference comparison.
    """
    h = mpi.resolution
    out_w, out_h = k_tgt.width, k_tgt.height
    color_hits = np.zeros((h, h, 3))
    alpha_hits = [np.zeros((h, h, 1)) for _ in range(mpi.num_planes)]
    bg_hits = np.zeros((h, h, 3)) if mpi.background is not None else None
    for i, d in enumerate(mpi.depths):
        geom = plane_in_target_frame(d, pose)
        hom = plane_homography(k_cano, k_tgt, pose, geom)
        if hom.is_exact_identity() and (out_w, out_h) == (h, h):
            continue  # integer sampling is exact, not a kink for value grads
        sx, sy, valid = _warp_coords(hom, out_w, out_h)
        near_line = (
            (np.abs(sx - np.round(sx)) < band) | (np.abs(sy - np.round(sy)) < band)
        ) & valid
        mark = near_line[..., None].astype(np.float64)
        dc, da = warp_backward(
            mpi, i, hom, np.repeat(mark, 3, axis=-1), mark, (out_w, out_h)
        )
        if bg_hits is not None and i == mpi.num_planes - 1:
            bg_hits += dc
        else:
            color_hits += dc
        alpha_hits[i] += da
    masks = {"color": color_hits > 0}
    for i, ah in enumerate(alpha_hits):
        masks[f"alpha_{i}"] = ah > 0
    if bg_hits is not None:
        masks["background"] = bg_hits > 0
    return masks
