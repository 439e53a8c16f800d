"""Generator-side building blocks and a forward-only toy MPI generator.

The pieces here mirror how a style-based 2D GAN is extended to emit an MPI:
residual pyramids that upsample-and-accumulate color and alpha, per-plane
features conditioned on normalized plane depth, style truncation, a
depth-to-alpha conversion, a border-synthesized background plane, a
projection-style pose-conditioned discriminator logit, and the GAN loss
formulas. Everything is a pure function; there is no training.

ToyGenerator stands in for a trained network with fixed seeded weights. It
calibrates its output statistics once at construction (from a probe style) so
that alpha stacks form a soft surface: each pixel's alpha rises from ~0 to ~1
across a narrow band of normalized depth. Trained generators learn exactly
this structure; fixing it here is what makes renders stable when the plane
count changes at inference time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mpikit.core import MultiplaneImage, normalize_depth, place_planes_disparity
from mpikit.warp import _plan_gather, _sample_plan

_SIGMA_FLOOR = 1e-8


def channel_dim(h: int, channel_base: int = 2**15, channel_max: int = 512) -> int:
    """Feature channel count at resolution h: min(channel_base / h, channel_max)."""
    if h < 1:
        raise ValueError("resolution must be positive")
    return min(channel_base // h, channel_max)


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def upsample_to(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with half-pixel-center alignment and edge clamping.

    Linear in the image values and exact on constants, which the pyramid
    distributivity property relies on.
    """
    image = np.asarray(image, dtype=np.float64)
    flat = image.ndim == 2
    if flat:
        image = image[..., None]
    h, w = image.shape[:2]
    sy = h / out_h
    sx = w / out_w
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * sx - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * sy - 0.5
    gx, gy = np.meshgrid(xs, ys)
    plan = _sample_plan(h, w, gx, gy, "clamp")
    out = _plan_gather(image, plan)
    return out[..., 0] if flat else out


def upsample2x(image: np.ndarray) -> np.ndarray:
    """Double both spatial dimensions bilinearly."""
    h, w = np.asarray(image).shape[:2]
    return upsample_to(image, 2 * h, 2 * w)


def _check_pyramid_keys(residuals) -> list[int]:
    keys = sorted(residuals)
    if not keys:
        raise ValueError("missing-resolution: empty residual pyramid")
    if keys[0] != 4:
        raise ValueError("missing-resolution: base residual at 4 required")
    for k in keys:
        if not _is_pow2(k):
            raise ValueError(f"resolution {k} is not a power of 2")
    for a, b in zip(keys, keys[1:]):
        if b != 2 * a:
            raise ValueError(f"missing-resolution: no residual between {a} and {b}")
    return keys


def accumulate_pyramid(residuals, upsampler=upsample2x) -> np.ndarray:
    """Fold per-resolution residuals into the finest map.

    out^4 = residual^4; out^h = residual^h + upsampler(out^(h/2)). Residuals
    are keyed by resolution (consecutive powers of 2 starting at 4), each an
    (h, h, C) array with a shared channel count.
    """
    keys = _check_pyramid_keys(residuals)
    out = None
    for k in keys:
        r = np.asarray(residuals[k], dtype=np.float64)
        if r.shape[0] != k or r.shape[1] != k:
            raise ValueError(f"residual keyed {k} has spatial shape {r.shape[:2]}")
        out = r if out is None else r + upsampler(out)
    return out


def alpha_pyramid(residuals, final_resolution: int) -> np.ndarray:
    """Alpha map from logit residuals: accumulate, squash, one final upsample.

    Residuals run up to the alpha branch's native resolution H_a; the sigmoid
    is applied once after accumulation (per-residual squashing would break the
    additive pyramid), then a single bilinear step brings the map to the final
    resolution. Output values lie strictly inside (0, 1).
    """
    keys = _check_pyramid_keys(residuals)
    h_alpha = keys[-1]
    if not _is_pow2(final_resolution):
        raise ValueError("final resolution must be a power of 2")
    if h_alpha > final_resolution:
        raise ValueError(
            f"alpha branch resolution {h_alpha} exceeds final resolution {final_resolution}"
        )
    logits = accumulate_pyramid(residuals)
    alpha = 1.0 / (1.0 + np.exp(-logits))
    if h_alpha < final_resolution:
        alpha = upsample_to(alpha, final_resolution, final_resolution)
    return alpha


@dataclass(frozen=True)
class FeaturePyramid:
    """Per-resolution feature maps F^h, resolutions 4..H (powers of 2)."""

    maps: dict
    channel_base: int = 2**15
    channel_max: int = 512

    def __post_init__(self):
        keys = _check_pyramid_keys(self.maps)
        maps = {}
        for k in keys:
            m = np.asarray(self.maps[k], dtype=np.float64)
            want = channel_dim(k, self.channel_base, self.channel_max)
            if m.shape != (k, k, want):
                raise ValueError(
                    f"feature at {k} has shape {m.shape}, expected {(k, k, want)}"
                )
            maps[k] = m
        object.__setattr__(self, "maps", maps)

    @property
    def resolutions(self) -> tuple:
        return tuple(sorted(self.maps))


@dataclass(frozen=True)
class StyleState:
    """Latent and style vectors plus truncation strength."""

    z: np.ndarray
    omega: np.ndarray
    omega_bar: np.ndarray
    psi: float = 1.0

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=np.float64)
        omega_bar = np.asarray(self.omega_bar, dtype=np.float64)
        if omega.shape != omega_bar.shape:
            raise ValueError("omega and omega_bar must have the same shape")
        if not 0.0 <= self.psi <= 1.0:
            raise ValueError("psi must lie in [0, 1]")

    def truncated(self) -> np.ndarray:
        return truncate_style(self.omega, self.omega_bar, self.psi)


@dataclass(frozen=True)
class PlaneFeature:
    """A plane-conditioned feature map and the embedding that shifted it."""

    feature: np.ndarray
    embed: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.feature, dtype=np.float64)
        e = np.asarray(self.embed, dtype=np.float64)
        if f.ndim != 3 or e.ndim != 1 or f.shape[2] != e.shape[0]:
            raise ValueError("embed length must equal the feature channel count")


@dataclass(frozen=True)
class LossParams:
    """GAN loss configuration: R1 gradient-penalty weight."""

    r1_weight: float = 10.0

    def __post_init__(self):
        if self.r1_weight < 0:
            raise ValueError("r1_weight must be non-negative")


def plane_feature(feature: np.ndarray, d_norm: float, omega: np.ndarray, embed_fn) -> PlaneFeature:
    """Condition a shared feature map on one plane's normalized depth.

    The map is standardized per channel over spatial positions (a small floor
    on sigma keeps constant channels finite), then shifted by the embedding
    embed_fn(d_norm, omega), one value per channel.

    d_norm must already be normalized to [0, 1]; passing raw scene depths is
    an error so unit mistakes fail loudly.
    """
    if not 0.0 <= d_norm <= 1.0:
        raise ValueError(f"normalized depth required, got {d_norm}")
    f = np.asarray(feature, dtype=np.float64)
    if f.ndim != 3:
        raise ValueError("feature must be (H, W, C)")
    mu = f.mean(axis=(0, 1))
    sigma = f.std(axis=(0, 1)) + _SIGMA_FLOOR
    embed = np.asarray(embed_fn(d_norm, omega), dtype=np.float64)
    if embed.shape != (f.shape[2],):
        raise ValueError(
            f"embedding length {embed.shape} does not match {f.shape[2]} channels"
        )
    return PlaneFeature((f - mu) / sigma + embed, embed)


def truncate_style(omega: np.ndarray, omega_bar: np.ndarray, psi: float) -> np.ndarray:
    """Pull a style toward its running mean: omega_bar + psi * (omega - omega_bar)."""
    if not 0.0 <= psi <= 1.0:
        raise ValueError("psi must lie in [0, 1]")
    omega = np.asarray(omega, dtype=np.float64)
    omega_bar = np.asarray(omega_bar, dtype=np.float64)
    # exact at the endpoints
    if psi == 1.0:
        return omega.copy()
    if psi == 0.0:
        return omega_bar.copy()
    return omega_bar + psi * (omega - omega_bar)


def depth_to_alpha(depth_map: np.ndarray, plane_depths, epsilon: float):
    """Alpha stack whose composite reproduces a given depth map.

    Per pixel and plane: alpha_i = clip((d_i - (D - eps)) / (2 eps), 0, 1),
    a linear ramp from 0 at D - eps to 1 at D + eps. Depth map, plane depths,
    and eps must share units. Alphas are non-decreasing in plane index.

    Returns a list of (H, W, 1) maps, one per plane.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    d = np.asarray(depth_map, dtype=np.float64)
    out = []
    for di in plane_depths:
        a = np.clip((float(di) - (d - epsilon)) / (2.0 * epsilon), 0.0, 1.0)
        out.append(a[..., None])
    return out


def background_fill(color: np.ndarray, fraction: float = 0.05) -> np.ndarray:
    """Synthesize a background image from the left/right borders of `color`.

    Per row, the mean of the left `fraction` of columns fills the left band,
    the right likewise, and interior columns blend linearly between the two
    band values. Rows are therefore monotone between their boundary values.
    """
    color = np.asarray(color, dtype=np.float64)
    if color.ndim != 3:
        raise ValueError("color must be (H, W, C)")
    w = color.shape[1]
    band = int(w * fraction)
    if band < 1:
        raise ValueError("image too narrow: width * fraction must be >= 1")
    left = color[:, :band].mean(axis=1)
    right = color[:, w - band :].mean(axis=1)
    cols = np.arange(w, dtype=np.float64)
    lo, hi = band - 1, w - band
    t = np.clip((cols - lo) / (hi - lo), 0.0, 1.0)
    return left[:, None, :] * (1.0 - t)[None, :, None] + right[:, None, :] * t[None, :, None]


def projection_logit(discriminator_feature: np.ndarray, pose_embedding: np.ndarray) -> float:
    """Pose-conditioned realism logit: standardized embedding dot feature.

    The raw pose embedding is standardized to zero mean and unit variance
    across its components (so the logit ignores the embedding's scale and
    offset), then dotted with the discriminator feature vector.
    """
    f = np.asarray(discriminator_feature, dtype=np.float64)
    e = np.asarray(pose_embedding, dtype=np.float64)
    if f.shape != e.shape or f.ndim != 1:
        raise ValueError("feature and embedding must be vectors of equal length")
    std = e.std()
    if std == 0.0:
        raise ValueError("zero-variance pose embedding")
    return float(f @ ((e - e.mean()) / std))


def nonsaturating_score(x) -> np.ndarray:
    """f(x) = -log(1 + exp(-x)), computed stably for |x| up to 1e4 and beyond."""
    return -np.logaddexp(0.0, -np.asarray(x, dtype=np.float64))


def gan_loss_terms(
    fake_logits, real_logits, grad_norms_sq, params: LossParams = LossParams()
) -> float:
    """Non-saturating GAN objective with an R1 gradient penalty on reals.

    L = mean f(fake) + mean[f(real) + r1_weight * |grad|^2], with f the
    non-saturating score. grad_norms_sq holds per-real-sample squared
    gradient norms of the discriminator output w.r.t. its input.
    """
    fake = np.asarray(fake_logits, dtype=np.float64)
    real = np.asarray(real_logits, dtype=np.float64)
    gnsq = np.asarray(grad_norms_sq, dtype=np.float64)
    if real.shape != gnsq.shape:
        raise ValueError("one grad norm per real logit required")
    if not (np.isfinite(fake).all() and np.isfinite(real).all() and np.isfinite(gnsq).all()):
        raise ValueError("loss inputs must be finite")
    return float(
        np.mean(nonsaturating_score(fake))
        + np.mean(nonsaturating_score(real) + params.r1_weight * gnsq)
    )


@dataclass(frozen=True)
class ToyGenConfig:
    """Configuration for the seeded toy generator."""

    num_planes: int = 32
    resolution: int = 256
    alpha_resolution: int = 256
    near: float = 0.95
    far: float = 1.12
    channel_base: int = 2**15
    channel_max: int = 512
    latent_dim: int = 64
    style_dim: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.num_planes < 1:
            raise ValueError("num_planes must be >= 1")
        if not (_is_pow2(self.resolution) and self.resolution >= 4):
            raise ValueError("resolution must be a power of 2, at least 4")
        if not (_is_pow2(self.alpha_resolution) and self.alpha_resolution >= 4):
            raise ValueError("alpha_resolution must be a power of 2, at least 4")
        if self.alpha_resolution > self.resolution:
            raise ValueError("alpha_resolution must not exceed resolution")
        if not (0 < self.near < self.far):
            raise ValueError("need 0 < near < far")
        if self.latent_dim < 1 or self.style_dim < 1:
            raise ValueError("latent and style dims must be positive")
        if self.channel_base < 4 or self.channel_max < 1:
            raise ValueError("invalid channel configuration")


_CONFIG_FIELDS = {
    "planes": ("num_planes", int),
    "resolution": ("resolution", int),
    "alpha_resolution": ("alpha_resolution", int),
    "near": ("near", float),
    "far": ("far", float),
    "channel_base": ("channel_base", int),
    "channel_max": ("channel_max", int),
    "latent_dim": ("latent_dim", int),
    "style_dim": ("style_dim", int),
    "seed": ("seed", int),
}


def parse_toy_config(text: str) -> ToyGenConfig:
    """Parse a "key = value" config document (one pair per line, # comments)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_FIELDS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        name, cast = _CONFIG_FIELDS[key]
        try:
            values[name] = cast(val)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {val!r}") from exc
    return ToyGenConfig(**values)


# Calibration targets: surface band center/spread in normalized depth, logit
# slope across depth, and the spread of color/style logits. Fixed constants of
# the toy, not tunables.
_SURFACE_CENTER = 0.45
_SURFACE_SPREAD = 0.12
_DEPTH_GAIN = 25.0
_STYLE_WOBBLE = 0.8
_COLOR_SPREAD = 1.5


class ToyGenerator:
    """Deterministic stand-in for a trained MPI generator.

    All weights are drawn once from the config seed, independent of the plane
    count, so the number of planes is a free inference-time choice: the color
    branch never sees it, and each plane's alpha comes from evaluating the
    same depth-conditioned function at that plane's normalized depth.

    The alpha branch is calibrated so the accumulated logit at a pixel is
    roughly gain * (d_norm - t(x, y)) with t a smooth random threshold field:
    alpha rises from ~0 to ~1 across a narrow depth band, i.e. the stack
    models a surface.
    """

    def __init__(self, config: ToyGenConfig):
        self.config = config
        rng = np.random.default_rng(np.random.SeedSequence(config.seed))
        c = config
        self._levels = [4 * 2**i for i in range(int(math.log2(c.resolution / 4)) + 1)]
        self._alpha_levels = [h for h in self._levels if h <= c.alpha_resolution]
        self.w_map = rng.normal(size=(c.style_dim, c.latent_dim)) / math.sqrt(c.latent_dim)
        self.b_map = rng.normal(size=c.style_dim) * 0.5
        self.base = {}
        self.w_style = {}
        self.w_rgb = {}
        self.w_alpha = {}
        self.w_wobble = {}
        for h in self._levels:
            dim = channel_dim(h, c.channel_base, c.channel_max)
            self.base[h] = rng.normal(size=(h, h, dim))
            self.w_style[h] = rng.normal(size=(dim, c.style_dim)) / math.sqrt(c.style_dim)
            self.w_rgb[h] = rng.normal(size=(dim, 3)) / math.sqrt(dim)
        for h in self._alpha_levels:
            dim = channel_dim(h, c.channel_base, c.channel_max)
            self.w_alpha[h] = rng.normal(size=dim) / math.sqrt(dim)
            self.w_wobble[h] = rng.normal(size=c.style_dim) / math.sqrt(c.style_dim)
        self.omega_bar = np.tanh(self.b_map)
        self._calibrate()

    # -- style mapping ----------------------------------------------------

    def map_latent(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.config.latent_dim,):
            raise ValueError(f"latent must have shape ({self.config.latent_dim},)")
        return np.tanh(self.w_map @ z + self.b_map)

    def feature_pyramid(self, omega: np.ndarray) -> FeaturePyramid:
        maps = {
            h: self.base[h] + (self.w_style[h] @ omega)[None, None, :]
            for h in self._levels
        }
        return FeaturePyramid(maps, self.config.channel_base, self.config.channel_max)

    # -- color branch ------------------------------------------------------

    def _color_logits(self, pyramid: FeaturePyramid) -> np.ndarray:
        residuals = {}
        for h in self._levels:
            r = np.tensordot(pyramid.maps[h], self.w_rgb[h], axes=([2], [0]))
            r = r * self._rgb_scale
            if h == 4:
                r = r + self._rgb_bias
            residuals[h] = r
        return accumulate_pyramid(residuals)

    def color_image(self, pyramid: FeaturePyramid) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self._color_logits(pyramid)))

    # -- alpha branch -------------------------------------------------------

    def embed_fn(self, h: int):
        """Depth/style embedding for level h, as consumed by plane_feature.

        Returns e(d_norm, omega) = (gain * d_norm / n_levels + wobble_h(omega))
        * u_h, with u_h chosen so the level's alpha convolution turns the
        embedding into exactly that scalar logit contribution.
        """
        w = self.w_alpha[h]
        dim = w.shape[0]
        u = w * math.sqrt(dim) / float(w @ w)
        n = len(self._alpha_levels)
        gain = _DEPTH_GAIN / n
        wob = self.w_wobble[h]
        coef = _STYLE_WOBBLE / math.sqrt(n)

        def embed(d_norm: float, omega: np.ndarray) -> np.ndarray:
            return (gain * d_norm + coef * float(wob @ omega)) * u

        return embed

    def level_alpha_residual(
        self, feature_h: np.ndarray, h: int, d_norm: float, omega: np.ndarray
    ) -> np.ndarray:
        """Alpha logit residual at level h via the plane-feature path."""
        pf = plane_feature(feature_h, d_norm, omega, self.embed_fn(h))
        dim = self.w_alpha[h].shape[0]
        r = np.tensordot(pf.feature, self.w_alpha[h], axes=([2], [0])) / math.sqrt(dim)
        if h == 4:
            r = r + self._alpha_bias
        return r[..., None]

    def _spatial_alpha_residuals(self, pyramid: FeaturePyramid) -> dict:
        """Plane-independent part of the alpha residuals (embedding omitted)."""
        out = {}
        for h in self._alpha_levels:
            f = pyramid.maps[h]
            mu = f.mean(axis=(0, 1))
            sigma = f.std(axis=(0, 1)) + _SIGMA_FLOOR
            dim = self.w_alpha[h].shape[0]
            s = np.tensordot((f - mu) / sigma, self.w_alpha[h], axes=([2], [0]))
            s = s / math.sqrt(dim)
            if h == 4:
                s = s + self._alpha_bias
            out[h] = s[..., None]
        return out

    def _embed_scalar(self, h: int, d_norm: float, omega: np.ndarray) -> float:
        # What level_alpha_residual adds on top of the spatial part: the
        # embedding is a multiple of u_h, and conv(u_h) = 1 by construction.
        n = len(self._alpha_levels)
        return (_DEPTH_GAIN / n) * d_norm + (_STYLE_WOBBLE / math.sqrt(n)) * float(
            self.w_wobble[h] @ omega
        )

    def alpha_map(self, pyramid: FeaturePyramid, omega: np.ndarray, d_norm: float) -> np.ndarray:
        residuals = {
            h: s + self._embed_scalar(h, d_norm, omega)
            for h, s in self._spatial_alpha_residuals(pyramid).items()
        }
        return alpha_pyramid(residuals, self.config.resolution)

    # -- calibration ---------------------------------------------------------

    def _calibrate(self):
        """Fix output statistics from a probe style (the running mean).

        Color: scale/shift the RGB convolutions so accumulated logits have
        spread _COLOR_SPREAD around 0. Alpha: scale the alpha convolutions so
        the accumulated spatial logit has spread gain * _SURFACE_SPREAD, and
        bias it so the surface threshold sits at _SURFACE_CENTER. Both probes
        are plane-count independent.
        """
        self._rgb_scale = 1.0
        self._rgb_bias = np.zeros(3)
        self._alpha_bias = 0.0
        probe = self.feature_pyramid(self.omega_bar)
        logits = self._color_logits(probe)
        self._rgb_scale = _COLOR_SPREAD / max(logits.std(), 1e-12)
        self._rgb_bias = -logits.mean(axis=(0, 1)) * self._rgb_scale
        spatial = accumulate_pyramid(self._spatial_alpha_residuals(probe))
        scale = _DEPTH_GAIN * _SURFACE_SPREAD / max(spatial.std(), 1e-12)
        for h in self._alpha_levels:
            self.w_alpha[h] = self.w_alpha[h] * scale
        # Recompute the spatial field with scaled weights to place its mean.
        spatial = accumulate_pyramid(self._spatial_alpha_residuals(probe))
        self._alpha_bias = -_DEPTH_GAIN * _SURFACE_CENTER - float(spatial.mean())

    # -- full generation ------------------------------------------------------

    def generate(
        self, z: np.ndarray, num_planes: int | None = None, psi: float = 1.0
    ) -> MultiplaneImage:
        """Produce an MPI from a latent vector.

        num_planes overrides the configured plane count (the weights do not
        depend on it). The last plane is fully opaque so every ray terminates,
        and its color comes from a border-synthesized background image.
        """
        c = self.config
        L = c.num_planes if num_planes is None else int(num_planes)
        if L < 1:
            raise ValueError("num_planes must be >= 1")
        omega = truncate_style(self.map_latent(z), self.omega_bar, psi)
        pyramid = self.feature_pyramid(omega)
        color = self.color_image(pyramid)
        depths = place_planes_disparity(L, c.near, c.far)
        d1, dL = depths[0], depths[-1]
        spatial = self._spatial_alpha_residuals(pyramid)
        alphas = []
        for i, d in enumerate(depths):
            if i == L - 1:
                alphas.append(np.ones((c.resolution, c.resolution, 1)))
                continue
            d_norm = normalize_depth(d, d1, dL)
            residuals = {
                h: s + self._embed_scalar(h, d_norm, omega) for h, s in spatial.items()
            }
            alphas.append(alpha_pyramid(residuals, c.resolution))
        # border band must be at least one pixel wide at small resolutions
        background = background_fill(color, fraction=max(0.05, 1.0 / c.resolution))
        return MultiplaneImage(
            color, tuple(alphas), tuple(depths), c.near, c.far, background=background
        )


def toy_mpi_generate(z: np.ndarray, config: ToyGenConfig) -> MultiplaneImage:
    """One-shot toy generation: build the seeded generator and run it."""
    return ToyGenerator(config).generate(z)
