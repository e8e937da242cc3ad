"""Deterministic synthesis of base^exponent expression images.

Each sample is rendered white-on-black (foreground 1.0), blurred, then
noised; blur models optics, noise models the sensor, and doing noise last
keeps its statistics measurable on the output.  Sample i draws everything
from substream (master_seed, i), so a dataset is a pure function of its
config and any sample can be regenerated in isolation.

Per-sample draw order within the substream: base digit, exponent digit,
font scale, noise sigma, blur sigma, then the noise field.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LayoutError
from .glyphs import GLYPH_H, GLYPH_W, GLYPHS
from .rng import Rng
from .tensor import DTYPE

# Expression layout constants: the exponent is drawn at 0.6x the base scale,
# raised so its bottom sits 20% of the base height above the base's top edge,
# after a horizontal gap of one scaled pixel.
EXP_SCALE_RATIO = 0.6
SUPERSCRIPT_RISE = 0.2
BLUR_IDENTITY_BELOW = 0.05


@dataclass(frozen=True)
class GenConfig:
    count: int = 1
    image_size: tuple[int, int] = (64, 64)
    base_range: tuple[int, int] = (2, 9)
    exp_range: tuple[int, int] = (0, 9)
    font_scale_range: tuple[float, float] = (2.0, 3.5)
    noise_sigma_range: tuple[float, float] = (0.0, 0.3)
    blur_sigma_range: tuple[float, float] = (0.0, 2.0)
    master_seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")
        for name in ("base_range", "exp_range", "font_scale_range",
                     "noise_sigma_range", "blur_sigma_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty: ({lo}, {hi})")


@dataclass
class Sample:
    image: np.ndarray                 # [1, H, W] float32 in [0, 1]
    base_label: int                   # index into base_range
    exp_label: int                    # index into exp_range
    meta: tuple[float, float, float]  # (font_scale, noise_sigma, blur_sigma)


def _scale_glyph(digit: int, scale: float) -> np.ndarray:
    """Nearest-neighbor upscale: dst pixel (r, c) reads master (r*H//h, c*W//w)."""
    h = max(1, round(GLYPH_H * scale))
    w = max(1, round(GLYPH_W * scale))
    rows = (np.arange(h) * GLYPH_H) // h
    cols = (np.arange(w) * GLYPH_W) // w
    return GLYPHS[digit][np.ix_(rows, cols)]


def render_expression(base: int, exponent: int, font_scale: float,
                      image_size: tuple[int, int] = (64, 64)) -> np.ndarray:
    """Rasterize "base^exponent" onto a black canvas; returns [1, H, W]."""
    h, w = image_size
    big = _scale_glyph(base, font_scale)
    small = _scale_glyph(exponent, font_scale * EXP_SCALE_RATIO)
    gap = max(1, round(font_scale))

    total_w = big.shape[1] + gap + small.shape[1]
    base_top = (h - big.shape[0]) // 2
    left = (w - total_w) // 2
    exp_top = base_top - round(SUPERSCRIPT_RISE * big.shape[0])
    exp_left = left + big.shape[1] + gap

    if base_top < 0 or base_top + big.shape[0] > h:
        raise LayoutError(f"base glyph (scale {font_scale}) taller than {h}px canvas")
    if left < 0 or exp_left + small.shape[1] > w:
        raise LayoutError(f"expression (scale {font_scale}) wider than {w}px canvas")
    if exp_top < 0 or exp_top + small.shape[0] > h:
        raise LayoutError(f"exponent glyph (scale {font_scale}) leaves the canvas")

    canvas = np.zeros((h, w), dtype=DTYPE)
    canvas[base_top:base_top + big.shape[0], left:left + big.shape[1]][big] = 1.0
    canvas[exp_top:exp_top + small.shape[0], exp_left:exp_left + small.shape[1]][small] = 1.0
    return canvas[None]


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders.

    Kernel radius is ceil(3*sigma), normalized to sum 1; sigma below 0.05 is
    treated as the identity.
    """
    if sigma < 0:
        raise ValueError(f"blur sigma must be >= 0, got {sigma}")
    if sigma < BLUR_IDENTITY_BELOW:
        return image.copy()
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel /= kernel.sum()

    plane = image[0].astype(np.float64)
    padded = np.pad(plane, ((0, 0), (radius, radius)), mode="edge")
    rows = np.zeros_like(plane)
    for i, k in enumerate(kernel):
        rows += k * padded[:, i:i + plane.shape[1]]
    padded = np.pad(rows, ((radius, radius), (0, 0)), mode="edge")
    out = np.zeros_like(plane)
    for i, k in enumerate(kernel):
        out += k * padded[i:i + plane.shape[0], :]
    return out.astype(image.dtype)[None]


def add_gaussian_noise(image: np.ndarray, sigma: float, rng: Rng) -> np.ndarray:
    """Per-pixel N(0, sigma^2) added then clamped to [0, 1]."""
    if sigma < 0:
        raise ValueError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return image.copy()
    noise = rng.normals(image.size).reshape(image.shape)
    noisy = image.astype(np.float64) + sigma * noise
    return np.clip(noisy, 0.0, 1.0).astype(image.dtype)


def generate_sample(config: GenConfig, index: int) -> Sample:
    """Sample i of the dataset, identical whether generated alone or in bulk."""
    stream = Rng(config.master_seed).substream(index)
    base_lo, base_hi = config.base_range
    exp_lo, exp_hi = config.exp_range
    base_label = stream.randint(base_hi - base_lo + 1)
    exp_label = stream.randint(exp_hi - exp_lo + 1)
    # metadata kept f32-representable so dataset files round-trip it exactly
    font_scale = float(np.float32(stream.uniform(*config.font_scale_range)))
    noise_sigma = float(np.float32(stream.uniform(*config.noise_sigma_range)))
    blur_sigma = float(np.float32(stream.uniform(*config.blur_sigma_range)))

    image = render_expression(base_lo + base_label, exp_lo + exp_label,
                              font_scale, config.image_size)
    image = gaussian_blur(image, blur_sigma)
    image = add_gaussian_noise(image, noise_sigma, stream)
    return Sample(image, base_label, exp_label, (font_scale, noise_sigma, blur_sigma))


def generate_dataset(config: GenConfig) -> list[Sample]:
    """All samples of the config, in index order."""
    samples = []
    for i in range(config.count):
        try:
            samples.append(generate_sample(config, i))
        except LayoutError as exc:
            raise LayoutError(f"sample {i}: {exc}") from exc
    return samples
