"""Stochastic twin-view augmentation.

Images are CHW float32 arrays in [0, 1].  Each call derives its draws
from an explicit numpy Generator, so a (seed, image, spec) triple fully
determines the output.  The two views of one image come from independent
child streams of one per-sample SeedSequence, which makes a sample's
views insensitive to the processing order of other samples.

Per-view pipeline: random resized crop -> horizontal flip -> photometric
distortion (color jitter, random grayscale, solarize) -> gaussian blur,
then clamp to [0, 1] and per-channel normalization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_AUGMENT = 2
STREAM_KMEANS = 3
STREAM_DATAGEN = 4

GRAY_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float32)
SOLARIZE_THRESHOLD = 0.5


@dataclass
class AugmentationSpec:
    crop_scale_range: tuple = (0.08, 1.0)
    flip_prob: float = 0.5
    jitter_strengths: tuple = (0.4, 0.4, 0.2, 0.1)   # brightness, contrast, saturation, hue
    jitter_prob: float = 0.8
    grayscale_prob: float = 0.2
    blur_probs: tuple = (1.0, 0.1)                   # per view
    solarize_probs: tuple = (0.0, 0.2)               # per view
    output_side: int = 32
    normalize_mean: tuple = (0.5, 0.5, 0.5)
    normalize_std: tuple = (0.5, 0.5, 0.5)

    def __post_init__(self):
        lo, hi = self.crop_scale_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ContractError(f"crop scale range must satisfy 0 < lo <= hi <= 1, got {lo}, {hi}")
        for name in ("flip_prob", "jitter_prob", "grayscale_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ContractError(f"{name} must be in [0,1], got {v}")
        for pair in (self.blur_probs, self.solarize_probs):
            if not all(0.0 <= p <= 1.0 for p in pair):
                raise ContractError(f"per-view probabilities must be in [0,1], got {pair}")
        if self.output_side <= 0:
            raise ContractError(f"output_side must be positive, got {self.output_side}")


def make_rng(*key) -> np.random.Generator:
    """Deterministic Generator keyed by a tuple of integers."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def sample_seed_sequence(seed, epoch, index) -> np.random.SeedSequence:
    return np.random.SeedSequence((int(seed), STREAM_AUGMENT, int(epoch), int(index)))


def ensure_rgb(img: np.ndarray) -> np.ndarray:
    """Replicate single-channel input to three channels."""
    if img.shape[0] == 1:
        return np.repeat(img, 3, axis=0)
    return img


def crop_and_resize(img, top, left, crop_h, crop_w, out_side):
    """Bilinear resample of a crop rectangle onto an out_side square."""
    sub = img[:, top:top + crop_h, left:left + crop_w]
    ys = (np.arange(out_side, dtype=np.float32) + 0.5) * (crop_h / out_side) - 0.5
    xs = (np.arange(out_side, dtype=np.float32) + 0.5) * (crop_w / out_side) - 0.5
    ys = np.clip(ys, 0.0, crop_h - 1.0)
    xs = np.clip(xs, 0.0, crop_w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, crop_h - 1)
    x1 = np.minimum(x0 + 1, crop_w - 1)
    wy = (ys - y0).astype(img.dtype)[None, :, None]
    wx = (xs - x0).astype(img.dtype)[None, None, :]
    r0 = sub[:, y0, :]
    r1 = sub[:, y1, :]
    top_row = r0[:, :, x0] * (1 - wx) + r0[:, :, x1] * wx
    bot_row = r1[:, :, x0] * (1 - wx) + r1[:, :, x1] * wx
    return top_row * (1 - wy) + bot_row * wy


def random_resized_crop(img, scale_range, output_side, rng,
                        ratio_range=(3.0 / 4.0, 4.0 / 3.0)):
    """Sample an area fraction and aspect ratio, crop, resize.

    Falls back to a centered square crop when no admissible rectangle is
    found in 10 attempts.
    """
    c, h, w = img.shape
    if h < 2 or w < 2:
        raise ContractError(f"image too small to crop: {img.shape}")
    area = h * w
    log_lo, log_hi = math.log(ratio_range[0]), math.log(ratio_range[1])
    for _ in range(10):
        target = area * rng.uniform(scale_range[0], scale_range[1])
        ar = math.exp(rng.uniform(log_lo, log_hi))
        cw = int(round(math.sqrt(target * ar)))
        ch = int(round(math.sqrt(target / ar)))
        if 0 < cw <= w and 0 < ch <= h:
            top = int(rng.integers(0, h - ch + 1))
            left = int(rng.integers(0, w - cw + 1))
            return crop_and_resize(img, top, left, ch, cw, output_side)
    side = min(h, w)
    return crop_and_resize(img, (h - side) // 2, (w - side) // 2, side, side, output_side)


def horizontal_flip(img, prob, rng):
    if rng.uniform() < prob:
        return img[:, :, ::-1].copy()
    return img


def to_grayscale(img):
    lum = np.tensordot(GRAY_WEIGHTS, img, axes=(0, 0))
    return np.broadcast_to(lum, img.shape).astype(img.dtype).copy()


def _rgb_to_hsv(img):
    r, g, b = img[0], img[1], img[2]
    maxc = img.max(axis=0)
    minc = img.min(axis=0)
    v = maxc
    delta = maxc - minc
    s = np.where(maxc > 0, delta / np.where(maxc > 0, maxc, 1), 0)
    dz = np.where(delta > 0, delta, 1)
    rc = (maxc - r) / dz
    gc = (maxc - g) / dz
    bc = (maxc - b) / dz
    h = np.where(maxc == r, bc - gc,
                 np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0)
    return h, s, v


def _hsv_to_rgb(h, s, v):
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    idx = i.astype(np.intp) % 6
    r = np.choose(idx, [v, q, p, p, t, v])
    g = np.choose(idx, [t, v, v, q, p, p])
    b = np.choose(idx, [p, p, t, v, v, q])
    return np.stack([r, g, b]).astype(v.dtype)


def _adjust_hue(img, delta):
    h, s, v = _rgb_to_hsv(img)
    return _hsv_to_rgb((h + delta) % 1.0, s, v)


def photometric_distortion(img, spec: AugmentationSpec, rng, solarize_prob=0.0):
    """Color jitter (random order), random grayscale, solarize."""
    if spec.jitter_prob > 0 and rng.uniform() < spec.jitter_prob:
        bs, cs, ss, hs = spec.jitter_strengths
        order = rng.permutation(4)
        factors = {
            0: rng.uniform(max(0.0, 1.0 - bs), 1.0 + bs),
            1: rng.uniform(max(0.0, 1.0 - cs), 1.0 + cs),
            2: rng.uniform(max(0.0, 1.0 - ss), 1.0 + ss),
            3: rng.uniform(-hs, hs),
        }
        for op in order:
            f = factors[int(op)]
            if op == 0:
                img = img * f
            elif op == 1:
                mean = to_grayscale(img).mean()
                img = img * f + (1.0 - f) * mean
            elif op == 2:
                img = img * f + (1.0 - f) * to_grayscale(img)
            elif op == 3 and f != 0.0:
                img = _adjust_hue(np.clip(img, 0.0, 1.0), f)
            img = np.clip(img, 0.0, 1.0)
    if spec.grayscale_prob > 0 and rng.uniform() < spec.grayscale_prob:
        img = to_grayscale(img)
    if solarize_prob > 0 and rng.uniform() < solarize_prob:
        img = np.where(img >= SOLARIZE_THRESHOLD, 1.0 - img, img).astype(img.dtype)
    return np.clip(img, 0.0, 1.0)


def blur_kernel(side, sigma, dtype=np.float32):
    """1-d gaussian kernel; width = side/10 rounded up to the next odd."""
    k = math.ceil(side / 10)
    if k % 2 == 0:
        k += 1
    xs = np.arange(k, dtype=np.float64) - k // 2
    kern = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return (kern / kern.sum()).astype(dtype)


def _separable_blur(img, kern):
    r = len(kern) // 2
    c, h, w = img.shape
    pad = np.pad(img, ((0, 0), (r, r), (0, 0)), mode="reflect")
    tmp = np.zeros_like(img)
    for i, kv in enumerate(kern):
        tmp += kv * pad[:, i:i + h, :]
    pad = np.pad(tmp, ((0, 0), (0, 0), (r, r)), mode="reflect")
    out = np.zeros_like(img)
    for i, kv in enumerate(kern):
        out += kv * pad[:, :, i:i + w]
    return out


def gaussian_blur(img, prob, rng, sigma_range=(0.1, 2.0)):
    if prob <= 0 or rng.uniform() >= prob:
        return img
    sigma = rng.uniform(sigma_range[0], sigma_range[1])
    return _separable_blur(img, blur_kernel(img.shape[-1], sigma, img.dtype))


def normalize(img, spec: AugmentationSpec):
    mean = np.asarray(spec.normalize_mean, dtype=img.dtype)[:, None, None]
    std = np.asarray(spec.normalize_std, dtype=img.dtype)[:, None, None]
    return (img - mean) / std


def augment_view(img, spec: AugmentationSpec, rng, view):
    """One full stochastic pass for view index 0 (a) or 1 (b)."""
    img = random_resized_crop(img, spec.crop_scale_range, spec.output_side, rng)
    img = horizontal_flip(img, spec.flip_prob, rng)
    img = photometric_distortion(img, spec, rng, solarize_prob=spec.solarize_probs[view])
    img = gaussian_blur(img, spec.blur_probs[view], rng)
    return normalize(np.clip(img, 0.0, 1.0), spec)


def generate_view_pair(img, spec: AugmentationSpec, seed_seq: np.random.SeedSequence):
    """Two independently augmented, normalized views of one image."""
    img = ensure_rgb(np.asarray(img, dtype=np.float32))
    child_a, child_b = seed_seq.spawn(2)
    view_a = augment_view(img, spec, np.random.Generator(np.random.PCG64(child_a)), 0)
    view_b = augment_view(img, spec, np.random.Generator(np.random.PCG64(child_b)), 1)
    return view_a, view_b


def eval_transform(img, spec: AugmentationSpec):
    """Deterministic eval preprocessing: full-image resize + normalization."""
    img = ensure_rgb(np.asarray(img, dtype=np.float32))
    c, h, w = img.shape
    if (h, w) != (spec.output_side, spec.output_side):
        img = crop_and_resize(img, 0, 0, h, w, spec.output_side)
    return normalize(np.clip(img, 0.0, 1.0), spec)
