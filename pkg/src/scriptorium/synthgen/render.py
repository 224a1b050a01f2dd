"""Word rendering and the augmentation chain."""
from dataclasses import dataclass
from functools import lru_cache

import cv2
import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .._validation import ConfigurationError
from .recipe import RenderRecipe
from .tps import apply_tps, control_grid

# Vertical extent reference so that every word in a font is scaled alike.
_EXTENT_REFERENCE = "AHbdfhklgjpqyQ"
_RENDER_SIZE = 96
_MARGIN = 0.125


@lru_cache(maxsize=512)
def _truetype(path, size):
    return ImageFont.truetype(str(path), size)


def render_word(word, font, canvas_height=64):
    """Render ``word`` as dark ink on a white grayscale canvas of height ``canvas_height``.

    Glyphs are drawn at a fixed large size, then scaled so the font's full
    ascender-to-descender extent fills the canvas minus a margin. Width follows
    the text advance.
    """
    if not word:
        raise ValueError("cannot render an empty word")
    if canvas_height < 16:
        raise ValueError("canvas_height must be >= 16")
    if font.codepoints and not any(font.has_glyph(c) for c in word):
        raise ValueError(f"font {font.name!r} has no glyph for any character of {word!r}")

    pil_font = _truetype(str(font.glyph_source), _RENDER_SIZE)
    ref_box = pil_font.getbbox(_EXTENT_REFERENCE, anchor="ls")
    box = pil_font.getbbox(word, anchor="ls")
    top = min(ref_box[1], box[1])
    bottom = max(ref_box[3], box[3])
    left = min(0, box[0])
    right = max(box[2], int(np.ceil(pil_font.getlength(word))))
    extent = bottom - top
    pad = int(round(extent * _MARGIN / (1 - 2 * _MARGIN)))
    width = right - left + 2 * pad
    height = extent + 2 * pad

    canvas = Image.new("L", (width, height), 255)
    ImageDraw.Draw(canvas).text((pad - left, pad - top), word, font=pil_font, fill=0, anchor="ls")
    if np.asarray(canvas).min() == 255:
        raise ValueError(f"font {font.name!r} produced no ink for {word!r}")

    scale = canvas_height / height
    out_w = max(1, int(round(width * scale)))
    canvas = canvas.resize((out_w, canvas_height), Image.Resampling.LANCZOS)
    return np.asarray(canvas, dtype=np.uint8).copy()


def rotate(image, degrees, fill=255):
    """Rotate around the center, expanding the canvas, then rescale to the original height."""
    if degrees == 0:
        return image.copy()
    h, w = image.shape[:2]
    m = cv2.getRotationMatrix2D((w / 2.0, h / 2.0), degrees, 1.0)
    cos, sin = abs(m[0, 0]), abs(m[0, 1])
    new_w = int(np.ceil(h * sin + w * cos))
    new_h = int(np.ceil(h * cos + w * sin))
    m[0, 2] += new_w / 2.0 - w / 2.0
    m[1, 2] += new_h / 2.0 - h / 2.0
    out = cv2.warpAffine(
        image, m, (new_w, new_h), flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT, borderValue=fill,
    )
    out_w = max(1, int(round(new_w * h / new_h)))
    return cv2.resize(out, (out_w, h), interpolation=cv2.INTER_AREA)


def tps_warp(image, grid, displacements):
    h, w = image.shape[:2]
    rows, cols = grid
    src = control_grid(h, w, rows, cols)
    dst = src + np.asarray(displacements, dtype=np.float64).reshape(-1, 2)
    dst[:, 0] = np.clip(dst[:, 0], 0, w - 1)
    dst[:, 1] = np.clip(dst[:, 1], 0, h - 1)
    return apply_tps(image, src, dst, fill=255)


def gaussian_blur(image, sigma):
    if sigma <= 0:
        return image.copy()
    return cv2.GaussianBlur(image, (0, 0), sigmaX=sigma, sigmaY=sigma, borderType=cv2.BORDER_REPLICATE)


def procedural_background(background_id, height=256, width=1024):
    """Paper-like texture: a warm tone plus low-frequency mottling and fine grain."""
    rng = np.random.Generator(np.random.Philox(key=0x9A9E8 + int(background_id)))
    tone = rng.uniform(0.86, 1.0) * np.array([1.0, rng.uniform(0.95, 1.0), rng.uniform(0.85, 0.98)])
    coarse = rng.normal(0.0, 1.0, size=(height // 32 + 1, width // 32 + 1)).astype(np.float32)
    coarse = cv2.resize(coarse, (width, height), interpolation=cv2.INTER_CUBIC)
    grain = rng.normal(0.0, 1.0, size=(height, width)).astype(np.float32)
    strength = rng.uniform(0.0, 0.04)
    lum = 1.0 + strength * coarse + 0.015 * grain
    img = 255.0 * tone[None, None, :] * lum[:, :, None]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def white_background(height=256, width=1024):
    return np.full((height, width, 3), 255, dtype=np.uint8)


def composite_background(word_image, background, offset=(0, 0)):
    """Superimpose a grayscale word image on a texture by per-channel multiplication.

    The background is tiled to cover the word image and cropped starting at
    ``offset`` (wrapped to the texture size). White word pixels become texture;
    black pixels stay black.
    """
    if background is None or np.asarray(background).size == 0:
        raise ConfigurationError("background pool is empty")
    background = np.asarray(background)
    if background.ndim == 2:
        background = np.repeat(background[:, :, None], 3, axis=2)
    h, w = word_image.shape[:2]
    bh, bw = background.shape[:2]
    oy, ox = offset[0] % bh, offset[1] % bw
    reps_y = -(-(h + oy) // bh)
    reps_x = -(-(w + ox) // bw)
    tiled = np.tile(background, (reps_y, reps_x, 1))[oy:oy + h, ox:ox + w]
    ink = word_image.astype(np.float32) / 255.0
    if ink.ndim == 2:
        ink = ink[:, :, None]
    out = ink * tiled.astype(np.float32)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def grayscale_dilation(image, radius):
    """Thicken dark strokes: a minimum filter over a disk of ``radius`` pixels."""
    if radius <= 0:
        return image.copy()
    size = 2 * radius + 1
    kernel = cv2.getStructuringElement(cv2.MORPH_ELLIPSE, (size, size))
    return cv2.erode(image, kernel, borderType=cv2.BORDER_REPLICATE)


def _luminance(img):
    return img @ np.array([0.299, 0.587, 0.114], dtype=np.float32)


def color_jitter(image, brightness=0.0, contrast=0.0, saturation=0.0, hue=0.0):
    """Brightness, contrast, saturation and hue adjustments applied in that order.

    Offsets are relative: a factor of ``1 + offset`` for the first three, and a
    hue rotation of ``hue`` turns. All-zero offsets return the input unchanged.
    """
    if brightness == contrast == saturation == hue == 0:
        return image.copy()
    img = image.astype(np.float32)
    img = img * (1.0 + brightness)
    img = np.clip(img, 0, 255)
    mean = _luminance(img).mean()
    img = np.clip((img - mean) * (1.0 + contrast) + mean, 0, 255)
    gray = _luminance(img)[:, :, None]
    img = np.clip((img - gray) * (1.0 + saturation) + gray, 0, 255)
    if hue != 0:
        hsv = cv2.cvtColor(img / 255.0, cv2.COLOR_RGB2HSV)
        hsv[:, :, 0] = np.mod(hsv[:, :, 0] + 360.0 * hue, 360.0)
        img = cv2.cvtColor(hsv, cv2.COLOR_HSV2RGB) * 255.0
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


@dataclass
class SyntheticSample:
    image: np.ndarray
    font_id: int
    word: str
    recipe: RenderRecipe


def generate_sample(word, font, recipe, backgrounds):
    """Run the full chain: render, rotate, TPS, blur, background, dilation, jitter."""
    if not 0 <= recipe.background_id < len(backgrounds):
        raise ConfigurationError(
            f"background_id {recipe.background_id} outside pool of {len(backgrounds)}"
        )
    img = render_word(word, font, recipe.canvas_height)
    img = rotate(img, recipe.rotation_deg)
    img = tps_warp(img, recipe.tps_grid, recipe.tps_displacements)
    img = gaussian_blur(img, recipe.blur_sigma)
    img = composite_background(img, backgrounds[recipe.background_id], recipe.background_offset)
    img = grayscale_dilation(img, recipe.dilation_radius)
    img = color_jitter(img, *recipe.jitter)
    return SyntheticSample(image=img, font_id=font.font_id, word=word, recipe=recipe)


def ink_fraction(image, margin=40):
    """Fraction of pixels darker than the median luminance by more than ``margin`` levels."""
    img = np.asarray(image, dtype=np.float32)
    lum = _luminance(img) if img.ndim == 3 else img
    return float(np.mean(lum < np.median(lum) - margin))
