"""Fixed-shape input preparation for the encoder."""
from pathlib import Path

import cv2
import numpy as np
import torch

from ..synthgen.dataset import load_image

INPUT_HEIGHT = 64
INPUT_WIDTH = 256
MEAN = 0.5
STD = 0.5


def fit_canvas(image, height=INPUT_HEIGHT, width=INPUT_WIDTH):
    """Resize to ``height`` keeping aspect ratio, then right-pad with white or center-crop."""
    img = np.asarray(image)
    if img.ndim == 2:
        img = np.repeat(img[:, :, None], 3, axis=2)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W) or (H, W, 3) image, got shape {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixels, got {img.dtype}")
    h, w = img.shape[:2]
    new_w = max(1, int(round(w * height / h)))
    if (h, w) != (height, new_w):
        interp = cv2.INTER_AREA if h > height else cv2.INTER_LINEAR
        img = cv2.resize(img, (new_w, height), interpolation=interp)
    if new_w >= width:
        left = (new_w - width) // 2
        return np.ascontiguousarray(img[:, left:left + width])
    out = np.full((height, width, 3), 255, dtype=np.uint8)
    out[:, :new_w] = img
    return out


def to_tensor(images):
    """Batch of images (arrays or paths) -> normalized float tensor ``(n, 3, 64, 256)``."""
    batch = []
    for item in images:
        if isinstance(item, (str, Path)):
            item = load_image(item)
        batch.append(fit_canvas(item))
    arr = np.stack(batch).astype(np.float32) / 255.0
    arr = (arr - MEAN) / STD
    return torch.from_numpy(arr).permute(0, 3, 1, 2).contiguous()
