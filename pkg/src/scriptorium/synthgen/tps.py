"""Thin-plate-spline interpolation and image warping."""
import cv2
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .._validation import ConfigurationError


def _kernel(r2):
    # U(r) = r^2 log r^2, with U(0) = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = r2 * np.log(r2)
    return np.where(r2 > 0, out, 0.0)


def _pairwise_sq(a, b):
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


class ThinPlateSpline(BaseEstimator, TransformerMixin):
    """2-D thin-plate-spline mapping fitted on point correspondences.

    ``fit(source, target)`` solves for the minimum-bending-energy map ``f``
    with ``f(source[i]) == target[i]``; ``transform(points)`` evaluates ``f``.

    Parameters
    ----------
    regularization : float, default=0.0
        Ridge term added to the kernel diagonal. Zero gives exact interpolation.
    """

    def __init__(self, regularization=0.0):
        self.regularization = regularization

    def fit(self, source, target):
        source = np.asarray(source, dtype=np.float64).reshape(-1, 2)
        target = np.asarray(target, dtype=np.float64).reshape(-1, 2)
        n = len(source)
        if n != len(target):
            raise ValueError(f"got {n} source points but {len(target)} targets")
        if n < 3:
            raise ValueError("thin-plate spline needs at least 3 control points")
        affine = np.hstack([np.ones((n, 1)), source])
        if np.linalg.matrix_rank(affine) < 3:
            raise ValueError("control points are collinear; TPS system is singular")

        system = np.zeros((n + 3, n + 3))
        system[:n, :n] = _kernel(_pairwise_sq(source, source))
        system[:n, :n] += self.regularization * np.eye(n)
        system[:n, n:] = affine
        system[n:, :n] = affine.T
        rhs = np.zeros((n + 3, 2))
        rhs[:n] = target
        try:
            coef = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError as exc:
            raise ValueError("TPS system is singular") from exc

        self.control_points_ = source
        self.weights_ = coef[:n]
        self.affine_ = coef[n:]
        return self

    def transform(self, points):
        points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        k = _kernel(_pairwise_sq(points, self.control_points_))
        return (
            self.affine_[0]
            + points @ self.affine_[1:]
            + k @ self.weights_
        )


def control_grid(height, width, rows, cols):
    """Regular ``rows x cols`` grid of (x, y) points spanning the image."""
    if rows < 2 or cols < 2:
        raise ConfigurationError("TPS grid needs at least 2 rows and 2 columns")
    ys = np.linspace(0, height - 1, rows)
    xs = np.linspace(0, width - 1, cols)
    gx, gy = np.meshgrid(xs, ys)
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def apply_tps(image, source_points, displaced_points, fill=255):
    """Warp ``image`` so that content at ``source_points`` moves to ``displaced_points``.

    The output is resampled by pulling each output pixel from the input through
    the spline fitted on ``displaced -> source``. Lookups that land outside the
    input are filled with ``fill``.
    """
    image = np.asarray(image)
    source_points = np.asarray(source_points, dtype=np.float64)
    displaced_points = np.asarray(displaced_points, dtype=np.float64)
    h, w = image.shape[:2]
    for name, pts in (("source", source_points), ("displaced", displaced_points)):
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"{name}_points must have shape (n, 2)")
        if np.any(pts < -0.5) or np.any(pts[:, 0] > w - 0.5) or np.any(pts[:, 1] > h - 0.5):
            raise ValueError(f"{name}_points fall outside the image bounds")

    backward = ThinPlateSpline().fit(displaced_points, source_points)
    gy, gx = np.mgrid[0:h, 0:w]
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1).astype(np.float64)
    mapped = backward.transform(grid)
    map_x = mapped[:, 0].reshape(h, w).astype(np.float32)
    map_y = mapped[:, 1].reshape(h, w).astype(np.float32)
    border = fill if image.ndim == 2 else (fill,) * image.shape[2]
    return cv2.remap(
        image, map_x, map_y,
        interpolation=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=border,
    )
