"""Resampling and filtering primitives shared by the transforms."""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

from .image import ShapeError


def remap(x: np.ndarray, map_x: np.ndarray, map_y: np.ndarray, border: float = 0.0) -> np.ndarray:
    """Bilinear resampling: ``out[i, j] = x(map_y[i, j], map_x[i, j])``.

    Reads outside the image return ``border``; neighbours of an out-of-range
    sample are blended with it, as if the image were surrounded by that value.
    """
    map_x = np.asarray(map_x, dtype=np.float64)
    map_y = np.asarray(map_y, dtype=np.float64)
    if map_x.shape != map_y.shape or map_x.ndim != 2:
        raise ShapeError(f"coordinate fields must be matching 2-D arrays, got {map_x.shape} and {map_y.shape}")
    if not (np.all(np.isfinite(map_x)) and np.all(np.isfinite(map_y))):
        raise ValueError("remap coordinates must be finite")
    h, w, c = x.shape
    x0 = np.floor(map_x)
    y0 = np.floor(map_y)
    fx = (map_x - x0)[..., None]
    fy = (map_y - y0)[..., None]
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    def tap(yy, xx):
        inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
        vals = x[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        return np.where(inside[..., None], vals, border)

    top = (1.0 - fx) * tap(y0, x0) + fx * tap(y0, x0 + 1)
    bottom = (1.0 - fx) * tap(y0 + 1, x0) + fx * tap(y0 + 1, x0 + 1)
    out = (1.0 - fy) * top + fy * bottom
    return np.clip(out, 0.0, 1.0)


def identity_grid(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(map_x, map_y)`` sampling every pixel at its own position."""
    map_y, map_x = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    return map_x, map_y


def resize_bilinear(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize with pixel-centre alignment and edge replication."""
    h, w, _ = x.shape
    if out_h < 1 or out_w < 1:
        raise ValueError(f"invalid target size {out_h}x{out_w}")
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    ys = np.clip(ys, 0.0, h - 1)
    xs = np.clip(xs, 0.0, w - 1)
    map_y, map_x = np.meshgrid(ys, xs, indexing="ij")
    return remap(x, map_x, map_y)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = int(math.ceil(4.0 * sigma))
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    weights = np.exp(-(k * k) / (2.0 * sigma * sigma))
    return weights / weights.sum()


def gaussian_blur(x: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur over the two spatial axes.

    Kernel radius is ``ceil(4 * sigma)``; borders use half-sample symmetric
    reflection, which keeps the image sum unchanged.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    if sigma == 0:
        return x.copy()
    kernel = gaussian_kernel1d(sigma)
    out = ndimage.correlate1d(x, kernel, axis=0, mode="reflect")
    return ndimage.correlate1d(out, kernel, axis=1, mode="reflect")


def convolve_channels(x: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """2-D convolution of every channel with ``kernel`` (reflective borders)."""
    kernel = np.asarray(kernel, dtype=np.float64)[::-1, ::-1]
    return ndimage.correlate(x, kernel[:, :, None], mode="reflect")
