"""Distortion metrics on ``[0, 1]`` images."""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import ShapeError, check_same_shape

PSNR_CAP = 100.0
SSIM_WINDOW = 8
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    check_same_shape(a, b)
    return a, b


def l2_distance(a, b) -> float:
    """Root-mean-square difference over all H*W*C values."""
    a, b = _pair(a, b)
    d = a - b
    return float(math.sqrt(float(np.sum(d * d)) / d.size))


def linf_distance(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.max(np.abs(a - b))) if a.size else 0.0


def l2_budget_norm(bound: float, size: int) -> float:
    """Euclidean radius corresponding to an RMS bound on ``size`` values."""
    return bound * math.sqrt(size)


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b) -> float:
    err = mse(a, b)
    if err < 1e-10:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(1.0 / err))


def ssim(a, b, window: int = SSIM_WINDOW) -> float:
    """Mean SSIM over all ``window x window`` patches (stride 1), averaged over channels."""
    a, b = _pair(a, b)
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    if a.shape[0] < window or a.shape[1] < window:
        raise ShapeError(f"image {a.shape[:2]} smaller than the {window}x{window} SSIM window")
    scores = []
    for ch in range(a.shape[2]):
        pa = sliding_window_view(a[:, :, ch], (window, window))
        pb = sliding_window_view(b[:, :, ch], (window, window))
        mu_a = pa.mean(axis=(-2, -1))
        mu_b = pb.mean(axis=(-2, -1))
        da = pa - mu_a[..., None, None]
        db = pb - mu_b[..., None, None]
        var_a = (da * da).mean(axis=(-2, -1))
        var_b = (db * db).mean(axis=(-2, -1))
        cov = (da * db).mean(axis=(-2, -1))
        num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
        den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
        scores.append(np.mean(num / den))
    return float(np.mean(scores))


def all_metrics(a, b) -> dict[str, float]:
    return {"l2": l2_distance(a, b), "linf": linf_distance(a, b), "ssim": ssim(a, b), "psnr": psnr(a, b)}
