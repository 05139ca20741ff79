"""Noise-injection defenses: SMB, SGB, RGN, RSCD and PD."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..core import RngStream, as_image, clip01, convolve_channels, gaussian_blur

REFERENCE_SIDE = 299


def _odd(n: int) -> int:
    return n if n % 2 else n + 1


@dataclass(frozen=True)
class SmbSpec:
    """Stochastic motion blur; ``max_kernel`` is quoted at ``reference_side``."""

    max_kernel: int = 9
    reference_side: int = REFERENCE_SIDE

    def __post_init__(self):
        if self.max_kernel < 3:
            raise ValueError(f"max_kernel must be >= 3, got {self.max_kernel}")

    def kernel_limit(self, side: int) -> int:
        return max(3, _odd(int(round(self.max_kernel * side / self.reference_side))))


@dataclass(frozen=True)
class SgbSpec:
    """Stochastic glass blur."""

    sigma_min: float = 0.7
    sigma_max: float = 1.5
    max_delta_choices: tuple[int, ...] = field(default=(1, 2, 3, 4))
    iteration_choices: tuple[int, ...] = field(default=(1, 2, 3))

    def __post_init__(self):
        object.__setattr__(self, "max_delta_choices", tuple(int(v) for v in self.max_delta_choices))
        object.__setattr__(self, "iteration_choices", tuple(int(v) for v in self.iteration_choices))
        if not 0 <= self.sigma_min <= self.sigma_max:
            raise ValueError(f"need 0 <= sigma_min <= sigma_max, got {self.sigma_min}, {self.sigma_max}")
        if not self.max_delta_choices or min(self.max_delta_choices) < 0:
            raise ValueError("max_delta_choices must be non-empty and non-negative")
        if not self.iteration_choices or min(self.iteration_choices) < 0:
            raise ValueError("iteration_choices must be non-empty and non-negative")


@dataclass(frozen=True)
class RgnSpec:
    sigma_min: float = 0.0005
    sigma_max: float = 0.005

    def __post_init__(self):
        if not 0 <= self.sigma_min <= self.sigma_max:
            raise ValueError(f"need 0 <= sigma_min <= sigma_max, got sigma_min={self.sigma_min}, sigma_max={self.sigma_max}")


@dataclass(frozen=True)
class RscdSpec:
    """Random sized coarse dropout."""

    max_boxes: int = 8
    max_side: int = 8
    fill: float = 0.0

    def __post_init__(self):
        if self.max_boxes < 0:
            raise ValueError(f"max_boxes must be >= 0, got {self.max_boxes}")
        if self.max_side < 1:
            raise ValueError(f"max_side must be >= 1, got {self.max_side}")
        if not 0 <= self.fill <= 1:
            raise ValueError(f"fill must be in [0, 1], got {self.fill}")


@dataclass(frozen=True)
class PdSpec:
    """Pixel deflection.  ``None`` counts scale with the image from 299x299 values."""

    deflections: int | None = None
    window: int | None = None
    reference_deflections: int = 200
    reference_window: int = 10
    reference_side: int = REFERENCE_SIDE

    def __post_init__(self):
        if self.deflections is not None and self.deflections < 0:
            raise ValueError(f"deflections must be >= 0, got {self.deflections}")
        if self.window is not None and self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")

    def resolve(self, h: int, w: int) -> tuple[int, int]:
        deflections = self.deflections
        if deflections is None:
            deflections = int(round(self.reference_deflections * h * w / self.reference_side**2))
        window = self.window
        if window is None:
            window = max(1, int(round(self.reference_window * min(h, w) / self.reference_side)))
        return deflections, window


# ----------------------------------------------------------------------------- SMB


def line_kernel(size: int, angle: float) -> np.ndarray:
    """Normalized ``size x size`` kernel holding a line through the centre.

    ``angle`` is in radians from the horizontal; the line is rasterized with
    the midpoint (Bresenham) algorithm between rounded end points.
    """
    c = (size - 1) / 2.0
    dx, dy = c * math.cos(angle), -c * math.sin(angle)
    x0, y0 = int(round(c - dx)), int(round(c - dy))
    x1, y1 = int(round(c + dx)), int(round(c + dy))
    kernel = np.zeros((size, size))
    step_x = 1 if x1 >= x0 else -1
    step_y = 1 if y1 >= y0 else -1
    ax, ay = abs(x1 - x0), abs(y1 - y0)
    err = ax - ay
    x, y = x0, y0
    while True:
        kernel[y, x] = 1.0
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 > -ay:
            err -= ay
            x += step_x
        if e2 < ax:
            err += ax
            y += step_y
    return kernel / kernel.sum()


def apply_smb(spec: SmbSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    limit = spec.kernel_limit(min(x.shape[:2]))
    size = int(rng.choice(range(3, limit + 1, 2)))
    angle = rng.uniform(0.0, math.pi)
    return clip01(convolve_channels(x, line_kernel(size, angle)))


# ----------------------------------------------------------------------------- SGB


def glass_swaps(x: np.ndarray, max_delta: int, iterations: int, rng: RngStream) -> np.ndarray:
    """Raster-order pixel swaps with random offsets in ``[-max_delta, max_delta]``.

    Offsets that leave the image are clipped to the border.  Only positions
    change, so the multiset of pixel values is preserved.
    """
    out = np.array(x, dtype=np.float64, copy=True)
    h, w = out.shape[:2]
    for _ in range(iterations):
        offsets = rng.integers(-max_delta, max_delta, size=(h, w, 2))
        ty = np.clip(np.arange(h)[:, None] + offsets[:, :, 0], 0, h - 1)
        tx = np.clip(np.arange(w)[None, :] + offsets[:, :, 1], 0, w - 1)
        for i in range(h):
            for j in range(w):
                a, b = ty[i, j], tx[i, j]
                tmp = out[i, j].copy()
                out[i, j] = out[a, b]
                out[a, b] = tmp
    return out


def apply_sgb(spec: SgbSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    sigma = rng.uniform(spec.sigma_min, spec.sigma_max)
    max_delta = int(rng.choice(spec.max_delta_choices))
    iterations = int(rng.choice(spec.iteration_choices))
    out = gaussian_blur(x, sigma)
    out = glass_swaps(out, max_delta, iterations, rng)
    return clip01(gaussian_blur(out, sigma))


# ----------------------------------------------------------------------------- RGN


def apply_rgn(spec: RgnSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    sigma = rng.uniform(spec.sigma_min, spec.sigma_max)
    return clip01(x + rng.normal(0.0, sigma, size=x.shape))


# ----------------------------------------------------------------------------- RSCD


def rscd_boxes(spec: RscdSpec, h: int, w: int, rng: RngStream) -> list[tuple[int, int, int, int]]:
    """Draw ``(top, left, height, width)`` boxes in the order they are applied."""
    if spec.max_side >= min(h, w):
        raise ValueError(f"max_side {spec.max_side} must be smaller than the image side {min(h, w)}")
    count = int(math.floor(rng.uniform(0.0, spec.max_boxes)))
    boxes = []
    for _ in range(count):
        bh = int(math.floor(rng.uniform(1.0, spec.max_side)))
        bw = int(math.floor(rng.uniform(1.0, spec.max_side)))
        top = int(rng.integers(0, h - bh))
        left = int(rng.integers(0, w - bw))
        boxes.append((top, left, bh, bw))
    return boxes


def apply_rscd(spec: RscdSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    out = x.copy()
    for top, left, bh, bw in rscd_boxes(spec, x.shape[0], x.shape[1], rng):
        out[top : top + bh, left : left + bw, :] = spec.fill
    return out


# ----------------------------------------------------------------------------- PD


def apply_pd(spec: PdSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    h, w, _ = x.shape
    deflections, window = spec.resolve(h, w)
    out = x.copy()
    for _ in range(deflections):
        py = int(rng.integers(0, h - 1))
        px = int(rng.integers(0, w - 1))
        qy = int(rng.integers(max(0, py - window), min(h - 1, py + window)))
        qx = int(rng.integers(max(0, px - window), min(w - 1, px + window)))
        out[py, px] = out[qy, qx]
    return out
