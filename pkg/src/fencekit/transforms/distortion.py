"""Pixel-remapping defenses: SAT, RSCA, RSPA, SET and RDG.

Each ``apply_*`` takes a parameter record, an ``(H, W, C)`` image and an
:class:`~fencekit.core.RngStream`, and returns a new image of the same shape.
Parameters that are pixel counts are quoted for 299x299 inputs and rescaled
by ``side / reference_side`` at apply time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import RngStream, as_image, gaussian_blur, identity_grid, remap, resize_bilinear

REFERENCE_SIDE = 299


def _side(x: np.ndarray) -> int:
    return min(x.shape[0], x.shape[1])


@dataclass(frozen=True)
class SatSpec:
    """Stochastic affine transform: translate, rotate (degrees), scale."""

    translate_limit: float = 0.16
    rotate_limit: float = 4.0
    scale_limit: float = 0.16

    def __post_init__(self):
        if not 0 <= self.translate_limit < 0.5:
            raise ValueError(f"translate_limit must be in [0, 0.5), got {self.translate_limit}")
        if self.rotate_limit < 0:
            raise ValueError(f"rotate_limit must be >= 0, got {self.rotate_limit}")
        if not 0 <= self.scale_limit < 1:
            raise ValueError(f"scale_limit must be in [0, 1), got {self.scale_limit}")


@dataclass(frozen=True)
class RscaSpec:
    """Random sized crop, resized back to the input size."""

    min_fraction: float = 0.66
    aspect: float = 0.91

    def __post_init__(self):
        # min_fraction == 1 is admitted as the degenerate full-frame crop
        if not 0 < self.min_fraction <= 1:
            raise ValueError(f"min_fraction must be in (0, 1], got {self.min_fraction}")
        if not 0 < self.aspect <= 1:
            raise ValueError(f"aspect must be in (0, 1], got {self.aspect}")


@dataclass(frozen=True)
class RspaSpec:
    """Random resize and 0.5-padding, resized back."""

    scale_limit: float = 1.3

    def __post_init__(self):
        if not self.scale_limit > 1:
            raise ValueError(f"scale_limit must be > 1, got {self.scale_limit}")


@dataclass(frozen=True)
class SetSpec:
    """Stochastic elastic transform (random affine, then smoothed displacement field)."""

    affine_jitter: float = 20.0
    sigma: float = 10.0
    alpha: float = 60.0
    reference_side: int = REFERENCE_SIDE

    def __post_init__(self):
        for name in ("affine_jitter", "sigma", "alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.reference_side < 1:
            raise ValueError("reference_side must be positive")


@dataclass(frozen=True)
class RdgSpec:
    """Random distortion over grids."""

    grids: int = 26
    distort_limit: float = 0.33
    reference_side: int = REFERENCE_SIDE

    def __post_init__(self):
        if self.grids < 2:
            raise ValueError(f"grids must be >= 2, got {self.grids}")
        if not 0 <= self.distort_limit < 1:
            raise ValueError(f"distort_limit must be in [0, 1), got {self.distort_limit}")
        if self.reference_side < 1:
            raise ValueError("reference_side must be positive")


# ---------------------------------------------------------------------------- SAT


def sat_coordinates(shape, shift_x: float, shift_y: float, angle_deg: float, scale: float):
    """Source coordinates of the fused translate -> rotate -> scale warp.

    Content moves up by ``shift_y`` and left by ``shift_x`` pixels, is rotated
    by ``angle_deg`` about the image centre, then scaled by ``scale`` about the
    centre (so ``scale > 1`` crops and ``scale < 1`` pads).
    """
    h, w = shape[:2]
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    map_x, map_y = identity_grid(h, w)
    # undo scaling
    u = (map_y - cy) / scale
    v = (map_x - cx) / scale
    # undo rotation
    theta = math.radians(angle_deg)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    src_y = cy + cos_t * u - sin_t * v
    src_x = cx + sin_t * u + cos_t * v
    # undo translation
    return src_x + shift_x, src_y + shift_y


def apply_sat(spec: SatSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    h, w, _ = x.shape
    t, r, s = spec.translate_limit, spec.rotate_limit, spec.scale_limit
    shift_x = rng.uniform(-t, t) * w
    shift_y = rng.uniform(-t, t) * h
    angle = rng.uniform(-r, r)
    scale = rng.uniform(1.0 - s, 1.0 + s)
    map_x, map_y = sat_coordinates(x.shape, shift_x, shift_y, angle, scale)
    return remap(x, map_x, map_y, border=0.0)


# ---------------------------------------------------------------------------- RSCA


def apply_rsca(spec: RscaSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    h, w, _ = x.shape
    if math.floor(h * spec.min_fraction) < 2:
        raise ValueError(f"crop degenerate: floor({h} * {spec.min_fraction}) < 2")
    h_new = int(math.floor(rng.uniform(h * spec.min_fraction, h)))
    w_new = min(w, int(math.floor(h_new * spec.aspect)))
    if h_new < 2 or w_new < 2:
        raise ValueError(f"crop degenerate: {h_new}x{w_new}")
    y1 = int(math.floor((h - h_new) * rng.uniform()))
    x1 = int(math.floor((w - w_new) * rng.uniform()))
    crop = x[y1 : y1 + h_new, x1 : x1 + w_new]
    return resize_bilinear(crop, h, w)


# ---------------------------------------------------------------------------- RSPA


def apply_rspa(spec: RspaSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    h, w, c = x.shape
    canvas_h = int(math.floor(spec.scale_limit * h))
    canvas_w = int(math.floor(spec.scale_limit * w))
    h_new = int(rng.integers(h, canvas_h))
    w_new = int(min(max(round(h_new * w / h), w), canvas_w))
    resized = resize_bilinear(x, h_new, w_new)
    canvas = np.full((canvas_h, canvas_w, c), 0.5)
    oy = int(rng.integers(0, canvas_h - h_new))
    ox = int(rng.integers(0, canvas_w - w_new))
    canvas[oy : oy + h_new, ox : ox + w_new] = resized
    return resize_bilinear(canvas, h, w)


# ---------------------------------------------------------------------------- SET


def set_control_points(h: int, w: int) -> np.ndarray:
    """Fixed (x, y) control points for the affine stage."""
    return np.array([[w / 4, h / 4], [3 * w / 4, h / 4], [w / 4, 3 * h / 4]], dtype=np.float64)


def _collinear(pts: np.ndarray, tol: float = 1e-9) -> bool:
    a, b, c = pts
    cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return abs(cross) < tol


def solve_affine(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """2x3 matrix ``A`` with ``A @ [x, y, 1] = dst`` for the three point pairs."""
    lhs = np.hstack([src, np.ones((3, 1))])
    return np.linalg.solve(lhs, dst).T


def apply_set(spec: SetSpec, x, rng: RngStream, max_retries: int = 10) -> np.ndarray:
    x = as_image(x)
    h, w, _ = x.shape
    scale = _side(x) / spec.reference_side
    jitter_limit = spec.affine_jitter * scale
    sigma = spec.sigma * scale
    alpha = spec.alpha * scale

    src = set_control_points(h, w)
    jitter = None
    for _ in range(max_retries + 1):
        candidate = rng.uniform(-jitter_limit, jitter_limit, size=(3, 2))
        if not _collinear(src + candidate):
            jitter = candidate
            break

    out = x
    if jitter is not None and np.any(jitter):
        # sample the input at A^-1(p) so the content follows A
        affine = solve_affine(src, src + jitter)
        inverse = np.linalg.inv(np.vstack([affine, [0.0, 0.0, 1.0]]))
        map_x, map_y = identity_grid(h, w)
        src_x = inverse[0, 0] * map_x + inverse[0, 1] * map_y + inverse[0, 2]
        src_y = inverse[1, 0] * map_x + inverse[1, 1] * map_y + inverse[1, 2]
        out = remap(x, src_x, src_y, border=0.0)

    field_x = rng.uniform(-1.0, 1.0, size=(h, w))
    field_y = rng.uniform(-1.0, 1.0, size=(h, w))
    if alpha == 0:
        return out.copy()
    dx = gaussian_blur(field_x, sigma) * alpha
    dy = gaussian_blur(field_y, sigma) * alpha
    map_x, map_y = identity_grid(h, w)
    return remap(out, map_x + dx, map_y + dy, border=0.0)


# ---------------------------------------------------------------------------- RDG


def rdg_grid_count(spec: RdgSpec, side: int) -> int:
    return max(2, int(round(spec.grids * side / spec.reference_side)))


def rdg_axis(n: int, cells: int, stretch: np.ndarray) -> np.ndarray:
    """Source coordinate for each of ``n`` output positions along one axis.

    Cell ``k`` spans ``[k, k+1] * (n-1)/cells``; its length is multiplied by
    ``1 + stretch[k]`` and the cumulative span is rescaled back to ``n - 1``.
    """
    bounds = np.linspace(0.0, n - 1.0, cells + 1)
    lengths = np.diff(bounds) * (1.0 + stretch)
    warped = np.concatenate([[0.0], np.cumsum(lengths)])
    warped *= (n - 1.0) / warped[-1]
    return np.interp(np.arange(n, dtype=np.float64), bounds, warped)


def apply_rdg(spec: RdgSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    h, w, _ = x.shape
    cells = rdg_grid_count(spec, _side(x))
    if min(h, w) / cells < 2:
        raise ValueError(f"grid cells smaller than 2 pixels ({cells} cells on {h}x{w})")
    stretch_x = rng.uniform(-spec.distort_limit, spec.distort_limit, size=cells)
    stretch_y = rng.uniform(-spec.distort_limit, spec.distort_limit, size=cells)
    xs = rdg_axis(w, cells, stretch_x)
    ys = rdg_axis(h, cells, stretch_y)
    map_y, map_x = np.meshgrid(ys, xs, indexing="ij")
    return remap(x, map_x, map_y, border=0.0)
