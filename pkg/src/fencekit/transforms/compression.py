"""Value-quantization defenses built on an 8x8 block DCT codec.

FD, R-JPEG and SHIELD share :func:`jpeg_roundtrip`-style quantization; R-WebP
adds intra prediction from already-reconstructed neighbour blocks; BdR
quantizes pixel values directly.  The codec works on 0..255-scaled values in
full-range BT.601 YCbCr with no chroma subsampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core import RngStream, as_image

BLOCK = 8

STD_LUMA = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)

STD_CHROMA = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.float64,
)

_RGB_TO_YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCC_TO_RGB = np.linalg.inv(_RGB_TO_YCC)
_CHROMA_OFFSET = np.array([0.0, 128.0, 128.0])


def dct_matrix(n: int = BLOCK) -> np.ndarray:
    """Orthonormal DCT-II matrix ``D`` (coefficients are ``D @ block @ D.T``)."""
    k = np.arange(n)[:, None]
    i = np.arange(n)[None, :]
    d = np.cos(np.pi * (2 * i + 1) * k / (2 * n)) * np.sqrt(2.0 / n)
    d[0] /= np.sqrt(2.0)
    return d


_D = dct_matrix()


def zigzag_indices(n: int = BLOCK) -> np.ndarray:
    """``order[u, v]`` = position of frequency ``(u, v)`` in the JPEG zig-zag scan."""
    order = np.empty((n, n), dtype=np.int64)
    cells = sorted(
        ((u, v) for u in range(n) for v in range(n)),
        key=lambda p: (p[0] + p[1], p[0] if (p[0] + p[1]) % 2 else p[1]),
    )
    for rank, (u, v) in enumerate(cells):
        order[u, v] = rank
    return order


def quality_scale(quality: int) -> float:
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in [1, 100], got {quality}")
    return 5000.0 / quality if quality < 50 else 200.0 - 2.0 * quality


def scaled_table(base: np.ndarray, quality: int) -> np.ndarray:
    """IJG quality scaling of a base table, clamped to [1, 255]."""
    table = np.floor((base * quality_scale(quality) + 50.0) / 100.0)
    return np.clip(table, 1.0, 255.0)


def quality_tables(quality: int, channels: int = 3) -> np.ndarray:
    """Per-component tables ``(channels, 8, 8)`` for a JPEG quality."""
    luma = scaled_table(STD_LUMA, quality)
    if channels == 1:
        return luma[None]
    chroma = scaled_table(STD_CHROMA, quality)
    return np.stack([luma, chroma, chroma])


# ----------------------------------------------------------------------------- codec helpers


def to_components(x: np.ndarray) -> np.ndarray:
    """[0, 1] RGB/gray image -> level-shifted 0..255 components ``(C, H, W)``."""
    v = x * 255.0
    if x.shape[2] == 3:
        v = v @ _RGB_TO_YCC.T + _CHROMA_OFFSET
    return np.moveaxis(v, 2, 0) - 128.0


def from_components(comp: np.ndarray) -> np.ndarray:
    v = np.moveaxis(comp + 128.0, 0, 2)
    if v.shape[2] == 3:
        v = (v - _CHROMA_OFFSET) @ _YCC_TO_RGB.T
    return np.clip(v / 255.0, 0.0, 1.0)


def to_blocks(comp: np.ndarray) -> np.ndarray:
    """``(C, H, W)`` -> edge-padded ``(C, by, bx, 8, 8)`` blocks."""
    c, h, w = comp.shape
    ph, pw = -h % BLOCK, -w % BLOCK
    padded = np.pad(comp, ((0, 0), (0, ph), (0, pw)), mode="edge")
    by, bx = padded.shape[1] // BLOCK, padded.shape[2] // BLOCK
    return padded.reshape(c, by, BLOCK, bx, BLOCK).transpose(0, 1, 3, 2, 4)


def from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    c, by, bx = blocks.shape[:3]
    return blocks.transpose(0, 1, 3, 2, 4).reshape(c, by * BLOCK, bx * BLOCK)[:, :h, :w]


def dct2(blocks: np.ndarray) -> np.ndarray:
    return _D @ blocks @ _D.T


def idct2(coefs: np.ndarray) -> np.ndarray:
    return _D.T @ coefs @ _D


def quantize_blocks(blocks: np.ndarray, tables: np.ndarray) -> np.ndarray:
    """DCT -> round(coef / table) * table -> inverse DCT; ``tables`` broadcasts against blocks."""
    coefs = dct2(blocks)
    return idct2(np.round(coefs / tables) * tables)


def _component_tables(tables, channels: int) -> np.ndarray:
    t = np.asarray(tables, dtype=np.float64)
    if t.shape == (BLOCK, BLOCK):
        t = np.broadcast_to(t, (channels, BLOCK, BLOCK))
    if t.shape != (channels, BLOCK, BLOCK):
        raise ValueError(f"expected an 8x8 table or {channels} of them, got shape {t.shape}")
    if np.any(t < 1):
        raise ValueError("quantization table entries must be >= 1")
    return t


def jpeg_roundtrip(x, tables) -> np.ndarray:
    """Lossy JPEG-style round trip with the given quantization table(s).

    ``tables`` is one 8x8 table used for every component, or one per component
    (Y, Cb, Cr for colour images).
    """
    x = as_image(x)
    h, w, c = x.shape
    t = _component_tables(tables, c)
    blocks = to_blocks(to_components(x))
    rec = quantize_blocks(blocks, t[:, None, None])
    return from_components(from_blocks(rec, h, w))


# ----------------------------------------------------------------------------- specs


def fd_table(band: int = 16, q_low: float = 30.0, q_high: float = 80.0) -> np.ndarray:
    """Two-band table: ``q_low`` for zig-zag index < ``band``, ``q_high`` elsewhere."""
    return np.where(zigzag_indices() < band, float(q_low), float(q_high))


@dataclass(frozen=True)
class FdSpec:
    """Feature-distillation style quantization, optionally repeated."""

    band: int = 16
    q_low: float = 30.0
    q_high: float = 80.0
    passes: int = 1

    def __post_init__(self):
        if not 0 <= self.band <= BLOCK * BLOCK:
            raise ValueError(f"band must be in [0, 64], got {self.band}")
        if self.q_low < 1 or self.q_high < 1:
            raise ValueError("q_low and q_high must be >= 1")
        if self.passes < 1:
            raise ValueError(f"passes must be >= 1, got {self.passes}")


@dataclass(frozen=True)
class BdrSpec:
    bits: int = 3

    def __post_init__(self):
        if not 1 <= self.bits <= 8:
            raise ValueError(f"bits must be in [1, 8], got {self.bits}")


def _check_quality_range(q_min: int, q_max: int) -> None:
    if not 1 <= q_min <= q_max <= 100:
        raise ValueError(f"need 1 <= q_min <= q_max <= 100, got q_min={q_min}, q_max={q_max}")


@dataclass(frozen=True)
class RjpegSpec:
    q_min: int = 20
    q_max: int = 80

    def __post_init__(self):
        _check_quality_range(self.q_min, self.q_max)


@dataclass(frozen=True)
class RwebpSpec:
    q_min: int = 20
    q_max: int = 80

    def __post_init__(self):
        _check_quality_range(self.q_min, self.q_max)


@dataclass(frozen=True)
class ShieldSpec:
    qualities: tuple[int, ...] = field(default=(20, 40, 60, 80))

    def __post_init__(self):
        object.__setattr__(self, "qualities", tuple(int(q) for q in self.qualities))
        if not self.qualities:
            raise ValueError("qualities must be non-empty")
        for q in self.qualities:
            if not 1 <= q <= 100:
                raise ValueError(f"quality {q} outside [1, 100]")


# ----------------------------------------------------------------------------- transforms


def apply_fd(spec: FdSpec, x) -> np.ndarray:
    out = as_image(x)
    table = fd_table(spec.band, spec.q_low, spec.q_high)
    for _ in range(spec.passes):
        out = jpeg_roundtrip(out, table)
    return out


def apply_bdr(spec: BdrSpec, x) -> np.ndarray:
    levels = 2**spec.bits - 1
    return np.round(as_image(x) * levels) / levels


def apply_rjpeg(spec: RjpegSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    quality = int(rng.integers(spec.q_min, spec.q_max))
    return jpeg_roundtrip(x, quality_tables(quality, x.shape[2]))


def shield_quality_map(spec: ShieldSpec, h: int, w: int, rng: RngStream) -> np.ndarray:
    """Quality per 8x8 block, drawn in raster order."""
    by, bx = -(-h // BLOCK), -(-w // BLOCK)
    idx = rng.integers(0, len(spec.qualities) - 1, size=(by, bx))
    return np.asarray(spec.qualities, dtype=np.int64)[idx]


def apply_shield(spec: ShieldSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    h, w, c = x.shape
    qmap = shield_quality_map(spec, h, w, rng)
    per_quality = {q: quality_tables(int(q), c) for q in np.unique(qmap)}
    # tables[c, by, bx] so every block is quantized with its own quality
    tables = np.stack([per_quality[q] for q in qmap.ravel()], axis=1)
    tables = tables.reshape(c, qmap.shape[0], qmap.shape[1], BLOCK, BLOCK)
    blocks = to_blocks(to_components(x))
    rec = quantize_blocks(blocks, tables)
    return from_components(from_blocks(rec, h, w))


def predictive_roundtrip(x, tables: np.ndarray) -> np.ndarray:
    """Intra-predicted block codec.

    Blocks are coded in raster order.  Each block is predicted by the mean of
    the reconstructed column to its left and row above (0.5 grey when neither
    exists); only the residual is DCT-quantized.
    """
    x = as_image(x)
    h, w, c = x.shape
    t = _component_tables(tables, c)
    blocks = to_blocks(to_components(x))
    by, bx = blocks.shape[1:3]
    rec = np.empty_like(blocks)
    grey = to_components(np.full((1, 1, c), 0.5))[:, 0, 0]
    for i in range(by):
        for j in range(bx):
            borders = []
            if j > 0:
                borders.append(rec[:, i, j - 1, :, -1])
            if i > 0:
                borders.append(rec[:, i - 1, j, -1, :])
            pred = np.mean(np.concatenate(borders, axis=1), axis=1) if borders else grey
            pred = pred[:, None, None]
            rec[:, i, j] = pred + quantize_blocks(blocks[:, i, j] - pred, t)
    return from_components(from_blocks(rec, h, w))


def apply_rwebp(spec: RwebpSpec, x, rng: RngStream) -> np.ndarray:
    x = as_image(x)
    quality = int(rng.integers(spec.q_min, spec.q_max))
    return predictive_roundtrip(x, quality_tables(quality, x.shape[2]))
