"""Independent reference implementations and test images shared by the suites."""

import math

import numpy as np
from scipy import ndimage


def random_image(seed, shape=(32, 32, 3)):
    return np.random.default_rng(seed).uniform(0, 1, shape)


def smooth_image(seed, shape=(32, 32, 3)):
    """Photo-like test image: a few low-frequency sinusoids over a gradient."""
    rng = np.random.default_rng(seed)
    h, w, c = shape
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    out = np.empty(shape)
    for ch in range(c):
        v = 0.5 + 0.2 * (yy - 0.5) * rng.uniform(-1, 1) + 0.2 * (xx - 0.5) * rng.uniform(-1, 1)
        for _ in range(4):
            fy, fx = rng.uniform(0.5, 4, 2)
            v += 0.08 * np.sin(2 * np.pi * (fy * yy + fx * xx) + rng.uniform(0, 2 * np.pi))
        out[:, :, ch] = v
    return np.clip(out, 0, 1)


def sample_bilinear(x, src_x, src_y, cval=0.0):
    """Bilinear sampling with a constant-padded grid, via scipy."""
    out = np.empty(src_x.shape + (x.shape[2],))
    for ch in range(x.shape[2]):
        out[:, :, ch] = ndimage.map_coordinates(
            x[:, :, ch], [src_y, src_x], order=1, mode="grid-constant", cval=cval
        )
    return np.clip(out, 0, 1)


def resize_oracle(x, out_h, out_w):
    """Pixel-centre aligned bilinear resize with edge clamping, via scipy."""
    h, w, c = x.shape
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0, w - 1)
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    out = np.empty((out_h, out_w, c))
    for ch in range(c):
        out[:, :, ch] = ndimage.map_coordinates(x[:, :, ch], [gy, gx], order=1, mode="nearest")
    return out


def dense_blur_2d(field, sigma):
    """Direct 2-D correlation with the outer-product Gaussian over a symmetric pad."""
    r = int(math.ceil(4 * sigma))
    k1 = np.array([math.exp(-(k * k) / (2 * sigma * sigma)) for k in range(-r, r + 1)])
    k1 /= k1.sum()
    k2 = np.outer(k1, k1)
    pad = field
    # repeated symmetric padding covers radii larger than the field
    while pad.shape[0] < field.shape[0] + 2 * r or pad.shape[1] < field.shape[1] + 2 * r:
        pad = np.pad(pad, ((pad.shape[0], pad.shape[0]), (pad.shape[1], pad.shape[1])), mode="symmetric")
    oy = (pad.shape[0] - field.shape[0]) // 2 - r
    ox = (pad.shape[1] - field.shape[1]) // 2 - r
    out = np.zeros(field.shape)
    for i in range(field.shape[0]):
        for j in range(field.shape[1]):
            out[i, j] = np.sum(k2 * pad[oy + i : oy + i + 2 * r + 1, ox + j : ox + j + 2 * r + 1])
    return out


def naive_dct2(block):
    n = block.shape[0]
    out = np.zeros((n, n))
    for u in range(n):
        for v in range(n):
            cu = math.sqrt(1 / n) if u == 0 else math.sqrt(2 / n)
            cv = math.sqrt(1 / n) if v == 0 else math.sqrt(2 / n)
            s = 0.0
            for i in range(n):
                for j in range(n):
                    s += block[i, j] * math.cos((2 * i + 1) * u * math.pi / (2 * n)) * math.cos(
                        (2 * j + 1) * v * math.pi / (2 * n)
                    )
            out[u, v] = cu * cv * s
    return out


def naive_idct2(coef):
    n = coef.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for u in range(n):
                for v in range(n):
                    cu = math.sqrt(1 / n) if u == 0 else math.sqrt(2 / n)
                    cv = math.sqrt(1 / n) if v == 0 else math.sqrt(2 / n)
                    s += cu * cv * coef[u, v] * math.cos((2 * i + 1) * u * math.pi / (2 * n)) * math.cos(
                        (2 * j + 1) * v * math.pi / (2 * n)
                    )
            out[i, j] = s
    return out


def naive_jpeg_gray_block(block01, table):
    """Round trip of one 8x8 grey block in [0, 1] through a quantization table."""
    coef = naive_dct2(block01 * 255.0 - 128.0)
    rec = naive_idct2(np.round(coef / table) * table)
    return np.clip((rec + 128.0) / 255.0, 0, 1)
