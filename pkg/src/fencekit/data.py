"""Synthetic image datasets and their on-disk layout.

The bundled set is ten geometric shape classes rendered at 32x32 as a lit
shape on a dark backdrop, with random position, size, rotation, colours and
texture, so that class identity lives in coarse shape rather than in colour
or exact placement.  Images are stored on
8-bit levels, which makes the PNG directory form lossless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import RngStream, as_image, gaussian_blur, load_image, save_image

SHAPE_CLASSES = (
    "disk",
    "ring",
    "hbar",
    "vbar",
    "plus",
    "cross",
    "triangle",
    "hpair",
    "vpair",
    "corner",
)

SUPERSAMPLE = 4


@dataclass
class Dataset:
    images: np.ndarray  # (N, H, W, C) in [0, 1]
    labels: np.ndarray  # (N,) int64
    split: str = "train"
    class_names: tuple[str, ...] = field(default=SHAPE_CLASSES)

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise ValueError(f"images must be (N, H, W, C), got shape {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise ValueError(f"{len(self.images)} images but {len(self.labels)} labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise ValueError("labels must lie in [0, num_classes)")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.images[idx], self.labels[idx], self.split, self.class_names)


# ----------------------------------------------------------------------------- rendering


def _shape_mask(name: str, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Inside test in the shape's canonical frame, where it spans about [-0.9, 0.9].

    The classes differ in coarse layout so that they stay apart after heavy
    blur, local pixel scrambling or partial occlusion.
    """
    r = np.hypot(u, v)
    if name == "disk":
        return r < 0.8
    if name == "ring":
        return (r > 0.45) & (r < 0.9)
    if name == "hbar":
        return (np.abs(u) < 0.9) & (np.abs(v) < 0.3)
    if name == "vbar":
        return (np.abs(v) < 0.9) & (np.abs(u) < 0.3)
    if name == "plus":
        return ((np.abs(u) < 0.27) & (np.abs(v) < 0.9)) | ((np.abs(v) < 0.27) & (np.abs(u) < 0.9))
    if name == "cross":
        a, b = (u + v) / math.sqrt(2), (u - v) / math.sqrt(2)
        return ((np.abs(a) < 0.25) & (np.abs(b) < 1.0)) | ((np.abs(b) < 0.25) & (np.abs(a) < 1.0))
    if name == "triangle":
        # apex up (v grows downwards)
        return (v < 0.7) & (v > -0.9 + 1.3 * np.abs(u))
    if name == "hpair":
        return (np.hypot(u - 0.52, v) < 0.4) | (np.hypot(u + 0.52, v) < 0.4)
    if name == "vpair":
        return (np.hypot(u, v - 0.52) < 0.4) | (np.hypot(u, v + 0.52) < 0.4)
    if name == "corner":
        return ((np.abs(u + 0.55) < 0.3) & (np.abs(v) < 0.85)) | ((np.abs(v - 0.55) < 0.3) & (np.abs(u) < 0.85))
    raise ValueError(f"unknown shape {name!r}")


def _luma(rgb: np.ndarray) -> float:
    return float(0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2])


def _smooth_field(rng: RngStream, n: int, terms: int, max_freq: float) -> np.ndarray:
    """Sum of random low-frequency sinusoids on an ``n x n`` grid, unit-ish amplitude."""
    t = np.linspace(0.0, 1.0, n)
    yy, xx = np.meshgrid(t, t, indexing="ij")
    field = np.zeros((n, n))
    for _ in range(terms):
        fy, fx = rng.uniform(-max_freq, max_freq, size=2)
        field += np.sin(2 * np.pi * (fy * yy + fx * xx) + rng.uniform(0, 2 * np.pi))
    return field / math.sqrt(terms)


def render_shape(name: str, rng: RngStream, side: int = 32, channels: int = 3) -> np.ndarray:
    """Draw one randomized instance of a shape class, quantized to 8-bit levels.

    A lit shape on a dark, shaded backdrop.  Nuisance factors: placement,
    size, aspect, rotation, wobbly and rough outlines, colours, texture,
    clutter, focus blur and sensor noise.
    """
    n = side * SUPERSAMPLE
    coords = (np.arange(n) + 0.5) / SUPERSAMPLE - side / 2.0
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    half = rng.uniform(0.28, 0.42) * side
    aspect = math.exp(rng.uniform(-0.15, 0.15))
    angle = math.radians(rng.uniform(-15.0, 15.0))
    cx, cy = rng.uniform(-0.2, 0.2, size=2) * side
    dx, dy = xx - cx, yy - cy
    u = (math.cos(angle) * dx + math.sin(angle) * dy) / (half * aspect)
    v = (-math.sin(angle) * dx + math.cos(angle) * dy) * aspect / half
    # hand-drawn wobble plus fine outline roughness
    wobble = rng.uniform(0.0, 0.08)
    rough = rng.uniform(0.0, 0.06)
    u = u + wobble * _smooth_field(rng, n, 4, 3.0) + rough * _smooth_field(rng, n, 6, 12.0)
    v = v + wobble * _smooth_field(rng, n, 4, 3.0) + rough * _smooth_field(rng, n, 6, 12.0)
    cover = _shape_mask(name, u, v).reshape(side, SUPERSAMPLE, side, SUPERSAMPLE).mean(axis=(1, 3))

    bg = rng.uniform(0.0, 0.2, size=3)
    while True:
        fg = rng.uniform(0.0, 1.0, size=3)
        if abs(_luma(fg) - _luma(bg)) >= 0.3:
            break
    gy, gx = np.meshgrid(np.linspace(-0.5, 0.5, side), np.linspace(-0.5, 0.5, side), indexing="ij")
    tilt = rng.uniform(-0.15, 0.15, size=(2, 3))
    background = bg + gy[..., None] * tilt[0] + gx[..., None] * tilt[1]
    texture = rng.uniform(0.0, 0.06)
    background = background + texture * _smooth_field(rng, side, 5, 6.0)[..., None]
    foreground = fg + texture * _smooth_field(rng, side, 5, 6.0)[..., None]
    image = background * (1 - cover[..., None]) + foreground * cover[..., None]
    # at most one clutter speck, possibly over the shape
    for _ in range(int(rng.integers(0, 1))):
        bh, bw = rng.integers(1, 4, size=2)
        top, left = rng.integers(0, side - bh), rng.integers(0, side - bw)
        image[top : top + bh, left : left + bw] = rng.uniform(0.0, 1.0, size=3)
    focus = rng.uniform(0.0, 1.0)
    if focus > 0.4:
        image = gaussian_blur(image, focus - 0.4)
    image = image + rng.normal(0.0, rng.uniform(0.01, 0.04), size=image.shape)
    if channels == 1:
        image = image @ np.array([0.299, 0.587, 0.114])[:, None]
    return np.round(np.clip(image, 0.0, 1.0) * 255.0) / 255.0


def make_shapes_dataset(n_train: int = 12000, n_test: int = 1000, seed: int = 0, side: int = 32, channels: int = 3):
    """Balanced train/test splits drawn from disjoint random streams."""
    out = []
    for split, count in (("train", n_train), ("test", n_test)):
        root = RngStream(seed, ("shapes", split))
        labels = np.arange(count) % len(SHAPE_CLASSES)
        labels = labels[root.fork("order").permutation(count)]
        images = np.stack(
            [render_shape(SHAPE_CLASSES[k], root.fork(str(i)), side, channels) for i, k in enumerate(labels)]
        ) if count else np.zeros((0, side, side, channels))
        out.append(Dataset(images, labels, split, SHAPE_CLASSES))
    return out[0], out[1]


def make_blobs_dataset(n: int = 400, seed: int = 0, side: int = 16, split: str = "train") -> Dataset:
    """Two linearly separable classes: a bright blob in the left or right half."""
    rng = RngStream(seed, ("blobs", split))
    labels = rng.integers(0, 1, size=n)
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    images = []
    for i, k in enumerate(labels):
        r = rng.fork(str(i))
        cx = r.uniform(0.1, 0.35) * side + (side / 2 if k else 0)
        cy = r.uniform(0.25, 0.75) * side
        blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * (0.1 * side) ** 2))
        img = 0.2 + 0.6 * blob + r.normal(0, 0.02, size=(side, side))
        images.append(np.clip(img, 0, 1)[..., None])
    stacked = np.stack(images) if images else np.zeros((0, side, side, 1))
    return Dataset(stacked, labels, split, ("left", "right"))


# ----------------------------------------------------------------------------- files


def save_dataset(d: Dataset, root) -> None:
    """Write ``<root>/<split>/<class>/<n>.png``."""
    base = Path(root) / d.split
    base.mkdir(parents=True, exist_ok=True)
    (Path(root) / "classes.txt").write_text("\n".join(d.class_names) + "\n")
    counters: dict[int, int] = {}
    for img, k in zip(d.images, d.labels):
        k = int(k)
        n = counters.get(k, 0)
        counters[k] = n + 1
        folder = base / d.class_names[k]
        folder.mkdir(parents=True, exist_ok=True)
        save_image(img, folder / f"{n}.png")


def load_dataset(root, split: str, class_names: tuple[str, ...] | None = None) -> Dataset:
    """Read a ``<split>/<class>/<n>.png`` tree.

    Class order comes from ``class_names``, else ``<root>/classes.txt``, else
    sorted folder names.
    """
    base = Path(root) / split
    if not base.is_dir():
        raise FileNotFoundError(f"no {split!r} split under {root}")
    listing = Path(root) / "classes.txt"
    if class_names:
        names = tuple(class_names)
    elif listing.is_file():
        names = tuple(line for line in listing.read_text().splitlines() if line)
    else:
        names = tuple(sorted(p.name for p in base.iterdir() if p.is_dir()))
    images, labels = [], []
    for k, name in enumerate(names):
        folder = base / name
        if not folder.is_dir():
            continue
        files = sorted(folder.glob("*.png"), key=lambda p: (len(p.stem), p.stem))
        for f in files:
            images.append(as_image(load_image(f)))
            labels.append(k)
    if not images:
        raise ValueError(f"split {split!r} under {root} holds no images")
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise ValueError(f"images have mixed shapes: {sorted(shapes)}")
    return Dataset(np.stack(images), np.array(labels), split, names)
