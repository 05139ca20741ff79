"""Image tensors and their on-disk forms.

Images are plain ``float64`` numpy arrays of shape ``(H, W, C)`` with values in
``[0, 1]`` and ``C`` equal to 1 or 3.  There is no wrapper class: helpers here
validate and convert, everything else just passes arrays around.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

MIN_SIDE = 8
TENSOR_MAGIC = b"FKT1"
_HEADER = struct.Struct("<4sIII")


class ShapeError(ValueError):
    """Two images that must agree in shape do not."""


def as_image(x, *, min_side: int = 1) -> np.ndarray:
    """Validate ``x`` as an image tensor and return it as float64 ``(H, W, C)``.

    A 2-D array is promoted to a single channel.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ShapeError(f"expected (H, W, 1|3) image, got shape {arr.shape}")
    if arr.shape[0] < min_side or arr.shape[1] < min_side:
        raise ShapeError(f"image {arr.shape[:2]} smaller than {min_side}x{min_side}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise ShapeError(f"shape mismatch: {np.shape(a)} vs {np.shape(b)}")


def clip01(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)


def load_image(path) -> np.ndarray:
    """Read an 8-bit grayscale or RGB PNG into a ``[0, 1]`` tensor."""
    try:
        img = Image.open(path)
        img.load()
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read image {path}: {exc}") from exc
    if img.mode == "L":
        arr = np.asarray(img, dtype=np.float64)[:, :, None]
    elif img.mode == "RGB":
        arr = np.asarray(img, dtype=np.float64)
    elif img.mode in ("RGBA", "P", "LA"):
        arr = np.asarray(img.convert("RGB"), dtype=np.float64)
    else:
        raise ValueError(f"unsupported image mode {img.mode!r} in {path} (need 8-bit L or RGB)")
    return arr / 255.0


def to_uint8(x: np.ndarray) -> np.ndarray:
    return np.round(clip01(as_image(x)) * 255.0).astype(np.uint8)


def save_image(x, path) -> None:
    data = to_uint8(x)
    if data.shape[2] == 1:
        Image.fromarray(data[:, :, 0], mode="L").save(path, format="PNG")
    else:
        Image.fromarray(data, mode="RGB").save(path, format="PNG")


def save_tensor(x, path) -> None:
    """Raw float32 tensor: 16-byte header (magic, H, W, C) then little-endian data."""
    arr = as_image(x)
    h, w, c = arr.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(TENSOR_MAGIC, h, w, c))
        fh.write(arr.astype("<f4").tobytes(order="C"))


def load_tensor(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated tensor header")
    magic, h, w, c = _HEADER.unpack_from(raw)
    if magic != TENSOR_MAGIC:
        raise ValueError(f"{path}: bad tensor magic {magic!r}")
    expected = h * w * c * 4
    if len(raw) - _HEADER.size != expected:
        raise ValueError(f"{path}: expected {expected} data bytes, found {len(raw) - _HEADER.size}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return data.reshape(h, w, c).astype(np.float64)
