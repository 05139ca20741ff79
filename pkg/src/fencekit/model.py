"""Small convolutional classifier with hand-written backpropagation.

Architecture (fixed)::

    conv 3x3x16 (same) -> ReLU -> maxpool 2x2
    conv 3x3x32 (same) -> ReLU -> maxpool 2x2
    dense -> num_classes logits

Inputs are ``(H, W, C)`` images in [0, 1], shifted by -0.5 internally so zero
padding corresponds to mid-grey.  All arithmetic is float64; weights are kept
on float32-representable values so checkpoints round-trip exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import RngStream, ShapeError, as_image

LAYERS = ("conv1_w", "conv1_b", "conv2_w", "conv2_b", "dense_w", "dense_b")
INPUT_SHIFT = 0.5


class TrainingDiverged(RuntimeError):
    pass


def _im2col(x: np.ndarray) -> np.ndarray:
    """``(N, H, W, C)`` -> ``(N*H*W, 9*C)`` patches of a zero-padded 3x3 'same' conv."""
    n, h, w, c = x.shape
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    win = sliding_window_view(padded, (3, 3), axis=(1, 2))  # (N, H, W, C, 3, 3)
    return win.transpose(0, 1, 2, 4, 5, 3).reshape(n * h * w, 9 * c)


def _col2im(cols: np.ndarray, shape) -> np.ndarray:
    """Adjoint of :func:`_im2col`."""
    n, h, w, c = shape
    cols = cols.reshape(n, h, w, 3, 3, c)
    padded = np.zeros((n, h + 2, w + 2, c))
    for dy in range(3):
        for dx in range(3):
            padded[:, dy : dy + h, dx : dx + w] += cols[:, :, :, dy, dx]
    return padded[:, 1:-1, 1:-1]


def _pool(x: np.ndarray):
    n, h, w, c = x.shape
    blocks = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4).reshape(n, h // 2, w // 2, c, 4)
    arg = blocks.argmax(axis=-1)
    return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0], arg


def _unpool(grad: np.ndarray, arg: np.ndarray, shape) -> np.ndarray:
    n, h, w, c = shape
    blocks = np.zeros(grad.shape + (4,))
    np.put_along_axis(blocks, arg[..., None], grad[..., None], axis=-1)
    return blocks.reshape(n, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3).reshape(shape)


def log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(z: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(z))


@dataclass
class Classifier:
    weights: dict[str, np.ndarray]
    num_classes: int
    side: int
    channels: int
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [k for k in LAYERS if k not in self.weights]
        if missing:
            raise ValueError(f"missing weights: {missing}")
        self.weights = {k: np.asarray(self.weights[k], dtype=np.float64) for k in LAYERS}
        if self.side % 4:
            raise ValueError(f"input side must be a multiple of 4, got {self.side}")
        expected = {
            "conv1_w": (9 * self.channels, 16),
            "conv1_b": (16,),
            "conv2_w": (9 * 16, 32),
            "conv2_b": (32,),
            "dense_w": ((self.side // 4) ** 2 * 32, self.num_classes),
            "dense_b": (self.num_classes,),
        }
        for k, shape in expected.items():
            if self.weights[k].shape != shape:
                raise ValueError(f"{k} has shape {self.weights[k].shape}, expected {shape}")

    @classmethod
    def initialize(cls, num_classes: int = 10, side: int = 32, channels: int = 3, seed: int = 0) -> "Classifier":
        """He-uniform init (bound sqrt(6 / fan_in)), zero biases."""
        rng = RngStream(seed, "init")
        shapes = {
            "conv1_w": (9 * channels, 16),
            "conv2_w": (9 * 16, 32),
            "dense_w": ((side // 4) ** 2 * 32, num_classes),
        }
        weights = {}
        for name, shape in shapes.items():
            bound = math.sqrt(6.0 / shape[0])
            weights[name] = rng.fork(name).uniform(-bound, bound, size=shape)
        weights["conv1_b"] = np.zeros(16)
        weights["conv2_b"] = np.zeros(32)
        weights["dense_b"] = np.zeros(num_classes)
        model = cls(weights, num_classes, side, channels)
        model.round_to_float32()
        return model

    @property
    def input_shape(self) -> tuple[int, int, int]:
        return (self.side, self.side, self.channels)

    def round_to_float32(self) -> None:
        for k in LAYERS:
            self.weights[k] = self.weights[k].astype(np.float32).astype(np.float64)

    # ------------------------------------------------------------------ core passes

    def _check_batch(self, xb) -> np.ndarray:
        xb = np.asarray(xb, dtype=np.float64)
        if xb.ndim == 3:
            raise ShapeError("expected a batch (N, H, W, C); use the single-image methods for one image")
        if xb.shape[1:] != self.input_shape:
            raise ShapeError(f"input shape {xb.shape[1:]} does not match model input {self.input_shape}")
        return xb

    def _forward(self, xb: np.ndarray):
        W = self.weights
        n = xb.shape[0]
        s = self.side
        x0 = xb - INPUT_SHIFT
        col1 = _im2col(x0)
        a1 = (col1 @ W["conv1_w"] + W["conv1_b"]).reshape(n, s, s, 16)
        r1 = np.maximum(a1, 0.0)
        p1, arg1 = _pool(r1)
        col2 = _im2col(p1)
        a2 = (col2 @ W["conv2_w"] + W["conv2_b"]).reshape(n, s // 2, s // 2, 32)
        r2 = np.maximum(a2, 0.0)
        p2, arg2 = _pool(r2)
        flat = p2.reshape(n, -1)
        logits = flat @ W["dense_w"] + W["dense_b"]
        cache = (x0.shape, col1, a1, arg1, p1.shape, col2, a2, arg2, p2.shape, flat)
        return logits, cache

    def _backward(self, cache, dlogits: np.ndarray, need_params: bool = False):
        W = self.weights
        x_shape, col1, a1, arg1, p1_shape, col2, a2, arg2, p2_shape, flat = cache
        grads = {}
        if need_params:
            grads["dense_w"] = flat.T @ dlogits
            grads["dense_b"] = dlogits.sum(axis=0)
        dp2 = (dlogits @ W["dense_w"].T).reshape(p2_shape)
        da2 = _unpool(dp2, arg2, a2.shape) * (a2 > 0)
        da2_flat = da2.reshape(-1, 32)
        if need_params:
            grads["conv2_w"] = col2.T @ da2_flat
            grads["conv2_b"] = da2_flat.sum(axis=0)
        dp1 = _col2im(da2_flat @ W["conv2_w"].T, p1_shape)
        da1 = _unpool(dp1, arg1, a1.shape) * (a1 > 0)
        da1_flat = da1.reshape(-1, 16)
        if need_params:
            grads["conv1_w"] = col1.T @ da1_flat
            grads["conv1_b"] = da1_flat.sum(axis=0)
        dx = _col2im(da1_flat @ W["conv1_w"].T, x_shape)
        return dx, grads

    # ------------------------------------------------------------------ batch API

    def logits_batch(self, xb) -> np.ndarray:
        return self._forward(self._check_batch(xb))[0]

    def predict_batch(self, xb) -> np.ndarray:
        return self.logits_batch(xb).argmax(axis=1)

    def loss_grad_batch(self, xb, targets):
        """Per-sample cross-entropy toward ``targets`` and its input gradient."""
        xb = self._check_batch(xb)
        targets = np.asarray(targets, dtype=np.int64)
        logits, cache = self._forward(xb)
        logp = log_softmax(logits)
        idx = np.arange(len(targets))
        loss = -logp[idx, targets]
        dlogits = np.exp(logp)
        dlogits[idx, targets] -= 1.0
        dx, _ = self._backward(cache, dlogits)
        return loss, dx, logits

    def backward_batch(self, xb, dlogits) -> tuple[np.ndarray, np.ndarray]:
        """Input gradient of ``sum(dlogits * logits)``; also returns the logits."""
        xb = self._check_batch(xb)
        logits, cache = self._forward(xb)
        dx, _ = self._backward(cache, np.asarray(dlogits, dtype=np.float64))
        return dx, logits

    # ------------------------------------------------------------------ single image API

    def _one(self, x) -> np.ndarray:
        x = as_image(x)
        if x.shape != self.input_shape:
            raise ShapeError(f"input shape {x.shape} does not match model input {self.input_shape}")
        return x[None]

    def logits(self, x) -> np.ndarray:
        return self.logits_batch(self._one(x))[0]

    def predict(self, x) -> tuple[np.ndarray, int]:
        z = self.logits(x)
        return z, int(np.argmax(z))

    def probabilities(self, x) -> np.ndarray:
        return softmax(self.logits(x))

    def loss(self, x, target: int) -> float:
        return float(-log_softmax(self.logits(x))[int(target)])

    def input_gradient(self, x, target: int) -> np.ndarray:
        """Gradient of the cross-entropy toward ``target`` with respect to ``x``."""
        self._check_label(target)
        _, dx, _ = self.loss_grad_batch(self._one(x), [int(target)])
        return dx[0]

    def logits_gradient(self, x, class_index: int) -> np.ndarray:
        """Gradient of logit ``class_index`` with respect to ``x``."""
        self._check_label(class_index)
        onehot = np.zeros((1, self.num_classes))
        onehot[0, int(class_index)] = 1.0
        dx, _ = self.backward_batch(self._one(x), onehot)
        return dx[0]

    def _check_label(self, k) -> None:
        if not 0 <= int(k) < self.num_classes:
            raise ValueError(f"class index {k} outside [0, {self.num_classes})")

    def accuracy(self, images, labels, batch: int = 500) -> float:
        if len(labels) == 0:
            return float("nan")
        hits = 0
        for i in range(0, len(labels), batch):
            hits += int(np.sum(self.predict_batch(images[i : i + batch]) == labels[i : i + batch]))
        return hits / len(labels)

    # ------------------------------------------------------------------ checkpoints

    def save(self, path) -> None:
        """Write ``path`` (float32 little-endian blob) and ``path.json`` (manifest)."""
        path = Path(path)
        manifest = {
            "format": "fencekit-weights-1",
            "num_classes": self.num_classes,
            "side": self.side,
            "channels": self.channels,
            "info": self.info,
            "tensors": [],
        }
        offset = 0
        chunks = []
        for name in LAYERS:
            arr = self.weights[name].astype("<f4")
            manifest["tensors"].append({"name": name, "shape": list(arr.shape), "offset": offset})
            chunks.append(arr.tobytes())
            offset += arr.nbytes
        path.write_bytes(b"".join(chunks))
        Path(str(path) + ".json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    @classmethod
    def load(cls, path) -> "Classifier":
        path = Path(path)
        manifest_path = Path(str(path) + ".json")
        if not path.is_file() or not manifest_path.is_file():
            raise FileNotFoundError(f"checkpoint {path} or its manifest {manifest_path} is missing")
        manifest = json.loads(manifest_path.read_text())
        blob = path.read_bytes()
        weights = {}
        for t in manifest["tensors"]:
            count = int(np.prod(t["shape"]))
            end = t["offset"] + 4 * count
            if end > len(blob):
                raise ValueError(f"checkpoint blob too short for tensor {t['name']}")
            weights[t["name"]] = np.frombuffer(blob[t["offset"] : end], dtype="<f4").reshape(t["shape"]).astype(np.float64)
        return cls(weights, manifest["num_classes"], manifest["side"], manifest["channels"], manifest.get("info", {}))


# ----------------------------------------------------------------------------- training


def train(
    dataset,
    epochs: int = 12,
    lr: float = 0.02,
    seed: int = 0,
    batch_size: int = 64,
    momentum: float = 0.9,
    test=None,
    log=None,
) -> Classifier:
    """Minibatch SGD with momentum on softmax cross-entropy.

    Deterministic given ``seed``.  Final train (and test, if given) accuracy
    is stored in ``model.info``.
    """
    if len(dataset) == 0:
        raise ValueError("empty training split")
    h, w, c = dataset.image_shape
    if h != w:
        raise ValueError(f"square images required, got {h}x{w}")
    model = Classifier.initialize(dataset.num_classes, h, c, seed)
    velocity = {k: np.zeros_like(v) for k, v in model.weights.items()}
    rng = RngStream(seed, "train")
    n = len(dataset)
    for epoch in range(epochs):
        order = rng.fork(f"epoch-{epoch}").permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            xb, yb = dataset.images[idx], dataset.labels[idx]
            logits, cache = model._forward(xb)
            logp = log_softmax(logits)
            loss = -logp[np.arange(len(yb)), yb]
            if not np.all(np.isfinite(loss)):
                raise TrainingDiverged(f"non-finite loss in epoch {epoch}")
            total += float(loss.sum())
            dlogits = np.exp(logp)
            dlogits[np.arange(len(yb)), yb] -= 1.0
            _, grads = model._backward(cache, dlogits / len(yb), need_params=True)
            for k in LAYERS:
                velocity[k] = momentum * velocity[k] - lr * grads[k]
                model.weights[k] = model.weights[k] + velocity[k]
        if log:
            log(f"epoch {epoch + 1}/{epochs}: loss {total / n:.4f}")
    model.round_to_float32()
    model.info = {"epochs": epochs, "lr": lr, "seed": seed, "train_accuracy": model.accuracy(dataset.images, dataset.labels)}
    if test is not None and len(test):
        model.info["test_accuracy"] = model.accuracy(test.images, test.labels)
    return model
