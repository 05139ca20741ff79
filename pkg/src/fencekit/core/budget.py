from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .metrics import l2_budget_norm, l2_distance, linf_distance

DEFAULT_BOUNDS = {"l2": 0.05, "linf": 8.0 / 255.0}


@dataclass(frozen=True)
class PerturbationBudget:
    """Norm cap on an adversarial perturbation.

    ``l2`` bounds are RMS values (see :func:`~fencekit.core.metrics.l2_distance`).
    """

    kind: str = "l2"
    bound: float | None = None

    def __post_init__(self):
        if self.kind not in DEFAULT_BOUNDS:
            raise ValueError(f"budget kind must be 'l2' or 'linf', got {self.kind!r}")
        if self.bound is None:
            object.__setattr__(self, "bound", DEFAULT_BOUNDS[self.kind])
        if not self.bound > 0:
            raise ValueError(f"budget bound must be > 0, got {self.bound}")

    def distance(self, a, b) -> float:
        return l2_distance(a, b) if self.kind == "l2" else linf_distance(a, b)

    def admits(self, a, b, tol: float = 1e-9) -> bool:
        return self.distance(a, b) <= self.bound + tol

    def project(self, x: np.ndarray, x_adv: np.ndarray) -> np.ndarray:
        """Project ``x_adv`` (single image or batch) onto the budget ball around ``x``, then into [0, 1]."""
        delta = x_adv - x
        if self.kind == "linf":
            delta = np.clip(delta, -self.bound, self.bound)
        else:
            per_image = delta.reshape(delta.shape[0], -1) if delta.ndim == 4 else delta.reshape(1, -1)
            radius = l2_budget_norm(self.bound, per_image.shape[1])
            norms = np.sqrt(np.sum(per_image * per_image, axis=1))
            scale = np.where(norms > radius, radius / np.maximum(norms, 1e-300), 1.0)
            shape = (-1,) + (1,) * (delta.ndim - 1) if delta.ndim == 4 else ()
            delta = delta * (scale.reshape(shape) if delta.ndim == 4 else scale[0])
        return np.clip(x + delta, 0.0, 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "bound": self.bound}
