from .budget import DEFAULT_BOUNDS, PerturbationBudget
from .filters import convolve_channels, gaussian_blur, gaussian_kernel1d, identity_grid, remap, resize_bilinear
from .image import (
    MIN_SIDE,
    ShapeError,
    as_image,
    check_same_shape,
    clip01,
    load_image,
    load_tensor,
    save_image,
    save_tensor,
)
from .metrics import all_metrics, l2_budget_norm, l2_distance, linf_distance, mse, psnr, ssim
from .rng import RngStream

__all__ = [
    "DEFAULT_BOUNDS",
    "PerturbationBudget",
    "MIN_SIDE",
    "RngStream",
    "ShapeError",
    "all_metrics",
    "as_image",
    "check_same_shape",
    "clip01",
    "convolve_channels",
    "gaussian_blur",
    "gaussian_kernel1d",
    "identity_grid",
    "l2_budget_norm",
    "l2_distance",
    "linf_distance",
    "load_image",
    "load_tensor",
    "mse",
    "psnr",
    "remap",
    "resize_bilinear",
    "save_image",
    "save_tensor",
    "ssim",
]
