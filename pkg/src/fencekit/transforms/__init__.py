"""The fifteen input-transform defenses and their registry.

Every registered transform is called as ``apply(spec, x, rng)`` and returns a
new ``(H, W, C)`` image in [0, 1].  Deterministic transforms ignore ``rng``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import compression, distortion, noise
from .compression import (
    BdrSpec,
    FdSpec,
    RjpegSpec,
    RwebpSpec,
    ShieldSpec,
    apply_bdr,
    apply_fd,
    apply_rjpeg,
    apply_rwebp,
    apply_shield,
    jpeg_roundtrip,
    quality_tables,
)
from .distortion import (
    RdgSpec,
    RscaSpec,
    RspaSpec,
    SatSpec,
    SetSpec,
    apply_rdg,
    apply_rsca,
    apply_rspa,
    apply_sat,
    apply_set,
)
from .noise import PdSpec, RgnSpec, RscdSpec, SgbSpec, SmbSpec, apply_pd, apply_rgn, apply_rscd, apply_sgb, apply_smb


@dataclass(frozen=True)
class TransformInfo:
    kind: str
    category: str
    spec_type: type
    apply: Callable
    stochastic: bool
    description: str


def _deterministic(fn):
    def wrapped(spec, x, rng=None):
        return fn(spec, x)

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


REGISTRY: dict[str, TransformInfo] = {
    info.kind: info
    for info in [
        TransformInfo("SAT", "distortion", SatSpec, apply_sat, True, "stochastic affine: translate, rotate, scale"),
        TransformInfo("RSCA", "distortion", RscaSpec, apply_rsca, True, "random sized crop, resized back"),
        TransformInfo("RSPA", "distortion", RspaSpec, apply_rspa, True, "random resize onto a grey canvas, resized back"),
        TransformInfo("SET", "distortion", SetSpec, apply_set, True, "random affine then smoothed elastic field"),
        TransformInfo("RDG", "distortion", RdgSpec, apply_rdg, True, "random per-cell stretching of a grid"),
        TransformInfo("FD", "compression", FdSpec, _deterministic(apply_fd), False, "two-band DCT quantization"),
        TransformInfo("BdR", "compression", BdrSpec, _deterministic(apply_bdr), False, "bit-depth reduction"),
        TransformInfo("R-JPEG", "compression", RjpegSpec, apply_rjpeg, True, "JPEG round trip at a random quality"),
        TransformInfo("R-WebP", "compression", RwebpSpec, apply_rwebp, True, "intra-predicted block codec at a random quality"),
        TransformInfo("SHIELD", "compression", ShieldSpec, apply_shield, True, "JPEG with a random quality per 8x8 block"),
        TransformInfo("SMB", "noise", SmbSpec, apply_smb, True, "random motion-blur line kernel"),
        TransformInfo("SGB", "noise", SgbSpec, apply_sgb, True, "blur, local pixel swaps, blur"),
        TransformInfo("RGN", "noise", RgnSpec, apply_rgn, True, "additive Gaussian noise of random strength"),
        TransformInfo("RSCD", "noise", RscdSpec, apply_rscd, True, "zero-filled random boxes"),
        TransformInfo("PD", "noise", PdSpec, apply_pd, True, "copy pixels from random nearby positions"),
    ]
}

KINDS = tuple(REGISTRY)
CATEGORIES = ("distortion", "compression", "noise")


def get_transform(kind: str) -> TransformInfo:
    try:
        return REGISTRY[kind]
    except KeyError:
        raise ValueError(f"unknown transform kind {kind!r}; expected one of {', '.join(KINDS)}") from None


def kinds_in(category: str) -> list[str]:
    return [k for k, info in REGISTRY.items() if info.category == category]


__all__ = [
    "CATEGORIES",
    "KINDS",
    "REGISTRY",
    "TransformInfo",
    "get_transform",
    "kinds_in",
    "compression",
    "distortion",
    "noise",
    "jpeg_roundtrip",
    "quality_tables",
    *[n for n in dir() if n.endswith("Spec") or n.startswith("apply_")],
]
