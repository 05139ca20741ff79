"""Ordered composition of transforms, with JSON configuration.

A :class:`Pipeline` lists stages in input-application order: ``stages[0]`` sees
the raw image.  Ensemble names are written the other way round, with the stage
nearest the model first, so ``"FD+RDG"`` is ``[RDG, FD]``.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass
from typing import Any

import numpy as np

from .core import RngStream, as_image
from .transforms import CATEGORIES, KINDS, REGISTRY, get_transform


class PipelineError(ValueError):
    """Invalid pipeline configuration; ``stage`` is the failing index if known."""

    def __init__(self, message: str, stage: int | None = None):
        self.stage = stage
        super().__init__(message if stage is None else f"stage {stage}: {message}")


def default_label(index: int, kind: str) -> str:
    return f"stage-{index}-{kind}"


@dataclass(frozen=True)
class TransformSpec:
    kind: str
    params: Any = None
    rng_label: str = ""

    def __post_init__(self):
        info = get_transform(self.kind)
        if self.params is None:
            object.__setattr__(self, "params", info.spec_type())
        elif not isinstance(self.params, info.spec_type):
            raise TypeError(f"{self.kind} expects {info.spec_type.__name__}, got {type(self.params).__name__}")

    def apply(self, x: np.ndarray, rng: RngStream) -> np.ndarray:
        return REGISTRY[self.kind].apply(self.params, x, rng)


@dataclass(frozen=True)
class Pipeline:
    stages: tuple[TransformSpec, ...]

    def __post_init__(self):
        stages = tuple(self.stages)
        if not stages:
            raise PipelineError("empty pipeline")
        fixed = []
        for i, st in enumerate(stages):
            if not isinstance(st, TransformSpec):
                raise PipelineError(f"expected TransformSpec, got {type(st).__name__}", i)
            if not st.rng_label:
                st = dataclasses.replace(st, rng_label=default_label(i, st.kind))
            fixed.append(st)
        object.__setattr__(self, "stages", tuple(fixed))

    @classmethod
    def of(cls, *kinds_or_specs) -> "Pipeline":
        """Build from kind names (default params) and/or :class:`TransformSpec` objects."""
        return cls(tuple(s if isinstance(s, TransformSpec) else TransformSpec(s) for s in kinds_or_specs))

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(s.kind for s in self.stages)

    @property
    def name(self) -> str:
        return pipeline_name(self)

    @property
    def stochastic(self) -> bool:
        return any(REGISTRY[s.kind].stochastic for s in self.stages)

    def __call__(self, x, rng: RngStream) -> np.ndarray:
        return apply_pipeline(self, x, rng)


def apply_pipeline(p: Pipeline, x, rng: RngStream) -> np.ndarray:
    """Apply stages left to right; stage ``i`` draws from ``rng.fork(stage.rng_label)``."""
    out = as_image(x)
    for st in p.stages:
        out = st.apply(out, rng.fork(st.rng_label))
    return out


# ----------------------------------------------------------------------------- names


_NAME_PART = re.compile(r"^(?P<kind>[A-Za-z\-]+?)(?:[x×](?P<count>\d+))?$")


def pipeline_name(p: Pipeline) -> str:
    """Ensemble label, model-side stage first, repeats folded as ``FDx2``."""
    parts: list[list] = []
    for kind in reversed(p.kinds):
        if parts and parts[-1][0] == kind:
            parts[-1][1] += 1
        else:
            parts.append([kind, 1])
    return "+".join(k if n == 1 else f"{k}x{n}" for k, n in parts)


def parse_pipeline_name(name: str) -> Pipeline:
    """Inverse of :func:`pipeline_name` with default parameters, e.g. ``"FDx2+RDG"``."""
    kinds: list[str] = []
    for part in reversed(name.split("+")):
        m = _NAME_PART.match(part.strip())
        if not m or m.group("kind") not in REGISTRY:
            raise PipelineError(f"cannot parse pipeline name component {part!r}")
        kinds.extend([m.group("kind")] * int(m.group("count") or 1))
    return Pipeline.of(*kinds)


# ----------------------------------------------------------------------------- config


def _params_from_dict(kind: str, raw: dict, index: int):
    spec_type = REGISTRY[kind].spec_type
    allowed = {f.name for f in dataclasses.fields(spec_type)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise PipelineError(f"unknown parameter(s) for {kind}: {', '.join(unknown)}", index)
    values = {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items()}
    try:
        return spec_type(**values)
    except (TypeError, ValueError) as err:
        raise PipelineError(f"{kind}: {err}", index) from err


def pipeline_from_dict(doc: Any) -> Pipeline:
    if not isinstance(doc, dict) or "stages" not in doc:
        raise PipelineError('pipeline config must be an object with a "stages" list')
    unknown = sorted(set(doc) - {"stages"})
    if unknown:
        raise PipelineError(f"unknown top-level key(s): {', '.join(unknown)}")
    raw_stages = doc["stages"]
    if not isinstance(raw_stages, list):
        raise PipelineError('"stages" must be a list')
    if not raw_stages:
        raise PipelineError("empty pipeline")
    stages = []
    for i, raw in enumerate(raw_stages):
        if not isinstance(raw, dict) or "kind" not in raw:
            raise PipelineError('each stage needs a "kind"', i)
        extra = sorted(set(raw) - {"kind", "params", "rng_label"})
        if extra:
            raise PipelineError(f"unknown stage key(s): {', '.join(extra)}", i)
        kind = raw["kind"]
        if kind not in REGISTRY:
            raise PipelineError(f"unknown transform kind {kind!r}; expected one of {', '.join(KINDS)}", i)
        params = raw.get("params") or {}
        if not isinstance(params, dict):
            raise PipelineError('"params" must be an object', i)
        label = raw.get("rng_label") or default_label(i, kind)
        stages.append(TransformSpec(kind, _params_from_dict(kind, params, i), str(label)))
    return Pipeline(tuple(stages))


def parse_pipeline_config(text: str) -> Pipeline:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise PipelineError(f"invalid JSON: {err}") from err
    return pipeline_from_dict(doc)


def _jsonable(value):
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


def pipeline_to_dict(p: Pipeline) -> dict:
    return {
        "stages": [
            {
                "kind": st.kind,
                "params": {k: _jsonable(v) for k, v in dataclasses.asdict(st.params).items()},
                "rng_label": st.rng_label,
            }
            for st in p.stages
        ]
    }


def serialize_pipeline(p: Pipeline) -> str:
    return json.dumps(pipeline_to_dict(p), indent=2, sort_keys=True)


def registry_list() -> list[dict]:
    """One entry per transform: kind, category, description and default parameters."""
    out = []
    for kind in KINDS:
        info = REGISTRY[kind]
        defaults = {k: _jsonable(v) for k, v in dataclasses.asdict(info.spec_type()).items()}
        out.append(
            {
                "kind": kind,
                "category": info.category,
                "stochastic": info.stochastic,
                "description": info.description,
                "defaults": defaults,
            }
        )
    return out


__all__ = [
    "CATEGORIES",
    "Pipeline",
    "PipelineError",
    "TransformSpec",
    "apply_pipeline",
    "default_label",
    "parse_pipeline_config",
    "parse_pipeline_name",
    "pipeline_from_dict",
    "pipeline_name",
    "pipeline_to_dict",
    "registry_list",
    "serialize_pipeline",
]
