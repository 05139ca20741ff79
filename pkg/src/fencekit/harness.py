"""Defense x attack evaluation grids and rounds-to-ASR curves.

Work is split into independent units whose randomness is keyed only by
``(seed, role, defense, attack, sample)``, so a process pool returns exactly
what a serial run returns.  Standard attacks are generated once on the
undefended model and then classified through every defense; defense-aware
attacks run inside their cell.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .attacks import DEFENSE_AWARE, AttackConfig, AttackResult, defended_predict, run_attack
from .core import RngStream
from .data import Dataset
from .model import Classifier
from .pipeline import Pipeline, pipeline_name

BASELINE = "none"
CLEAN = "Clean"
SENTINEL = "cap+"
THRESHOLDS = (0.1, 0.3, 0.5, 0.7, 0.9)


class InsufficientSamples(ValueError):
    pass


def sig4(v):
    """Round to 4 significant digits (None and non-finite pass through)."""
    if v is None or not math.isfinite(v):
        return v
    return float(f"{v:.4g}")


@dataclass
class Samples:
    images: np.ndarray
    labels: np.ndarray
    targets: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)


def select_samples(model: Classifier, d: Dataset, n: int = 100, seed: int = 0) -> Samples:
    """``n`` test images the undefended model gets right, each with a random target label != truth."""
    rng = RngStream(seed, "samples")
    order = rng.fork("order").permutation(len(d))
    correct = order[model.predict_batch(d.images[order]) == d.labels[order]] if len(d) else order
    if len(correct) < n:
        raise InsufficientSamples(f"only {len(correct)} correctly classified images, {n} requested")
    idx = np.sort(correct[:n])
    k = d.num_classes
    targets = np.array(
        [(int(d.labels[i]) + 1 + int(rng.fork(f"target-{i}").integers(0, k - 2))) % k for i in idx], dtype=np.int64
    )
    return Samples(d.images[idx], d.labels[idx], targets, idx)


def defense_name(p: Pipeline | None) -> str:
    return BASELINE if p is None else pipeline_name(p)


@dataclass
class EvalCell:
    defense: str
    attack: str
    acc: float | None
    asr: float | None
    n_samples: int
    mean_l2: float | None = None
    mean_rounds: float | None = None
    acc_ci: list | None = None
    asr_ci: list | None = None
    trace: list | None = None
    error: str | None = None

    def __post_init__(self):
        if self.error is None:
            if not (0 <= self.acc <= 1 and 0 <= self.asr <= 1):
                raise ValueError(f"acc/asr out of range in {self.defense}/{self.attack}")
            if self.acc + self.asr > 1 + 1e-9:
                raise ValueError(f"acc + asr > 1 in {self.defense}/{self.attack}")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class EvalReport:
    seed: int
    defenses: list[str]
    attacks: list[str]
    cells: list[EvalCell]
    config: dict = field(default_factory=dict)
    rounds: list[dict] = field(default_factory=list)

    def cell(self, defense: str, attack: str) -> EvalCell:
        for c in self.cells:
            if c.defense == defense and c.attack == attack:
                return c
        raise KeyError((defense, attack))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "defenses": list(self.defenses),
            "attacks": list(self.attacks),
            "config": self.config,
            "cells": [c.to_dict() for c in self.cells],
            "rounds": self.rounds,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalReport":
        cells = [EvalCell(**c) for c in doc["cells"]]
        return cls(doc["seed"], doc["defenses"], doc["attacks"], cells, doc.get("config", {}), doc.get("rounds", []))


# ----------------------------------------------------------------------------- units


def _attack_rngs(seed: int, attack: str, n: int) -> list[RngStream]:
    # keyed without the defense, so defenses face common random numbers
    return [RngStream(seed, ("attack", attack, str(i))) for i in range(n)]


def _eval_rngs(seed: int, defense: str, attack: str, n: int) -> list[RngStream]:
    return [RngStream(seed, ("eval", defense, attack, str(i))) for i in range(n)]


def bootstrap_ci(hits: np.ndarray, rng: RngStream, reps: int = 1000, level: float = 0.95) -> list[float]:
    n = len(hits)
    if n == 0:
        return [float("nan"), float("nan")]
    means = hits[rng.integers(0, n - 1, size=(reps, n))].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, (1 + level) / 2])
    return [sig4(float(lo)), sig4(float(hi))]


def cumulative_curve(results: Sequence[AttackResult]) -> list[float]:
    """Fraction of samples whose first per-round success came at or before each round."""
    if not results:
        return []
    length = max((len(r.trace) for r in results), default=0)
    first = [next((i for i, hit in enumerate(r.trace) if hit), None) for r in results]
    out = []
    for k in range(length):
        out.append(sig4(sum(1 for f in first if f is not None and f <= k) / len(results)))
    return out


def _score(
    model, samples: Samples, defense: Pipeline | None, attack: str, adv: np.ndarray, seed: int, results, bootstrap: int
) -> EvalCell:
    dname = defense_name(defense)
    pred = defended_predict(model, defense, adv, _eval_rngs(seed, dname, attack, len(samples)))
    acc_hits = (pred == samples.labels).astype(np.float64)
    asr_hits = (pred == samples.targets).astype(np.float64)
    boot = RngStream(seed, ("bootstrap", dname, attack))
    cell = EvalCell(
        dname,
        attack,
        float(acc_hits.mean()),
        float(asr_hits.mean()),
        len(samples),
        acc_ci=bootstrap_ci(acc_hits, boot.fork("acc"), bootstrap) if bootstrap else None,
        asr_ci=bootstrap_ci(asr_hits, boot.fork("asr"), bootstrap) if bootstrap else None,
    )
    if results is not None:
        cell.mean_l2 = sig4(float(np.mean([r.l2 for r in results])))
        cell.mean_rounds = sig4(float(np.mean([r.rounds_used for r in results])))
        if any(r.trace for r in results):
            cell.trace = cumulative_curve(results)
    else:
        cell.mean_l2, cell.mean_rounds = 0.0, 0.0
    return cell


def _generate_unit(args):
    model, samples, cfg, seed = args
    rngs = _attack_rngs(seed, cfg.name, len(samples))
    return run_attack(cfg, model, samples.images, samples.targets, rngs, None)


def _cell_unit(args):
    model, samples, defense, cfg, seed, pre, bootstrap = args
    name = CLEAN if cfg is None else cfg.name
    try:
        if cfg is None:
            return _score(model, samples, defense, name, samples.images, seed, None, bootstrap)
        if pre is None:
            rngs = _attack_rngs(seed, name, len(samples))
            pre = run_attack(cfg, model, samples.images, samples.targets, rngs, defense)
        if isinstance(pre, str):
            raise RuntimeError(pre)
        adv = np.stack([r.adversarial for r in pre])
        return _score(model, samples, defense, name, adv, seed, pre, bootstrap)
    except Exception as err:  # a failing cell is recorded, not fatal
        return EvalCell(defense_name(defense), name, None, None, len(samples), error=f"{type(err).__name__}: {err}")


def evaluate_cell(
    model: Classifier,
    samples: Samples,
    defense: Pipeline | None,
    attack: AttackConfig | None,
    seed: int = 0,
    bootstrap: int = 1000,
) -> EvalCell:
    """One grid cell; ``attack=None`` is the Clean column.  Same keying as :func:`evaluate_grid`."""
    pre = None
    if attack is not None and attack.kind not in DEFENSE_AWARE:
        pre = _generate_unit_safe((model, samples, attack, seed))
    return _cell_unit((model, samples, defense, attack, seed, pre, bootstrap))


def _run_units(fn, units, jobs: int):
    if jobs <= 1 or len(units) <= 1:
        return [fn(u) for u in units]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, units))


def evaluate_grid(
    model: Classifier,
    samples: Samples,
    defenses: Sequence[Pipeline],
    attacks: Sequence[AttackConfig],
    seed: int = 0,
    jobs: int = 1,
    bootstrap: int = 1000,
    config: dict | None = None,
) -> EvalReport:
    """ACC/ASR for every (defense, attack) pair plus the Clean column and the no-defense row."""
    rows: list[Pipeline | None] = [None] + list(defenses)
    names = [defense_name(p) for p in rows]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate defense names: {names}")
    attack_names = [a.name for a in attacks]
    if len(set(attack_names)) != len(attack_names):
        raise ValueError(f"duplicate attack names: {attack_names}")
    standard = [a for a in attacks if a.kind not in DEFENSE_AWARE]
    generated = {}
    outputs = _run_units(_generate_unit_safe, [(model, samples, a, seed) for a in standard], jobs)
    for a, out in zip(standard, outputs):
        generated[a.name] = out
    units = []
    for p in rows:
        for cfg in [None] + list(attacks):
            pre = generated.get(cfg.name) if cfg is not None and cfg.kind not in DEFENSE_AWARE else None
            units.append((model, samples, p, cfg, seed, pre, bootstrap))
    cells = _run_units(_cell_unit, units, jobs)
    return EvalReport(seed, names, [CLEAN] + attack_names, cells, config or {})


def _generate_unit_safe(args):
    try:
        return _generate_unit(args)
    except Exception as err:
        return f"{type(err).__name__}: {err}"


# ----------------------------------------------------------------------------- rounds to ASR


def rounds_from_results(results: Sequence[AttackResult], thresholds: Sequence[float], cap: int) -> dict:
    """Smallest round count reaching each cumulative-ASR threshold, else ``"cap+"``."""
    n = len(results)
    done = sorted(r.rounds_used for r in results if r.success and r.rounds_used <= cap)
    out = {}
    for thr in thresholds:
        need = math.ceil(thr * n - 1e-9)
        if need <= 0:
            out[thr] = 0
        elif need <= len(done):
            out[thr] = int(done[need - 1])
        else:
            out[thr] = SENTINEL
    return out


def rounds_to_asr(
    model: Classifier,
    samples: Samples,
    defense: Pipeline,
    attack: AttackConfig,
    thresholds: Sequence[float] = THRESHOLDS,
    round_cap: int = 2000,
    seed: int = 0,
) -> dict:
    """Rounds an adaptive or BPDA-style attack needs for cumulative ASR to reach each threshold."""
    if attack.kind not in DEFENSE_AWARE:
        raise ValueError("rounds_to_asr needs a defense-aware attack with per-round traces")
    cfg = dataclasses.replace(attack, max_rounds=round_cap)
    rngs = _attack_rngs(seed, attack.name, len(samples))
    stop = max(thresholds) if thresholds else 0.0
    results = run_attack(cfg, model, samples.images, samples.targets, rngs, defense, stop_fraction=stop)
    return rounds_from_results(results, thresholds, round_cap)


def rounds_entry(defense: str, attack: str, rounds: dict, cap: int) -> dict:
    """JSON-ready record of a :func:`rounds_to_asr` result."""
    return {"defense": defense, "attack": attack, "cap": cap, "rounds": {f"{k:g}": v for k, v in rounds.items()}}


__all__ = [
    "BASELINE",
    "CLEAN",
    "SENTINEL",
    "THRESHOLDS",
    "EvalCell",
    "EvalReport",
    "InsufficientSamples",
    "Samples",
    "bootstrap_ci",
    "cumulative_curve",
    "defense_name",
    "evaluate_cell",
    "evaluate_grid",
    "rounds_entry",
    "rounds_from_results",
    "rounds_to_asr",
    "select_samples",
    "sig4",
]
