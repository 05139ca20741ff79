"""Targeted white-box attacks on a :class:`~fencekit.model.Classifier`.

Every attack has a single-image entry point (``fgsm``, ``pgd_l2``, ...) and a
batched core used by the evaluation harness.  Batches only share arithmetic;
each sample draws its randomness from its own :class:`RngStream`, keyed by
round and ensemble index, so results do not depend on what else is in the batch.

Losses are cross-entropy toward the target label, minimized by descent.  The
``l2`` budget is an RMS bound; ``lr`` is the Euclidean length of one
normalized-gradient step.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import PerturbationBudget, RngStream, as_image, l2_budget_norm, l2_distance, linf_distance
from .model import Classifier
from .pipeline import Pipeline, apply_pipeline

ATTACK_KINDS = ("FGSM", "I-FGSM", "PGD", "CW", "BPDA", "EOT", "BPDA+EOT", "ADAPTIVE")
LINF_KINDS = ("FGSM", "I-FGSM")
DEFENSE_AWARE = ("BPDA", "EOT", "BPDA+EOT", "ADAPTIVE")
DEFAULT_ROUNDS = {"PGD": 1000, "BPDA": 50, "EOT": 50, "BPDA+EOT": 50, "ADAPTIVE": 2000}
CHUNK = 256


@dataclass(frozen=True)
class AttackConfig:
    kind: str
    budget: PerturbationBudget | None = None
    lr: float = 0.1
    max_rounds: int | None = None
    ensemble_size: int = 30
    binary_search_steps: int = 5
    max_iterations: int = 1000
    initial_const: float = 1.0
    epsilon: float = 0.03
    iterations: int = 10
    stall_rounds: int = 20
    g1_stages: int = 1

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}; expected one of {', '.join(ATTACK_KINDS)}")
        want = "linf" if self.kind in LINF_KINDS else "l2"
        if self.budget is None:
            budget = PerturbationBudget("linf", self.epsilon) if want == "linf" else PerturbationBudget("l2")
            object.__setattr__(self, "budget", budget)
        elif self.budget.kind != want:
            raise ValueError(f"{self.kind} needs an {want} budget, got {self.budget.kind}")
        if self.max_rounds is None:
            object.__setattr__(self, "max_rounds", DEFAULT_ROUNDS.get(self.kind, 0))
        for name in ("ensemble_size", "binary_search_steps", "max_iterations", "iterations", "stall_rounds", "g1_stages"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be >= 0")
        if not (self.lr > 0 and self.epsilon >= 0 and self.initial_const > 0):
            raise ValueError("lr and initial_const must be > 0, epsilon >= 0")

    @property
    def name(self) -> str:
        if self.kind in LINF_KINDS:
            return f"{self.kind}(eps={self.epsilon:g})"
        if self.kind in ("EOT", "BPDA+EOT", "ADAPTIVE"):
            return f"{self.kind}(n={self.ensemble_size},R={self.max_rounds})"
        if self.kind == "BPDA":
            return f"BPDA(R={self.max_rounds})"
        return self.kind

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["budget"] = self.budget.to_dict()
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "AttackConfig":
        allowed = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - allowed)
        if unknown:
            raise ValueError(f"unknown attack field(s): {', '.join(unknown)}")
        values = dict(doc)
        if isinstance(values.get("budget"), dict):
            values["budget"] = PerturbationBudget(**values["budget"])
        return cls(**values)


@dataclass
class AttackResult:
    adversarial: np.ndarray
    success: bool
    rounds_used: int
    l2: float
    linf: float
    target: int = -1
    trace: list[bool] = field(default_factory=list)

    @classmethod
    def build(cls, x, adv, success, rounds, target, trace=()) -> "AttackResult":
        return cls(adv, bool(success), int(rounds), l2_distance(x, adv), linf_distance(x, adv), int(target), list(trace))


# ----------------------------------------------------------------------------- helpers


def _sign(g: np.ndarray) -> np.ndarray:
    return np.sign(g)  # sign(0) == 0


def _loss_grad(model: Classifier, xb: np.ndarray, targets: np.ndarray):
    """Chunked :meth:`Classifier.loss_grad_batch` to bound im2col memory."""
    losses, grads, logits = [], [], []
    for i in range(0, len(xb), CHUNK):
        lo, g, z = model.loss_grad_batch(xb[i : i + CHUNK], targets[i : i + CHUNK])
        losses.append(lo)
        grads.append(g)
        logits.append(z)
    return np.concatenate(losses), np.concatenate(grads), np.concatenate(logits)


def _predict(model: Classifier, xb: np.ndarray) -> np.ndarray:
    return np.concatenate([model.predict_batch(xb[i : i + CHUNK]) for i in range(0, len(xb), CHUNK)])


def _l2_norms(d: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(d.reshape(len(d), -1) ** 2, axis=1))


def _unit(g: np.ndarray) -> np.ndarray:
    n = _l2_norms(g)
    return g / np.where(n > 0, n, 1.0).reshape((-1,) + (1,) * (g.ndim - 1))


def _as_batch(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 4:
        raise ValueError(f"expected a (N, H, W, C) batch, got shape {X.shape}")
    return X


def defended_predict(model: Classifier, pipeline: Pipeline | None, X, rngs: Sequence[RngStream]) -> np.ndarray:
    """One fresh defended forward pass per image (``rngs[i]`` keys sample ``i``)."""
    X = _as_batch(X)
    if pipeline is None:
        return _predict(model, X)
    return _predict(model, np.stack([apply_pipeline(pipeline, x, r) for x, r in zip(X, rngs)]))


def _on_boundary(budget: PerturbationBudget, X0: np.ndarray, adv: np.ndarray) -> np.ndarray:
    d = adv - X0
    if budget.kind == "linf":
        return np.max(np.abs(d).reshape(len(d), -1), axis=1) >= budget.bound * (1 - 1e-9)
    radius = l2_budget_norm(budget.bound, d[0].size)
    return _l2_norms(d) >= radius * (1 - 1e-9)


# ----------------------------------------------------------------------------- FGSM family


def fgsm_batch(model, X, T, epsilon: float) -> np.ndarray:
    X = _as_batch(X)
    _, g, _ = _loss_grad(model, X, np.asarray(T))
    return np.clip(X - epsilon * _sign(g), 0.0, 1.0)


def ifgsm_batch(model, X, T, epsilon: float, iterations: int = 10) -> np.ndarray:
    X = _as_batch(X)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    T = np.asarray(T)
    step = epsilon / iterations
    adv = X.copy()
    for _ in range(iterations):
        _, g, _ = _loss_grad(model, adv, T)
        adv = np.clip(adv - step * _sign(g), X - epsilon, X + epsilon)
        adv = np.clip(adv, 0.0, 1.0)
    return adv


def fgsm(c: Classifier, x, target: int, epsilon: float = 0.03) -> AttackResult:
    x = c._one(x)
    adv = fgsm_batch(c, x, [target], epsilon)
    return AttackResult.build(x[0], adv[0], c.predict_batch(adv)[0] == target, 1, target)


def ifgsm(c: Classifier, x, target: int, epsilon: float = 0.03, iterations: int = 10) -> AttackResult:
    x = c._one(x)
    adv = ifgsm_batch(c, x, [target], epsilon, iterations)
    return AttackResult.build(x[0], adv[0], c.predict_batch(adv)[0] == target, iterations, target)


# ----------------------------------------------------------------------------- PGD


def pgd_batch(model, X, T, budget: PerturbationBudget, lr: float, max_rounds: int, stall_rounds: int = 20):
    """Normalized-gradient descent with projection.

    A sample stops when it is classified as its target, or after
    ``stall_rounds`` consecutive rounds on the ball boundary without a loss
    improvement above 1e-6.  Returns ``(adv, rounds, trace)``.
    """
    X = _as_batch(X)
    T = np.asarray(T)
    n = len(X)
    adv = X.copy()
    rounds = np.zeros(n, dtype=np.int64)
    best = np.full(n, np.inf)
    stall = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    trace: list[list[bool]] = [[] for _ in range(n)]
    for _ in range(max_rounds):
        idx = np.flatnonzero(active)
        if not len(idx):
            break
        loss, g, z = _loss_grad(model, adv[idx], T[idx])
        hit = z.argmax(axis=1) == T[idx]
        for k, i in enumerate(idx):
            trace[i].append(bool(hit[k]))
        boundary = _on_boundary(budget, X[idx], adv[idx])
        improved = loss < best[idx] - 1e-6
        best[idx] = np.minimum(best[idx], loss)
        stall[idx] = np.where(boundary & ~improved, stall[idx] + 1, 0)
        done = hit | (stall[idx] >= stall_rounds)
        step = idx[~done]
        if len(step):
            adv[step] = budget.project(X[step], adv[step] - lr * _unit(g[~done]))
            rounds[step] += 1
        active[idx[done]] = False
    return adv, rounds, trace


def pgd_l2(
    c: Classifier,
    x,
    target: int,
    budget: PerturbationBudget | float | None = None,
    lr: float = 0.1,
    max_rounds: int = 1000,
    stall_rounds: int = 20,
) -> AttackResult:
    """A plain number is an l2 bound; 0 returns ``x`` unchanged (budgets themselves must be positive)."""
    x = c._one(x)
    if isinstance(budget, (int, float)):
        if budget == 0:
            return AttackResult.build(x[0], x[0].copy(), c.predict_batch(x)[0] == target, 0, target)
        budget = PerturbationBudget("l2", float(budget))
    budget = budget or PerturbationBudget("l2")
    adv, rounds, trace = pgd_batch(c, x, [target], budget, lr, max_rounds, stall_rounds)
    return AttackResult.build(x[0], adv[0], c.predict_batch(adv)[0] == target, rounds[0], target, trace[0])


# ----------------------------------------------------------------------------- C&W


def _margin_and_grad(model, xb: np.ndarray, T: np.ndarray):
    """``max_{i != t} Z_i - Z_t`` and its input gradient."""
    dxs, margins = [], []
    for i in range(0, len(xb), CHUNK):
        chunk, t = xb[i : i + CHUNK], T[i : i + CHUNK]
        z = model.logits_batch(chunk)
        other = z.copy()
        other[np.arange(len(t)), t] = -np.inf
        j = other.argmax(axis=1)
        rows = np.arange(len(t))
        dl = np.zeros_like(z)
        dl[rows, j] = 1.0
        dl[rows, t] -= 1.0
        dx, _ = model.backward_batch(chunk, dl)
        dxs.append(dx)
        margins.append(z[rows, j] - z[rows, t])
    return np.concatenate(margins), np.concatenate(dxs)


def cw_update_const(lo, hi, const, found):
    """One bisection step on the C&W constant: shrink after a success, grow (x10 while unbounded) after a failure."""
    hi = np.where(found, np.minimum(hi, const), hi)
    lo = np.where(found, lo, np.maximum(lo, const))
    mid = (lo + hi) / 2.0
    const = np.where(found | np.isfinite(hi), mid, const * 10.0)
    return lo, hi, const


def cw_batch(model, X, T, budget: PerturbationBudget, cfg: AttackConfig):
    """C&W l2 in tanh space with Adam and a binary search on the constant.

    Returns ``(adv, success, iterations_used)``; ``adv`` is the smallest
    admissible adversarial found, else the last attempt.
    """
    X = _as_batch(X)
    T = np.asarray(T)
    n = len(X)
    radius = l2_budget_norm(budget.bound, X[0].size)
    eps = 1e-6
    w0 = np.arctanh(2.0 * np.clip(X, eps, 1.0 - eps) - 1.0)
    const = np.full(n, cfg.initial_const)
    lo = np.zeros(n)
    hi = np.full(n, np.inf)
    best_adv = X.copy()
    best_dist = np.full(n, np.inf)
    used = np.zeros(n, dtype=np.int64)
    # already on target: nothing to do
    margin0, _ = _margin_and_grad(model, X, T)
    done0 = margin0 < 0
    best_dist[done0] = 0.0
    beta1, beta2, adam_eps = 0.9, 0.999, 1e-8
    check_every = max(1, cfg.max_iterations // 10)
    for _ in range(cfg.binary_search_steps):
        live = ~done0
        if not live.any():
            break
        w = w0.copy()
        m = np.zeros_like(w)
        v = np.zeros_like(w)
        found = np.zeros(n, dtype=bool)
        prev = np.full(n, np.inf)
        for it in range(1, cfg.max_iterations + 1):
            idx = np.flatnonzero(live)
            if not len(idx):
                break
            xa = (np.tanh(w[idx]) + 1.0) / 2.0
            diff = xa - X[idx]
            dist2 = np.sum(diff.reshape(len(idx), -1) ** 2, axis=1)
            margin, dmargin = _margin_and_grad(model, xa, T[idx])
            loss = dist2 + const[idx] * np.maximum(margin, 0.0)
            ok = (margin < 0) & (np.sqrt(dist2) <= radius)
            better = ok & (dist2 < best_dist[idx])
            best_dist[idx[better]] = dist2[better]
            best_adv[idx[better]] = xa[better]
            found[idx[ok]] = True
            used[idx] += 1
            gx = 2.0 * diff + (const[idx] * (margin > 0))[:, None, None, None] * dmargin
            gw = gx * (1.0 - np.tanh(w[idx]) ** 2) / 2.0
            m[idx] = beta1 * m[idx] + (1 - beta1) * gw
            v[idx] = beta2 * v[idx] + (1 - beta2) * gw * gw
            mhat = m[idx] / (1 - beta1**it)
            vhat = v[idx] / (1 - beta2**it)
            w[idx] -= cfg.lr * mhat / (np.sqrt(vhat) + adam_eps)
            if it % check_every == 0:
                stuck = loss > prev[idx] * 0.9999
                live[idx[stuck]] = False
                prev[idx] = loss
        todo = ~done0
        lo[todo], hi[todo], const[todo] = cw_update_const(lo[todo], hi[todo], const[todo], found[todo])
    success = np.isfinite(best_dist)
    # no admissible AE: attach the final attempt of the last search step
    if (~success).any():
        last = (np.tanh(w) + 1.0) / 2.0
        best_adv[~success] = last[~success]
    return best_adv, success, used


def cw_l2(c: Classifier, x, target: int, cfg: AttackConfig | None = None) -> AttackResult:
    x = c._one(x)
    cfg = cfg or AttackConfig("CW")
    adv, success, used = cw_batch(c, x, [target], cfg.budget, cfg)
    return AttackResult.build(x[0], adv[0], success[0], used[0], target)


# ----------------------------------------------------------------------------- BPDA / EOT


def _round_stream(rng: RngStream, r: int) -> RngStream:
    return rng.fork(f"round-{r}")


def eot_gradient(model, pipeline: Pipeline | None, X, T, rngs: Sequence[RngStream], r: int, n: int):
    """Mean cross-entropy gradient over ``n`` transform draws at round ``r``.

    The backward pass treats the pipeline as the identity.  Returns
    ``(mean_grad, hits)`` where ``hits[i, j]`` says draw ``j`` of sample ``i``
    was classified as its target.
    """
    X = _as_batch(X)
    T = np.asarray(T)
    if pipeline is None or not pipeline.stochastic:
        n = 1
    draws = []
    for x, rng in zip(X, rngs):
        base = _round_stream(rng, r)
        for j in range(n):
            draws.append(x if pipeline is None else apply_pipeline(pipeline, x, base.fork(f"eot-{j}")))
    _, g, z = _loss_grad(model, np.stack(draws), np.repeat(T, n))
    hits = (z.argmax(axis=1) == np.repeat(T, n)).reshape(len(X), n)
    return g.reshape((len(X), n) + X.shape[1:]).mean(axis=1), hits


def eot_batch(
    model,
    X,
    T,
    pipeline: Pipeline | None,
    rngs: Sequence[RngStream],
    budget: PerturbationBudget,
    lr: float,
    rounds: int,
    n: int,
    stop_at_bound: bool,
    stop_fraction: float | None = None,
):
    """Shared BPDA/EOT loop.

    Each round first classifies the ensemble draws at the current iterate; a
    sample stops once a strict majority hits its target.  Otherwise it takes a
    projected step along the normalized mean gradient.  With ``stop_at_bound``
    a sample also stops once the step lands on the budget boundary.
    ``stop_fraction`` ends the whole run once that share of samples qualified.
    """
    X = _as_batch(X)
    T = np.asarray(T)
    count = len(X)
    adv = X.copy()
    used = np.zeros(count, dtype=np.int64)
    active = np.ones(count, dtype=bool)
    trace: list[list[bool]] = [[] for _ in range(count)]
    qualified_total = 0
    for r in range(rounds):
        idx = np.flatnonzero(active)
        if not len(idx) or (stop_fraction is not None and qualified_total >= stop_fraction * count):
            break
        g, hits = eot_gradient(model, pipeline, adv[idx], T[idx], [rngs[i] for i in idx], r, n)
        qualified = hits.sum(axis=1) * 2 > hits.shape[1]
        qualified_total += int(qualified.sum())
        for k, i in enumerate(idx):
            trace[i].append(bool(qualified[k]))
        step = ~qualified
        moved = idx[step]
        if len(moved):
            adv[moved] = budget.project(X[moved], adv[moved] - lr * _unit(g[step]))
            used[moved] += 1
        done = qualified.copy()
        if stop_at_bound and len(moved):
            done[step] = _on_boundary(budget, X[moved], adv[moved])
        active[idx[done]] = False
    return adv, used, trace


def _final_check(model, pipeline, adv, T, rngs) -> np.ndarray:
    return defended_predict(model, pipeline, adv, [r.fork("final") for r in rngs]) == np.asarray(T)


def _single(c, x, target, rng):
    return c._one(x), [rng if rng is not None else RngStream(0, "attack")]


def bpda(
    c: Classifier,
    x,
    target: int,
    pipeline: Pipeline | None,
    budget: PerturbationBudget | None = None,
    lr: float = 0.1,
    rounds: int = 50,
    rng: RngStream | None = None,
) -> AttackResult:
    xb, rngs = _single(c, x, target, rng)
    budget = budget or PerturbationBudget("l2")
    adv, used, trace = eot_batch(c, xb, [target], pipeline, rngs, budget, lr, rounds, 1, stop_at_bound=True)
    ok = _final_check(c, pipeline, adv, [target], rngs)[0]
    return AttackResult.build(xb[0], adv[0], ok, used[0], target, trace[0])


def bpda_eot(
    c: Classifier,
    x,
    target: int,
    pipeline: Pipeline | None,
    budget: PerturbationBudget | None = None,
    lr: float = 0.1,
    rounds: int = 50,
    n: int = 30,
    rng: RngStream | None = None,
) -> AttackResult:
    xb, rngs = _single(c, x, target, rng)
    budget = budget or PerturbationBudget("l2")
    adv, used, trace = eot_batch(c, xb, [target], pipeline, rngs, budget, lr, rounds, n, stop_at_bound=False)
    ok = _final_check(c, pipeline, adv, [target], rngs)[0]
    return AttackResult.build(xb[0], adv[0], ok, used[0], target, trace[0])


# No transform exposes an analytic Jacobian, so EOT always backs through the
# identity and coincides with BPDA+EOT.
eot = bpda_eot


# ----------------------------------------------------------------------------- adaptive


def split_pipeline(p: Pipeline, g1_stages: int = 1) -> tuple[Pipeline, Pipeline | None]:
    """``(g1, g2)``: the first ``g1_stages`` stages and the remainder (``None`` if empty)."""
    if not 1 <= g1_stages <= len(p.stages):
        raise ValueError(f"g1_stages must lie in [1, {len(p.stages)}]")
    rest = p.stages[g1_stages:]
    return Pipeline(p.stages[:g1_stages]), (Pipeline(rest) if rest else None)


def adaptive_batch(
    model,
    X,
    T,
    g1: Pipeline,
    g2: Pipeline | None,
    rngs: Sequence[RngStream],
    budget: PerturbationBudget,
    lr: float,
    rounds: int,
    n: int,
    stop_fraction: float | None = None,
):
    """EOT steps against ``g1`` only, each followed by one fresh pass through ``g2 . g1``.

    The trajectory never looks at ``g2``, and the check draw of ``g1`` is keyed
    by its stage label, so variants that differ only in ``g2`` share both the
    iterates and the ``g1`` randomness.  ``stop_fraction`` ends the run once
    that share of samples succeeded.  Returns ``(adv, used, success, trace)``.
    """
    X = _as_batch(X)
    T = np.asarray(T)
    full = g1 if g2 is None else Pipeline(g1.stages + g2.stages)
    count = len(X)
    adv = X.copy()
    used = np.zeros(count, dtype=np.int64)
    success = np.zeros(count, dtype=bool)
    trace: list[list[bool]] = [[] for _ in range(count)]
    for r in range(rounds):
        idx = np.flatnonzero(~success)
        if not len(idx) or (stop_fraction is not None and success.sum() >= stop_fraction * count):
            break
        g, _ = eot_gradient(model, g1, adv[idx], T[idx], [rngs[i] for i in idx], r, n)
        adv[idx] = budget.project(X[idx], adv[idx] - lr * _unit(g))
        used[idx] += 1
        check = [_round_stream(rngs[i], r).fork("check") for i in idx]
        hit = defended_predict(model, full, adv[idx], check) == T[idx]
        for k, i in enumerate(idx):
            trace[i].append(bool(hit[k]))
        success[idx[hit]] = True
    return adv, used, success, trace


def adaptive_g1(
    c: Classifier,
    x,
    target: int,
    g1: Pipeline,
    g2: Pipeline | None,
    budget: PerturbationBudget | None = None,
    lr: float = 0.1,
    rounds: int = 2000,
    n: int = 30,
    rng: RngStream | None = None,
) -> AttackResult:
    xb, rngs = _single(c, x, target, rng)
    budget = budget or PerturbationBudget("l2")
    adv, used, success, trace = adaptive_batch(c, xb, [target], g1, g2, rngs, budget, lr, rounds, n)
    return AttackResult.build(xb[0], adv[0], success[0], used[0], target, trace[0])


# ----------------------------------------------------------------------------- dispatch


def run_attack(
    cfg: AttackConfig,
    model: Classifier,
    X,
    T,
    rngs: Sequence[RngStream],
    pipeline: Pipeline | None = None,
    stop_fraction: float | None = None,
) -> list[AttackResult]:
    """Batched attack of ``X`` toward ``T``.

    ``pipeline`` is the defense; only the defense-aware kinds look at it.
    ``stop_fraction`` lets those kinds end early once that share succeeded.
    ``success`` is judged on the undefended model for the standard attacks and
    on a fresh defended pass for the others.
    """
    X = _as_batch(X)
    T = np.asarray(T, dtype=np.int64)
    if not (len(X) == len(T) == len(rngs)):
        raise ValueError("X, T and rngs must have equal length")
    if len(X) == 0:
        return []
    kind, budget = cfg.kind, cfg.budget
    traces: list[list[bool]] = [[] for _ in X]
    if kind == "FGSM":
        adv = fgsm_batch(model, X, T, cfg.epsilon)
        used = np.ones(len(X), dtype=np.int64)
        ok = _predict(model, adv) == T
    elif kind == "I-FGSM":
        adv = ifgsm_batch(model, X, T, cfg.epsilon, cfg.iterations)
        used = np.full(len(X), cfg.iterations)
        ok = _predict(model, adv) == T
    elif kind == "PGD":
        adv, used, traces = pgd_batch(model, X, T, budget, cfg.lr, cfg.max_rounds, cfg.stall_rounds)
        ok = _predict(model, adv) == T
    elif kind == "CW":
        adv, ok, used = cw_batch(model, X, T, budget, cfg)
    elif kind in ("BPDA", "EOT", "BPDA+EOT"):
        n = 1 if kind == "BPDA" else cfg.ensemble_size
        adv, used, traces = eot_batch(
            model, X, T, pipeline, rngs, budget, cfg.lr, cfg.max_rounds, n, kind == "BPDA", stop_fraction
        )
        ok = _final_check(model, pipeline, adv, T, rngs)
    elif kind == "ADAPTIVE":
        if pipeline is None:
            raise ValueError("the adaptive attack needs a defense pipeline")
        g1, g2 = split_pipeline(pipeline, cfg.g1_stages)
        adv, used, ok, traces = adaptive_batch(
            model, X, T, g1, g2, rngs, budget, cfg.lr, cfg.max_rounds, cfg.ensemble_size, stop_fraction
        )
    else:  # pragma: no cover - guarded by AttackConfig
        raise ValueError(kind)
    return [AttackResult.build(x, a, s, u, t, tr) for x, a, s, u, t, tr in zip(X, adv, ok, used, T, traces)]


__all__ = [
    "ATTACK_KINDS",
    "AttackConfig",
    "AttackResult",
    "adaptive_batch",
    "adaptive_g1",
    "bpda",
    "bpda_eot",
    "cw_batch",
    "cw_l2",
    "cw_update_const",
    "defended_predict",
    "eot",
    "eot_batch",
    "eot_gradient",
    "fgsm",
    "fgsm_batch",
    "ifgsm",
    "ifgsm_batch",
    "pgd_batch",
    "pgd_l2",
    "run_attack",
    "split_pipeline",
]
