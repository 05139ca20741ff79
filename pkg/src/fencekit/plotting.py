"""Matplotlib figures for evaluation reports (headless backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import CLEAN, EvalReport  # noqa: E402


def _matrix(r: EvalReport, metric: str, attacks: list[str]) -> np.ndarray:
    m = np.full((len(r.defenses), len(attacks)), np.nan)
    for i, d in enumerate(r.defenses):
        for j, a in enumerate(attacks):
            v = getattr(r.cell(d, a), metric)
            if v is not None:
                m[i, j] = v
    return m


def plot_grid(r: EvalReport, metric: str, path) -> Path:
    attacks = [CLEAN] + [a for a in r.attacks if a != CLEAN]
    m = _matrix(r, metric, attacks)
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(attacks), 0.8 + 0.35 * len(r.defenses)))
    im = ax.imshow(m, vmin=0, vmax=1, cmap="viridis" if metric == "acc" else "magma", aspect="auto")
    ax.set_xticks(range(len(attacks)), attacks, rotation=35, ha="right", fontsize=8)
    ax.set_yticks(range(len(r.defenses)), r.defenses, fontsize=8)
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            if np.isfinite(m[i, j]):
                ax.text(j, i, f"{m[i, j]:.2f}", ha="center", va="center", fontsize=7, color="white" if m[i, j] < 0.6 else "black")
    ax.set_title(metric.upper())
    fig.colorbar(im, ax=ax, fraction=0.04)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def plot_traces(r: EvalReport, path) -> Path | None:
    cells = [c for c in r.cells if c.trace]
    if not cells:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for c in cells:
        ax.plot(np.arange(1, len(c.trace) + 1), c.trace, label=f"{c.defense} / {c.attack}", lw=1.2)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative ASR")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=6, loc="best")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def plot_rounds(entries: list[dict], path) -> Path | None:
    """Rounds needed per ASR threshold; sentinel entries are drawn at the cap with a hollow marker."""
    if not entries:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for e in entries:
        thr = sorted(e["rounds"], key=float)
        cap = e.get("cap", 0)
        xs = [float(t) for t in thr]
        ys = [cap if isinstance(e["rounds"][t], str) else e["rounds"][t] for t in thr]
        ax.plot(xs, ys, marker="o", label=e["defense"])
        for x, t in zip(xs, thr):
            if isinstance(e["rounds"][t], str):
                ax.plot([x], [cap], marker="o", mfc="white", color="grey")
    ax.set_xlabel("target ASR")
    ax.set_ylabel("rounds")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return Path(path)


def render_figures(r: EvalReport, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [plot_grid(r, "acc", out / "acc.png"), plot_grid(r, "asr", out / "asr.png")]
    for p in (plot_traces(r, out / "traces.png"), plot_rounds(r.rounds, out / "rounds.png")):
        if p is not None:
            paths.append(p)
    return paths
