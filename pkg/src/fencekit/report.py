"""Report emission: JSON (source of truth), markdown grids, CSV rows and traces."""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path

from .harness import CLEAN, EvalReport


def fmt(v) -> str:
    """Four significant digits; missing values print as ``-``."""
    if v is None:
        return "-"
    if isinstance(v, str):
        return v
    return f"{v:.4g}"


def report_json(r: EvalReport) -> str:
    return json.dumps(r.to_dict(), indent=2, sort_keys=True) + "\n"


def load_report(path) -> EvalReport:
    return EvalReport.from_dict(json.loads(Path(path).read_text()))


def _grid(r: EvalReport, metric: str) -> list[str]:
    # the Clean column always comes first
    attacks = [CLEAN] + [a for a in r.attacks if a != CLEAN]
    lines = ["| Defense | " + " | ".join(attacks) + " |", "|---" * (len(attacks) + 1) + "|"]
    for d in r.defenses:
        values = []
        for a in attacks:
            c = r.cell(d, a)
            values.append("error" if c.error else fmt(getattr(c, metric)))
        lines.append(f"| {d} | " + " | ".join(values) + " |")
    return lines


def render_markdown(r: EvalReport) -> str:
    n = r.cells[0].n_samples if r.cells else 0
    out = ["# Evaluation report", "", f"seed: {r.seed}, samples: {n}", ""]
    out += ["## ACC", ""] + _grid(r, "acc") + [""]
    out += ["## ASR", ""] + _grid(r, "asr") + [""]
    out += ["## Mean l2 of attacked inputs", ""] + _grid(r, "mean_l2") + [""]
    rounds = r.rounds
    if rounds:
        thresholds = sorted({t for entry in rounds for t in entry["rounds"]}, key=float)
        out += ["## Rounds to target ASR", ""]
        out.append("| Defense | Attack | " + " | ".join(f"ASR {t}" for t in thresholds) + " |")
        out.append("|---" * (len(thresholds) + 2) + "|")
        for entry in rounds:
            vals = [fmt(entry["rounds"].get(t)) for t in thresholds]
            out.append(f"| {entry['defense']} | {entry['attack']} | " + " | ".join(vals) + " |")
        out.append("")
    errors = [c for c in r.cells if c.error]
    if errors:
        out += ["## Errors", ""] + [f"- {c.defense} / {c.attack}: {c.error}" for c in errors] + [""]
    return "\n".join(out)


_ROW = re.compile(r"^\| (?P<name>[^|]+?) \| (?P<rest>.*) \|$")


def parse_markdown(text: str) -> dict:
    """Read the ACC/ASR grids back as ``{(metric, defense, attack): value}``."""
    values = {}
    metric = None
    header: list[str] = []
    for line in text.splitlines():
        if line.startswith("## "):
            title = line[3:].strip()
            metric = {"ACC": "acc", "ASR": "asr"}.get(title)
            header = []
            continue
        m = _ROW.match(line)
        if metric is None or not m or line.startswith("|---"):
            continue
        cols = [c.strip() for c in m.group("rest").split(" | ")]
        if m.group("name") == "Defense":
            header = cols
            continue
        for a, v in zip(header, cols):
            values[(metric, m.group("name"), a)] = None if v in ("-", "error") else float(v)
    return values


CSV_FIELDS = ("defense", "attack", "acc", "asr", "mean_l2", "mean_rounds")


def report_csv(r: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for c in r.cells:
        w.writerow([c.defense, c.attack] + [fmt(getattr(c, f)) for f in CSV_FIELDS[2:]])
    return buf.getvalue()


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9.+-]+", "_", text).strip("_")


def trace_csvs(r: EvalReport) -> dict[str, str]:
    """``{file name: csv}`` of cumulative ASR per round for cells that recorded traces."""
    out = {}
    for c in r.cells:
        if not c.trace:
            continue
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("round", "cumulative_asr"))
        for i, v in enumerate(c.trace):
            w.writerow((i, fmt(v)))
        out[f"{_slug(c.defense)}__{_slug(c.attack)}.csv"] = buf.getvalue()
    return out


def write_report(r: EvalReport, out_dir, figures: bool = True) -> list[Path]:
    """Write report.json, report.md, report.csv, traces/*.csv and (optionally) figures/*.png."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in (("report.json", report_json(r)), ("report.md", render_markdown(r)), ("report.csv", report_csv(r))):
        (out / name).write_text(text)
        written.append(out / name)
    traces = trace_csvs(r)
    if traces:
        (out / "traces").mkdir(exist_ok=True)
        for name, text in traces.items():
            (out / "traces" / name).write_text(text)
            written.append(out / "traces" / name)
    if figures:
        from .plotting import render_figures

        written += render_figures(r, out / "figures")
    return written


__all__ = [
    "CSV_FIELDS",
    "fmt",
    "load_report",
    "parse_markdown",
    "render_markdown",
    "report_csv",
    "report_json",
    "trace_csvs",
    "write_report",
]
