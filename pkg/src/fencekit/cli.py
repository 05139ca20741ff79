"""``fencekit`` command line.

Exit codes: 0 success, 1 usage error, 2 runtime error.  Every subcommand
prints its effective seed (``--seed``, else ``FENCEKIT_SEED``, else 0) on
stderr; the config-driven ones also echo their resolved config as JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .attacks import AttackConfig, run_attack
from .core import RngStream, l2_distance, linf_distance, load_image, psnr, save_image, ssim
from .data import load_dataset, make_shapes_dataset
from .harness import evaluate_grid, rounds_entry, rounds_to_asr, select_samples
from .model import Classifier, train
from .pipeline import Pipeline, parse_pipeline_name, pipeline_from_dict, pipeline_to_dict, registry_list
from .report import fmt, load_report, write_report


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _seed(args) -> int:
    if args.seed is not None:
        seed = args.seed
    else:
        raw = os.environ.get("FENCEKIT_SEED")
        try:
            seed = int(raw) if raw not in (None, "") else 0
        except ValueError:
            raise UsageError(f"FENCEKIT_SEED must be an integer, got {raw!r}") from None
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _echo(config: dict) -> None:
    print(json.dumps(config, indent=2, sort_keys=True))
    sys.stdout.flush()


def _read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such file: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ValueError(f"{p}: invalid JSON: {err}") from err


def _pipeline(spec) -> Pipeline:
    """A pipeline from a name like ``FD+RDG``, a config dict, or a path to a JSON config."""
    if isinstance(spec, dict):
        return pipeline_from_dict(spec)
    if isinstance(spec, str) and spec.endswith(".json"):
        return pipeline_from_dict(_read_json(spec))
    return parse_pipeline_name(str(spec))


def _resolve(base: Path, value):
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def _dataset(spec, base: Path, split: str):
    """``{"kind": "shapes", ...}`` builds the synthetic set; a path or ``{"kind": "dir"}`` reads PNGs."""
    if isinstance(spec, str):
        spec = {"kind": "dir", "root": spec}
    spec = dict(spec or {"kind": "shapes"})
    kind = spec.pop("kind", "shapes")
    if kind == "shapes":
        allowed = {"n_train", "n_test", "seed", "side", "channels"}
        unknown = sorted(set(spec) - allowed)
        if unknown:
            raise ValueError(f"unknown dataset field(s): {', '.join(unknown)}")
        train_set, test_set = make_shapes_dataset(**spec)
        return train_set if split == "train" else test_set
    if kind == "dir":
        return load_dataset(_resolve(base, spec["root"]), spec.get("split", split))
    raise ValueError(f"unknown dataset kind {kind!r}")


# ----------------------------------------------------------------------------- subcommands


def cmd_describe(args) -> int:
    _seed(args)
    entries = registry_list()
    if args.json:
        _echo({"transforms": entries})
        return 0
    for e in entries:
        defaults = ", ".join(f"{k}={v}" for k, v in e["defaults"].items())
        mark = "random" if e["stochastic"] else "fixed"
        print(f"{e['kind']:8s} {e['category']:11s} {mark:6s} {e['description']} [{defaults}]")
    return 0


def cmd_preprocess(args) -> int:
    seed = _seed(args)
    pipeline = _pipeline(args.pipeline)
    x = load_image(args.inp)
    out = pipeline(x, RngStream(seed, "preprocess"))
    save_image(out, args.out)
    print(f"l2: {fmt(l2_distance(x, out))}", file=sys.stderr)
    return 0


def cmd_metrics(args) -> int:
    _seed(args)
    a, b = load_image(args.a), load_image(args.b)
    print(f"l2: {fmt(l2_distance(a, b))}")
    print(f"linf: {fmt(linf_distance(a, b))}")
    print(f"ssim: {fmt(ssim(a, b))}")
    print(f"psnr: {fmt(psnr(a, b))}")
    return 0


def cmd_train(args) -> int:
    seed = _seed(args)
    cfg = _read_json(args.config) if args.config else {}
    base = Path(args.config).parent if args.config else Path.cwd()
    config = {
        "dataset": cfg.get("dataset", {"kind": "shapes"}),
        "epochs": int(args.epochs if args.epochs is not None else cfg.get("epochs", 12)),
        "lr": float(args.lr if args.lr is not None else cfg.get("lr", 0.02)),
        "seed": seed,
        "out": str(args.out or cfg.get("out", "model.bin")),
    }
    _echo(config)
    train_set = _dataset(config["dataset"], base, "train")
    test_set = _dataset(config["dataset"], base, "test")
    model = train(
        train_set, config["epochs"], config["lr"], seed, test=test_set, log=lambda m: print(m, file=sys.stderr)
    )
    out = _resolve(base, config["out"]) if not args.out else Path(args.out)
    model.save(out)
    accs = {k: fmt(v) for k, v in model.info.items() if k.endswith("accuracy")}
    print(json.dumps(accs, sort_keys=True))
    return 0


def cmd_attack(args) -> int:
    seed = _seed(args)
    attack_doc = _read_json(args.attack) if args.attack.endswith(".json") else {"kind": args.attack}
    if args.rounds is not None:
        attack_doc["max_rounds"] = args.rounds
    cfg = AttackConfig.from_dict(attack_doc)
    defense = _pipeline(args.defense) if args.defense else None
    config = {
        "model": args.model,
        "image": args.image,
        "target": args.target,
        "attack": cfg.to_dict(),
        "defense": pipeline_to_dict(defense) if defense else None,
        "seed": seed,
    }
    _echo(config)
    model = Classifier.load(args.model)
    x = load_image(args.image)
    res = run_attack(cfg, model, x[None], [args.target], [RngStream(seed, ("attack", cfg.name, "0"))], defense)[0]
    if args.out:
        save_image(res.adversarial, args.out)
    summary = {"success": res.success, "rounds": res.rounds_used, "l2": fmt(res.l2), "linf": fmt(res.linf)}
    print(json.dumps(summary, sort_keys=True))
    return 0


def _eval_config(doc: dict, seed: int) -> dict:
    allowed = {"dataset", "model", "samples", "defenses", "attacks", "seed", "bootstrap", "rounds_to_asr"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    if "model" not in doc:
        raise ValueError('evaluation config needs a "model" checkpoint path')
    return {
        "dataset": doc.get("dataset", {"kind": "shapes"}),
        "model": doc["model"],
        "samples": int(doc.get("samples", 100)),
        "defenses": [pipeline_to_dict(_pipeline(d)) for d in doc.get("defenses", [])],
        "attacks": [AttackConfig.from_dict(a).to_dict() for a in doc.get("attacks", [])],
        "seed": seed,
        "bootstrap": int(doc.get("bootstrap", 1000)),
        "rounds_to_asr": doc.get("rounds_to_asr", []),
    }


def cmd_evaluate(args) -> int:
    doc = _read_json(args.config)
    if args.seed is None and "seed" in doc and not os.environ.get("FENCEKIT_SEED"):
        args.seed = int(doc["seed"])
    seed = _seed(args)
    config = _eval_config(doc, seed)
    _echo(config)
    base = Path(args.config).parent
    model = Classifier.load(_resolve(base, config["model"]))
    test_set = _dataset(config["dataset"], base, "test")
    samples = select_samples(model, test_set, config["samples"], seed)
    defenses = [pipeline_from_dict(d) for d in config["defenses"]]
    attacks = [AttackConfig.from_dict(a) for a in config["attacks"]]
    start = time.time()
    report = evaluate_grid(model, samples, defenses, attacks, seed, jobs=args.jobs, bootstrap=config["bootstrap"], config=config)
    for entry in config["rounds_to_asr"]:
        defense = _pipeline(entry["defense"])
        attack = AttackConfig.from_dict(entry.get("attack", {"kind": "ADAPTIVE"}))
        cap = int(entry.get("cap", 2000))
        thresholds = [float(t) for t in entry.get("thresholds", [0.1, 0.3, 0.5, 0.7, 0.9])]
        rounds = rounds_to_asr(model, samples, defense, attack, thresholds, cap, seed)
        report.rounds.append(rounds_entry(defense.name, attack.name, rounds, cap))
    write_report(report, args.out, figures=not args.no_figures)
    print(f"wrote {args.out} in {time.time() - start:.1f}s", file=sys.stderr)
    return 0


def cmd_report(args) -> int:
    _seed(args)
    report = load_report(args.inp)
    out = args.out or str(Path(args.inp).parent)
    for p in write_report(report, out, figures=not args.no_figures):
        print(p)
    return 0


# ----------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fencekit", description="Preprocessing defenses against adversarial examples.")
    p.add_argument("--version", action="version", version=f"fencekit {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def add(name, fn, help_text):
        s = sub.add_parser(name, help=help_text, description=help_text)
        s.add_argument("--seed", type=int, default=None, help="random seed (default: $FENCEKIT_SEED or 0)")
        s.set_defaults(fn=fn)
        return s

    s = add("describe", cmd_describe, "list the available transforms")
    s.add_argument("--json", action="store_true", help="print the registry as JSON")

    s = add("preprocess", cmd_preprocess, "apply a defense pipeline to an image")
    s.add_argument("--pipeline", required=True, help="pipeline name (e.g. FD+RDG) or JSON config file")
    s.add_argument("--in", dest="inp", required=True, help="input image")
    s.add_argument("--out", required=True, help="output PNG")

    s = add("metrics", cmd_metrics, "compare two images (l2, linf, ssim, psnr)")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)

    s = add("train", cmd_train, "train the desk classifier")
    s.add_argument("--config", help="training config JSON")
    s.add_argument("--epochs", type=int)
    s.add_argument("--lr", type=float)
    s.add_argument("--out", help="checkpoint path")

    s = add("attack", cmd_attack, "attack one image")
    s.add_argument("--model", required=True, help="checkpoint path")
    s.add_argument("--image", required=True)
    s.add_argument("--target", type=int, required=True)
    s.add_argument("--attack", required=True, help="attack kind (e.g. PGD) or JSON config file")
    s.add_argument("--defense", help="defense pipeline name or JSON config file")
    s.add_argument("--rounds", type=int, help="override max_rounds")
    s.add_argument("--out", help="write the adversarial image here")

    s = add("evaluate", cmd_evaluate, "run a defense x attack evaluation grid")
    s.add_argument("--config", required=True, help="evaluation config JSON")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--jobs", type=int, default=1, help="worker processes (1 is the determinism reference)")
    s.add_argument("--no-figures", action="store_true")

    s = add("report", cmd_report, "render markdown, CSV and figures from report.json")
    s.add_argument("--in", dest="inp", required=True, help="report.json")
    s.add_argument("--out", help="output directory (default: next to the input)")
    s.add_argument("--no-figures", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be >= 1")
    except UsageError as err:
        print(err, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except UsageError as err:
        print(f"fencekit: error: {err}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, RuntimeError) as err:
        print(f"fencekit: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
