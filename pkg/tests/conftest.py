"""Shared fixtures: the cached desk model and the acceptance summary.

Tests tagged ``@pytest.mark.criterion(n)`` count toward acceptance criterion
``n``; the terminal summary prints one PASS/FAIL line per criterion.  Every
test outside ``test_acceptance.py`` also counts toward criterion 8 (module
invariant suites).
"""

import hashlib
import json
from collections import defaultdict
from pathlib import Path

import numpy as np
import pytest

from fencekit.data import Dataset, make_shapes_dataset
from fencekit.model import Classifier, train

CRITERIA = {
    1: "transform correctness",
    2: "gradient fidelity",
    3: "baseline attack potency",
    4: "defense ordering under BPDA",
    5: "EOT breaks lone RDG, ensemble survives",
    6: "adaptive-attack monotonicity",
    7: "clean-accuracy preservation",
    8: "determinism and invariants",
}
# time limits (seconds) for criteria whose budget covers the whole group
TIME_LIMITS = {1: 120.0}

DESK = {"n_train": 12000, "n_test": 1000, "data_seed": 0, "epochs": 12, "lr": 0.02, "train_seed": 0}
SRC = Path(__file__).resolve().parents[1] / "src" / "fencekit"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): counts toward acceptance criterion n")
    config._fk_outcomes = defaultdict(list)
    config._fk_details = defaultdict(list)


# ----------------------------------------------------------------------------- desk model


def _desk_key() -> str:
    h = hashlib.sha256(json.dumps(DESK, sort_keys=True).encode())
    for name in ("data.py", "model.py"):
        h.update((SRC / name).read_bytes())
    return h.hexdigest()[:16]


@pytest.fixture(scope="session")
def desk(request):
    """``(model, test_set)`` for the bundled shape set, trained once and cached on disk."""
    cache = Path(request.config.cache.mkdir("fencekit-desk")) / _desk_key()
    cache.mkdir(exist_ok=True)
    model_path, test_path = cache / "model.bin", cache / "test.npz"
    if model_path.exists() and test_path.exists():
        z = np.load(test_path)
        return Classifier.load(model_path), Dataset(z["images"], z["labels"], "test")
    train_set, test_set = make_shapes_dataset(DESK["n_train"], DESK["n_test"], seed=DESK["data_seed"])
    model = train(train_set, DESK["epochs"], DESK["lr"], DESK["train_seed"], test=test_set)
    model.save(model_path)
    np.savez(test_path, images=test_set.images, labels=test_set.labels)
    return model, test_set


# ----------------------------------------------------------------------------- acceptance reporting


@pytest.fixture
def accept(request):
    """``accept(n, ok, text)`` records a measured detail for criterion ``n``."""

    def record(n, ok, text):
        request.config._fk_details[n].append((bool(ok), text))

    return record


def _criteria_of(item):
    out = {m.args[0] for m in item.iter_markers("criterion")}
    if Path(str(item.fspath)).name != "test_acceptance.py":
        out.add(8)
    return out


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    failed = rep.failed
    done = rep.when == "call" or (rep.when == "setup" and (rep.failed or rep.skipped))
    if not done and not failed:
        return
    xfail = hasattr(rep, "wasxfail")
    for n in _criteria_of(item):
        item.config._fk_outcomes[n].append((item.nodeid, rep.when, failed, rep.skipped and not xfail, rep.duration))


def pytest_terminal_summary(terminalreporter, config):
    outcomes, details = config._fk_outcomes, config._fk_details
    if not outcomes and not details:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        runs = outcomes.get(n, [])
        if not runs and not details.get(n):
            tr.write_line(f"criterion {n} [{title}]: NOT RUN")
            continue
        failed = sorted({nid for nid, _, f, _, _ in runs if f})
        skipped = sorted({nid for nid, _, _, s, _ in runs if s})
        tests = len({nid for nid, *_ in runs})
        seconds = sum(d for *_, d in runs)
        ok = not failed and not skipped and all(flag for flag, _ in details.get(n, []))
        limit = TIME_LIMITS.get(n)
        note = f"{tests} tests, {seconds:.0f} s"
        if limit is not None:
            ok = ok and seconds <= limit
            note += f" (limit {limit:.0f} s)"
        tr.write_line(f"criterion {n} [{title}]: {'PASS' if ok else 'FAIL'} - {note}")
        for flag, text in details.get(n, []):
            tr.write_line(f"    {'ok  ' if flag else 'MISS'} {text}")
        for nid in failed[:10]:
            tr.write_line(f"    failed: {nid}")
        for nid in skipped[:10]:
            tr.write_line(f"    skipped: {nid}")
