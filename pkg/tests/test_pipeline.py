import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fencekit.core import RngStream
from fencekit.pipeline import (
    Pipeline,
    PipelineError,
    TransformSpec,
    apply_pipeline,
    parse_pipeline_config,
    parse_pipeline_name,
    pipeline_name,
    registry_list,
    serialize_pipeline,
)
from fencekit.transforms import KINDS, BdrSpec, FdSpec, RdgSpec, RgnSpec, apply_fd, apply_rdg, get_transform
from helpers import smooth_image


def test_single_stage_equals_direct_call():
    x = smooth_image(0)
    rng = RngStream(4, "img")
    for kind in KINDS:
        p = Pipeline.of(kind)
        direct = get_transform(kind).apply(get_transform(kind).spec_type(), x, rng.fork(f"stage-0-{kind}"))
        assert np.array_equal(apply_pipeline(p, x, rng), direct)


def test_fd_rdg_is_rdg_then_fd():
    x = smooth_image(1)
    rng = RngStream(7)
    p = parse_pipeline_name("FD+RDG")
    assert p.kinds == ("RDG", "FD")
    expected = apply_fd(FdSpec(), apply_rdg(RdgSpec(), x, rng.fork("stage-0-RDG")))
    assert np.array_equal(apply_pipeline(p, x, rng), expected)


def test_fd_twice_rdg_nested():
    x = smooth_image(2)
    rng = RngStream(8)
    p = parse_pipeline_name("FDx2+RDG")
    assert p.kinds == ("RDG", "FD", "FD")
    assert parse_pipeline_name("FD×3+RDG").kinds == ("RDG", "FD", "FD", "FD")
    expected = apply_fd(FdSpec(), apply_fd(FdSpec(), apply_rdg(RdgSpec(), x, rng.fork("stage-0-RDG"))))
    assert np.array_equal(apply_pipeline(p, x, rng), expected)


def test_names_round_trip():
    for name in ("FD+RDG", "FDx2+RDG", "FDx3+RDG", "SHIELD", "R-JPEG+SAT"):
        assert pipeline_name(parse_pipeline_name(name)) == name
    with pytest.raises(PipelineError):
        parse_pipeline_name("FD+NOPE")


def test_composition_is_associative_with_matching_labels():
    x = smooth_image(3)
    rng = RngStream(9)
    p = Pipeline.of("SAT", "RGN", "BdR")
    head = Pipeline((p.stages[0],))
    tail = Pipeline(p.stages[1:])
    assert np.array_equal(apply_pipeline(p, x, rng), apply_pipeline(tail, apply_pipeline(head, x, rng), rng))


def test_pipeline_deterministic_per_seed():
    x = smooth_image(4)
    p = Pipeline.of("RDG", "SHIELD", "PD")
    assert np.array_equal(p(x, RngStream(1)), p(x, RngStream(1)))
    assert not np.array_equal(p(x, RngStream(1)), p(x, RngStream(2)))


def test_parse_defaults_and_errors():
    p = parse_pipeline_config('{"stages":[{"kind":"BdR"}]}')
    assert p.stages[0].params == BdrSpec(bits=3)
    assert p.stages[0].rng_label == "stage-0-BdR"
    with pytest.raises(PipelineError, match="empty pipeline"):
        parse_pipeline_config('{"stages":[]}')
    with pytest.raises(PipelineError, match="sigma_min"):
        parse_pipeline_config('{"stages":[{"kind":"RGN","params":{"sigma_min":0.01,"sigma_max":0.001}}]}')
    with pytest.raises(PipelineError, match="unknown transform kind"):
        parse_pipeline_config('{"stages":[{"kind":"JPEG"}]}')
    with pytest.raises(PipelineError, match="unknown parameter"):
        parse_pipeline_config('{"stages":[{"kind":"FD","params":{"quality":3}}]}')
    with pytest.raises(PipelineError, match="invalid JSON"):
        parse_pipeline_config("{stages")
    with pytest.raises(PipelineError, match="empty pipeline"):
        Pipeline(())


def test_error_reports_failing_stage_index():
    doc = {"stages": [{"kind": "SAT"}, {"kind": "BdR", "params": {"bits": 12}}]}
    with pytest.raises(PipelineError) as info:
        parse_pipeline_config(json.dumps(doc))
    assert info.value.stage == 1
    assert "stage 1" in str(info.value)


def test_wrong_params_type_rejected():
    with pytest.raises(TypeError):
        TransformSpec("FD", BdrSpec())


stage_strategy = st.one_of(
    st.builds(lambda b: TransformSpec("BdR", BdrSpec(b)), st.integers(1, 8)),
    st.builds(lambda p: TransformSpec("FD", FdSpec(passes=p)), st.integers(1, 3)),
    st.builds(lambda lo, d: TransformSpec("RGN", RgnSpec(lo, lo + d)), st.floats(0, 0.01), st.floats(0, 0.01)),
    st.builds(lambda g, d: TransformSpec("RDG", RdgSpec(g, d)), st.integers(2, 40), st.floats(0, 0.9)),
    st.sampled_from([TransformSpec(k) for k in KINDS]),
)


@settings(max_examples=80, deadline=None)
@given(st.lists(stage_strategy, min_size=1, max_size=5))
def test_serialize_round_trip(stages):
    p = Pipeline(tuple(stages))
    assert parse_pipeline_config(serialize_pipeline(p)) == p


def test_registry_list():
    entries = registry_list()
    assert len(entries) == 15
    counts = {}
    for e in entries:
        counts[e["category"]] = counts.get(e["category"], 0) + 1
        # every listed default validates through the config path
        doc = {"stages": [{"kind": e["kind"], "params": e["defaults"]}]}
        parse_pipeline_config(json.dumps(doc))
    assert counts == {"distortion": 5, "compression": 5, "noise": 5}
