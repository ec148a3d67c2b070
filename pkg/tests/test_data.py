"""Event dataset: validation, text round-trips, and the synthesizer."""

import numpy as np
import pytest

from forkgarden import data
from forkgarden.data import (
    CovariateSpec,
    DvEffect,
    EventDataset,
    ProjectRecord,
    SynthConfig,
    ingest_text,
    serialize,
    synthesize,
)
from forkgarden.errors import (
    EmptyDataset,
    InvalidConfig,
    InvalidProject,
    ParseError,
    SchemaError,
)

from conftest import make_dataset


def test_project_requires_straddle():
    ts = np.array([1.0, 2.0, 3.0])
    dv = np.ones((3, 1))
    cov = np.zeros((3, 0))
    with pytest.raises(InvalidProject):
        ProjectRecord("p", 5.0, ts, dv, cov)  # all before
    with pytest.raises(InvalidProject):
        ProjectRecord("p", 0.0, ts, dv, cov)  # all after
    # An event exactly at the intervention does not count as either side.
    with pytest.raises(InvalidProject):
        ProjectRecord("p", 2.0, np.array([2.0, 2.0]), np.ones((2, 1)), np.zeros((2, 0)))
    ok = ProjectRecord("p", 2.0, ts, dv, cov)
    assert ok.n_events == 3


def test_project_rejects_bad_values():
    good_ts = np.array([0.0, 10.0])
    with pytest.raises(InvalidProject):
        ProjectRecord("p", 5.0, np.array([10.0, 0.0]), np.ones((2, 1)), np.zeros((2, 0)))
    with pytest.raises(InvalidProject):
        ProjectRecord("p", 5.0, good_ts, np.array([[1.0], [-1.0]]), np.zeros((2, 0)))
    with pytest.raises(InvalidProject):
        ProjectRecord("p", 5.0, good_ts, np.array([[1.0], [np.nan]]), np.zeros((2, 0)))
    with pytest.raises(InvalidProject):
        ProjectRecord("p", 5.0, np.array([0.0]), np.ones((1, 1)), np.zeros((1, 0)))


def test_schema_rejects_reserved_and_duplicate_names():
    pr = ProjectRecord(
        "p", 1.0, np.array([0.0, 2.0]), np.ones((2, 1)), np.zeros((2, 0))
    )
    with pytest.raises(SchemaError):
        EventDataset(("time",), (), (pr,))
    with pytest.raises(SchemaError):
        EventDataset(("dv_a",), ("dv_a",), (pr,))
    with pytest.raises(SchemaError):
        EventDataset(("dv_a", "dv_a"), (), (pr,))
    with pytest.raises(SchemaError):
        EventDataset(("1bad",), (), (pr,))


def test_round_trip_preserves_bytes(tmp_path, small_dataset):
    p1 = tmp_path / "a.fgdata"
    p2 = tmp_path / "b.fgdata"
    serialize(small_dataset, p1)
    again = data.ingest(p1)
    assert again == small_dataset
    assert again.digest() == small_dataset.digest()
    serialize(again, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_ingest_reports_line_numbers():
    header = "#dv: dv_a\n#cov: size\n"
    with pytest.raises(ParseError) as exc:
        ingest_text(header + "p0,1.0,5.0,2.0\n")  # missing covariate cell
    assert exc.value.line == 3
    with pytest.raises(ParseError) as exc:
        ingest_text(header + "p0,1.0,5.0,2.0,1.0\np0,9.0,5.0,two,3.0\n")
    assert exc.value.line == 4
    with pytest.raises(SchemaError):
        ingest_text("no header\n")


def test_ingest_rejects_projects_not_rows():
    # A project whose events sit entirely on one side is rejected whole,
    # with the reason recorded; surviving projects still load.
    text = (
        "#dv: dv_a\n#cov:\n"
        "good,1.0,5.0,2\n"
        "good,9.0,5.0,3\n"
        "lopsided,1.0,5.0,2\n"
        "lopsided,2.0,5.0,3\n"
    )
    ds = ingest_text(text)
    assert [p.project_id for p in ds.projects] == ["good"]
    assert ds.ingest_report.n_rows == 4
    assert len(ds.ingest_report.rejected) == 1
    assert ds.ingest_report.rejected[0][0] == "lopsided"


def test_ingest_rejects_inconsistent_intervention():
    text = (
        "#dv: dv_a\n#cov:\n"
        "p,1.0,5.0,2\n"
        "p,9.0,6.0,3\n"
    )
    with pytest.raises(ParseError):
        ingest_text(text)


def test_all_rejected_is_empty_dataset():
    text = (
        "#dv: dv_a\n#cov:\n"
        "p,1.0,5.0,2\n"
        "p,2.0,5.0,3\n"
    )
    with pytest.raises(EmptyDataset):
        ingest_text(text)


def test_make_dataset_helper():
    ds = make_dataset(
        [("p0", 10.0, [(5.0, [1.0], []), (15.0, [2.0], [])])],
        dv_names=("dv_a",),
    )
    assert ds.n_projects == 1
    assert ds.n_events == 2


# ---------------------------------------------------------------------------
# synthesizer


def _cfg(**kw):
    base = dict(
        n_projects=30,
        events_per_day=0.5,
        span_days=200.0,
        dv_effects=(("dv_a", DvEffect(8.0, 0.0, 4.0, 0.0)),),
        covariates=(),
        seed=3,
    )
    base.update(kw)
    return SynthConfig(**base)


def test_synthesis_is_deterministic():
    a = synthesize(_cfg())
    b = synthesize(_cfg())
    assert a == b
    assert a.digest() == b.digest()
    c = synthesize(_cfg(seed=4))
    assert c.digest() != a.digest()


def test_synthesis_respects_config_shape():
    cfg = _cfg(
        n_projects=12,
        dv_effects=(("x", DvEffect(5.0, 0.0, 0.0, 0.0)), ("y", DvEffect(3.0, 0.0, 0.0, 0.0))),
        covariates=(("c1", CovariateSpec(10.0, 0.0, 1.0, 0.0)),),
    )
    ds = synthesize(cfg)
    assert ds.n_projects == 12
    assert ds.dv_names == ("x", "y")
    assert ds.cov_names == ("c1",)
    for p in ds.projects:
        assert (p.timestamps >= 0).all()
        assert (p.dv_values >= 0).all()
        assert (p.timestamps < p.intervention_time).any()
        assert (p.timestamps > p.intervention_time).any()


def test_synthesis_injects_level_step():
    # A level step of +4 on noise sd 1 must show up as roughly +4 in the
    # raw post/pre means, far outside sampling noise at this size.
    ds = synthesize(_cfg(n_projects=60, span_days=300.0, seed=9))
    pre, post = [], []
    for p in ds.projects:
        rel = p.timestamps - p.intervention_time
        pre.extend(p.dv_values[rel < 0, 0])
        post.extend(p.dv_values[rel > 0, 0])
    diff = float(np.mean(post) - np.mean(pre))
    assert 3.0 < diff < 5.0


def test_synthesis_validates_config():
    with pytest.raises(InvalidConfig):
        _cfg(n_projects=0)
    with pytest.raises(InvalidConfig):
        _cfg(events_per_day=0.0)
    with pytest.raises(InvalidConfig):
        _cfg(dv_effects=())
    with pytest.raises(InvalidConfig):
        _cfg(noise_sd=-1.0)
    with pytest.raises(InvalidConfig):
        _cfg(intervention_range=(2000.0, 1000.0))


def test_synthesized_round_trip(tmp_path):
    ds = synthesize(_cfg())
    path = tmp_path / "s.fgdata"
    serialize(ds, path)
    assert data.ingest(path) == ds
