"""Command-line workflow: every subcommand exercised in-process.

Engine errors exit 1 with a one-line message; argparse misuse exits 2;
success is exit 0 with machine-readable paths on stdout.
"""

import json
import pathlib

import pytest

from forkgarden import cli
from forkgarden.data import ingest
from forkgarden.spec import load_spec

GOLDEN = pathlib.Path(__file__).parent / "data" / "golden"
DATASET = str(GOLDEN / "micro.fgdata")
SPEC = str(GOLDEN / "micro.fgspec")
BASELINE = str(GOLDEN / "micro.fgbase")


# ---------------------------------------------------------------------------
# expand


def test_expand_bundled_spaces(capsys):
    assert cli.main(["expand"]) == 0
    assert capsys.readouterr().out.strip() == "4608"
    assert cli.main(["expand", "--spec", "restricted"]) == 0
    assert capsys.readouterr().out.strip() == "3072"


def test_expand_writes_manifest(tmp_path, capsys):
    manifest = tmp_path / "universes.ndjson"
    assert cli.main(["expand", "--spec", SPEC, "--manifest", str(manifest)]) == 0
    assert capsys.readouterr().out.strip() == "16"
    lines = manifest.read_text().splitlines()
    assert len(lines) == 16
    first = json.loads(lines[0])
    assert first["universe_id"] == 0
    assert set(first["assignment"]) == {
        "periods",
        "period_length",
        "exclusion",
        "scaling",
        "averaging",
        "rounding",
        "vif_threshold",
        "reml",
    }
    assert "digest" in first


def test_expand_unknown_spec_exits_one(capsys):
    assert cli.main(["expand", "--spec", "no-such-space"]) == 1
    assert "error: spec not found" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# synth


def test_synth_preset_overrides(tmp_path, capsys):
    out = tmp_path / "d.fgdata"
    rc = cli.main(
        ["synth", "--out", str(out), "--projects", "5", "--seed", "3",
         "--rate", "0.5", "--span", "240"]
    )
    assert rc == 0
    err = capsys.readouterr().err
    assert "wrote 5 projects" in err
    ds = ingest(out)
    assert ds.n_projects == 5
    assert ds.dv_names == ("metric_a", "metric_b", "metric_c", "metric_d")
    assert ds.cov_names == ("community_size", "community_activity")


def test_synth_config_file(tmp_path):
    cfg = {
        "n_projects": 3,
        "events_per_day": 0.4,
        "span_days": 200.0,
        "seed": 1,
        "dv_effects": {"thing": {"level": 5.0, "trend": 0.0, "step": 1.0, "trend_change": 0.0}},
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "d.fgdata"
    assert cli.main(["synth", "--out", str(out), "--config", str(cfg_path)]) == 0
    ds = ingest(out)
    assert ds.dv_names == ("thing",)
    assert ds.cov_names == ()
    assert ds.n_projects == 3


def test_synth_determinism(tmp_path):
    a, b = tmp_path / "a.fgdata", tmp_path / "b.fgdata"
    args = ["synth", "--projects", "4", "--seed", "9"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# run / analyze / report pipeline


@pytest.fixture(scope="module")
def run_store(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_run") / "micro.fgstore"
    rc = cli.main(
        ["run", "--dataset", DATASET, "--baseline", BASELINE,
         "--spec", SPEC, "--out", str(out), "--quiet"]
    )
    assert rc == 0
    return out


def test_run_reproduces_golden_store(run_store, capsys):
    assert run_store.read_bytes() == (GOLDEN / "micro.fgstore").read_bytes()


def test_run_prints_store_path_and_telemetry(tmp_path, capsys):
    out = tmp_path / "loud.fgstore"
    rc = cli.main(
        ["run", "--dataset", DATASET, "--baseline", BASELINE,
         "--spec", SPEC, "--out", str(out)]
    )
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out.strip() == str(out)
    assert "16 universes (32 fit attempts)" in captured.err
    assert "cache hits" in captured.err


def test_analyze_writes_documents(run_store, tmp_path, capsys):
    out = tmp_path / "analysis"
    assert cli.main(["analyze", "--store", str(run_store), "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == str(out)
    names = sorted(p.name for p in out.iterdir())
    assert names == [
        "change_stability.json",
        "change_stability.tsv",
        "spec_curve.json",
        "spec_curve.tsv",
        "time_curve.json",
        "time_curve.tsv",
    ]
    doc = json.loads((out / "spec_curve.json").read_text())
    assert doc["n_universes"] == 16
    assert doc["include_fit_failures"] is True
    tsv = (out / "spec_curve.tsv").read_text().splitlines()
    assert tsv[0] == "universe_id\tmatch_count\tstudy_bucket"
    assert len(tsv) == 17


def test_analyze_filter_narrows(run_store, tmp_path, capsys):
    out = tmp_path / "analysis"
    rc = cli.main(
        ["analyze", "--store", str(run_store), "--out", str(out),
         "--filter", "periods=4", "--filter", "reml=true"]
    )
    assert rc == 0
    capsys.readouterr()
    doc = json.loads((out / "spec_curve.json").read_text())
    assert doc["n_universes"] == 4


def test_analyze_filter_value_list(run_store, tmp_path, capsys):
    out = tmp_path / "analysis"
    rc = cli.main(
        ["analyze", "--store", str(run_store), "--out", str(out),
         "--filter", "periods=4,8"]
    )
    assert rc == 0
    capsys.readouterr()
    doc = json.loads((out / "spec_curve.json").read_text())
    assert doc["n_universes"] == 16


def test_analyze_exclude_fit_failures_flag(run_store, tmp_path, capsys):
    out = tmp_path / "analysis"
    rc = cli.main(
        ["analyze", "--store", str(run_store), "--out", str(out),
         "--exclude-fit-failures"]
    )
    assert rc == 0
    capsys.readouterr()
    doc = json.loads((out / "time_curve.json").read_text())
    assert doc["include_fit_failures"] is False


@pytest.mark.parametrize(
    "raw, message",
    [
        ("periods", "expects decision=value"),
        ("periods=", "names no values"),
        ("nope=4", "unknown decision"),
        ("periods=99", "unknown values"),
    ],
)
def test_analyze_filter_errors(run_store, tmp_path, capsys, raw, message):
    rc = cli.main(
        ["analyze", "--store", str(run_store), "--out", str(tmp_path / "x"),
         "--filter", raw]
    )
    assert rc == 1
    err = capsys.readouterr().err
    assert err.startswith("error: ")
    assert message in err


def test_report_from_analysis_dir(run_store, tmp_path, capsys):
    analysis_dir = tmp_path / "analysis"
    cli.main(["analyze", "--store", str(run_store), "--out", str(analysis_dir)])
    capsys.readouterr()
    figs = tmp_path / "figs"
    rc = cli.main(
        ["report", "--store", str(run_store), "--analysis", str(analysis_dir),
         "--out", str(figs)]
    )
    assert rc == 0
    captured = capsys.readouterr()
    assert "study" in captured.out  # summary table on stdout
    names = sorted(p.name for p in figs.iterdir())
    assert names == [
        "change_stability.svg",
        "overview.svg",
        "spec_curve.svg",
        "summary.tsv",
        "summary.txt",
        "time_curve.svg",
    ]


def test_report_recomputes_without_analysis_dir(run_store, tmp_path, capsys):
    figs = tmp_path / "figs"
    assert cli.main(["report", "--store", str(run_store), "--out", str(figs)]) == 0
    capsys.readouterr()
    assert (figs / "spec_curve.svg").exists()


def test_report_missing_analysis_file(run_store, tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    rc = cli.main(
        ["report", "--store", str(run_store), "--analysis", str(empty),
         "--out", str(tmp_path / "figs")]
    )
    assert rc == 1
    assert "missing analysis file" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# panel / fit inspection


def test_panel_to_stdout(capsys):
    rc = cli.main(
        ["panel", "--dataset", DATASET, "--spec", SPEC,
         "--universe", "0", "--dv", "dv_a"]
    )
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("# dv=dv_a periods=4")
    assert lines[1].startswith("project_id,period,intervention,time_after,dv_a")


def test_panel_to_file_accepts_digest(tmp_path, capsys):
    digest = load_spec(SPEC).universe(0).digest()
    out = tmp_path / "panel.csv"
    rc = cli.main(
        ["panel", "--dataset", DATASET, "--spec", SPEC,
         "--universe", digest, "--dv", "dv_a", "--out", str(out)]
    )
    assert rc == 0
    assert capsys.readouterr().out.strip() == str(out)

    cli.main(
        ["panel", "--dataset", DATASET, "--spec", SPEC,
         "--universe", "0", "--dv", "dv_a"]
    )
    by_id = capsys.readouterr().out
    assert out.read_text() == by_id


def test_panel_unknown_dv_exits_one(capsys):
    rc = cli.main(
        ["panel", "--dataset", DATASET, "--spec", SPEC,
         "--universe", "0", "--dv", "nope"]
    )
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_fit_dumps_json(capsys):
    rc = cli.main(
        ["fit", "--dataset", DATASET, "--spec", SPEC,
         "--universe", "0", "--dv", "dv_a"]
    )
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["universe_id"] == 0
    assert doc["dv"] == "dv_a"
    assert doc["status"] == "fitted"
    assert "intervention" in doc["fit"]["coefficients"]
    assert set(doc["verdicts"]["intervention"]) == {"significant", "sign"}


def test_fit_matches_store_record(run_store, capsys):
    from forkgarden.runner import ResultsStore

    cli.main(
        ["fit", "--dataset", DATASET, "--spec", SPEC,
         "--universe", "3", "--dv", "dv_b"]
    )
    doc = json.loads(capsys.readouterr().out)
    record = ResultsStore.load(run_store).record(3)
    assert doc["fit"] == record["dvs"]["dv_b"]["fit"]
    assert doc["verdicts"] == record["dvs"]["dv_b"]["verdicts"]


# ---------------------------------------------------------------------------
# top-level behavior


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("forkgarden ")


def test_missing_subcommand_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([])
    assert exc.value.code == 2


def test_unknown_argument_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["expand", "--bogus"])
    assert exc.value.code == 2
