"""Regenerate the explorer test fixtures in frontend/test/fixtures.

Two stores plus an oracle file:

- micro.fgstore: byte copy of the engine's golden 16-universe fixture.
- edge.fgstore: small store that actually contains fit failures (an
  exclusion window wider than the data span empties the panel) and a
  constrained decision pair, so the include-fit-failures flag and the
  contradictory-pin empty state are both observable.
- oracle.json: ten filter states with the exact aggregates the engine's
  own `analyze` CLI reports for the equivalently filtered store.  The
  explorer's vitest suite replays these and must agree exactly.

Run from the repository root with the package installed:

    python3 frontend/scripts/make_fixtures.py
"""

import json
import pathlib
import random
import shutil
import subprocess
import tempfile

from forkgarden.data import CovariateSpec, DvEffect, SynthConfig, synthesize
from forkgarden.outcomes import baseline_from_result
from forkgarden.rdit import run_universe
from forkgarden.runner import run_multiverse
from forkgarden.spec import parse_spec

HERE = pathlib.Path(__file__).parent
FIXTURES = HERE.parent / "test" / "fixtures"
GOLDEN = HERE.parent.parent / "tests" / "data" / "golden" / "micro.fgstore"

EDGE_SPEC = """\
[decision periods]
kind = count
values = 4

[decision period_length]
kind = duration-days
values = 10

[decision exclusion]
kind = exclusion-window
values = (0, 0), (60, 60)

[decision scaling]
kind = scaling
values = original, ln

[decision averaging]
kind = averaging
values = mean, median

[decision rounding]
kind = rounding
values = unmodified

[decision vif_threshold]
kind = vif-threshold
values = 5

[decision reml]
kind = fitting-flag
values = true

[constraints]
forbid = scaling=ln & averaging=median
"""

EDGE_CONFIG = SynthConfig(
    n_projects=6,
    events_per_day=2.0,
    span_days=50.0,
    dv_effects=(("dv_a", DvEffect(8.0, 0.0, -1.5, 0.0)),),
    covariates=(("size", CovariateSpec(50.0, 0.5, 10.0, 0.01)),),
    seed=11,
)


def build_edge_store() -> pathlib.Path:
    spec = parse_spec(EDGE_SPEC)
    dataset = synthesize(EDGE_CONFIG)
    baseline = baseline_from_result(run_universe(dataset, spec, spec.universe(0)))
    out = FIXTURES / "edge.fgstore"
    with tempfile.TemporaryDirectory() as tmp:
        tmp_store = pathlib.Path(tmp) / "edge.fgstore"
        store, _ = run_multiverse(dataset, spec, baseline, tmp_store)
        out.write_bytes(tmp_store.read_bytes())
    failed = sum(1 for r in store.records if r["study_bucket"] == "model-fit-failure")
    if failed == 0 or failed == len(store.records):
        raise SystemExit("edge store must mix fitted and failed universes")
    print(f"edge store: {len(store.records)} universes, {failed} fit failures")
    return out


def random_state(rng: random.Random, decisions: list) -> dict:
    """One filter state: a random non-empty subset per decision plus flag."""
    selections = {}
    for d in decisions:
        values = d["values"]
        k = rng.randint(1, len(values))
        selections[d["id"]] = sorted(rng.sample(values, k), key=values.index)
    return {
        "selections": selections,
        "includeFitFailures": rng.random() < 0.5,
    }


def cli_analyze(store_path: pathlib.Path, state: dict, decisions: list, out: pathlib.Path):
    cmd = ["forkgarden", "analyze", "--store", str(store_path), "--out", str(out)]
    for d in decisions:
        chosen = state["selections"][d["id"]]
        if len(chosen) < len(d["values"]):
            cmd += ["--filter", f"{d['id']}={','.join(chosen)}"]
    if not state["includeFitFailures"]:
        cmd.append("--exclude-fit-failures")
    return subprocess.run(cmd, capture_output=True, text=True)


def oracle_entry(name: str, store_name: str, state: dict, outdir: pathlib.Path) -> dict:
    curve = json.loads((outdir / "spec_curve.json").read_text())
    stability = json.loads((outdir / "change_stability.json").read_text())
    buckets: dict = {}
    for e in curve["universes"]:
        buckets[e["study_bucket"]] = buckets.get(e["study_bucket"], 0) + 1
    return {
        "name": name,
        "store": store_name,
        "filter": state,
        "expected": {
            "n_universes": curve["n_universes"],
            "max_match_count": curve["max_match_count"],
            "curve": [
                [e["universe_id"], e["match_count"], e["study_bucket"]]
                for e in curve["universes"]
            ],
            "bucket_counts": buckets,
            "stability": stability["decisions"],
        },
    }


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(GOLDEN, FIXTURES / "micro.fgstore")
    build_edge_store()

    rng = random.Random(20260816)
    entries = []
    for store_name, want in (("micro.fgstore", 6), ("edge.fgstore", 4)):
        store_path = FIXTURES / store_name
        header = json.loads(store_path.read_text().splitlines()[0])
        decisions = header["decisions"]
        made = 0
        while made < want:
            if made == 0:
                # Identity state first: all values, failures included.
                state = {
                    "selections": {d["id"]: list(d["values"]) for d in decisions},
                    "includeFitFailures": True,
                }
            else:
                state = random_state(rng, decisions)
            with tempfile.TemporaryDirectory() as tmp:
                out = pathlib.Path(tmp) / "analysis"
                proc = cli_analyze(store_path, state, decisions, out)
                if proc.returncode != 0:
                    # Filter emptied the store; draw another state.
                    continue
                name = f"{store_name.split('.')[0]}-{made}"
                entries.append(oracle_entry(name, store_name, state, out))
            made += 1

    (FIXTURES / "oracle.json").write_text(
        json.dumps(entries, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"oracle.json: {len(entries)} filter states")


if __name__ == "__main__":
    main()
