"""Regenerate the golden run fixture in this directory.

The golden store pins the full numeric pipeline: synthesis, tiling,
aggregation, pruning, both fitting criteria, bucketing and the canonical
serialization.  Any byte difference in a fresh run against micro.fgstore
means observable behavior changed and needs a deliberate decision.

Run from the repository root:

    python3 tests/data/golden/make_golden.py
"""

import pathlib
import tempfile

from forkgarden.data import CovariateSpec, DvEffect, SynthConfig, serialize, synthesize
from forkgarden.outcomes import baseline_from_result
from forkgarden.rdit import run_universe
from forkgarden.runner import run_multiverse
from forkgarden.spec import parse_spec

HERE = pathlib.Path(__file__).parent

SPEC_TEXT = """\
[decision periods]
kind = count
values = 4, 8

[decision period_length]
kind = duration-days
values = 15, 30

[decision exclusion]
kind = exclusion-window
values = (0, 0)

[decision scaling]
kind = scaling
values = original, ln

[decision averaging]
kind = averaging
values = mean

[decision rounding]
kind = rounding
values = unmodified

[decision vif_threshold]
kind = vif-threshold
values = 5

[decision reml]
kind = fitting-flag
values = true, false
"""

CONFIG = SynthConfig(
    n_projects=12,
    events_per_day=0.5,
    span_days=400.0,
    dv_effects=(
        ("dv_a", DvEffect(10.0, 0.05, -2.0, -0.08)),
        ("dv_b", DvEffect(6.0, -0.02, 1.5, 0.0)),
    ),
    covariates=(("size", CovariateSpec(100.0, 1.0, 40.0, 0.01)),),
    seed=5,
)


def main():
    (HERE / "micro.fgspec").write_text(SPEC_TEXT, encoding="utf-8")
    spec = parse_spec(SPEC_TEXT)
    dataset = synthesize(CONFIG)
    serialize(dataset, HERE / "micro.fgdata")
    baseline = baseline_from_result(run_universe(dataset, spec, spec.universe(0)))
    (HERE / "micro.fgbase").write_text(baseline.to_text(), encoding="utf-8")
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp) / "micro.fgstore"
        store, telemetry = run_multiverse(dataset, spec, baseline, out)
        (HERE / "micro.fgstore").write_bytes(out.read_bytes())
    print(
        f"golden store: {telemetry.universes} universes, "
        f"{telemetry.fits_attempted} fit attempts, "
        f"{(HERE / 'micro.fgstore').stat().st_size} bytes"
    )


if __name__ == "__main__":
    main()
