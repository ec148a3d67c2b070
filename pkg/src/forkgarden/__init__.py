"""Multiverse analysis engine for regression-discontinuity-in-time studies.

The package turns one defensible analysis into all of them: a decision
space of modeling choices is expanded into universes, each universe is
projected onto the event data as a panel, fit with a random-intercept
model, and classified against a baseline outcome.  The results store and
the analyses built on top of it (specification curve, per-decision
stability, timeframe curve) are byte-deterministic.

Typical flow::

    spec = load_spec(default_spec_path("restricted"))
    dataset = ingest("events.fgdata")
    baseline = load_baseline("baseline.fgbase")
    store, telemetry = run_multiverse(dataset, spec, baseline, "out.fgstore")
    curve = spec_curve(store)
"""

__version__ = "0.1.0"

from forkgarden._backend import backend_name
from forkgarden.analysis import (
    change_stability,
    filter_records,
    spec_curve,
    time_curve,
)
from forkgarden.data import (
    EventDataset,
    SynthConfig,
    ingest,
    ingest_text,
    serialize,
    synthesize,
)
from forkgarden.errors import ForkgardenError
from forkgarden.outcomes import (
    BUCKETS,
    BaselineOutcome,
    baseline_from_result,
    bucket_universe,
    load_baseline,
    match_count,
)
from forkgarden.pipeline import PanelParams, build_panel, build_panel_set
from forkgarden.rdit import ModelParams, run_universe
from forkgarden.report import render_report
from forkgarden.runner import ResultsStore, RunTelemetry, run_multiverse
from forkgarden.spec import (
    MultiverseSpec,
    UniverseSpec,
    default_spec_path,
    load_spec,
    parse_spec,
)

__all__ = [
    "BUCKETS",
    "BaselineOutcome",
    "EventDataset",
    "ForkgardenError",
    "ModelParams",
    "MultiverseSpec",
    "PanelParams",
    "ResultsStore",
    "RunTelemetry",
    "SynthConfig",
    "UniverseSpec",
    "__version__",
    "backend_name",
    "baseline_from_result",
    "bucket_universe",
    "build_panel",
    "build_panel_set",
    "change_stability",
    "default_spec_path",
    "filter_records",
    "ingest",
    "ingest_text",
    "load_baseline",
    "load_spec",
    "match_count",
    "parse_spec",
    "render_report",
    "run_multiverse",
    "run_universe",
    "serialize",
    "spec_curve",
    "synthesize",
    "time_curve",
]
