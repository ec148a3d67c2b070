"""Shared fixtures: tiny decision spaces and hand-buildable datasets."""

import numpy as np
import pytest

from forkgarden import data, spec

TINY_SPEC = """\
[decision periods]
kind = count
values = 12, 24

[decision period_length]
kind = duration-days
values = 7, 30

[decision exclusion]
kind = exclusion-window
values = (0, 7), (15, 15)

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
values = true, false

[constraints]
forbid = scaling=ln & averaging=median
"""

# Smallest spec that still exercises every module: 16 universes, two dvs
# worth of panels per universe, no constraints.
MICRO_SPEC = """\
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


@pytest.fixture(scope="session")
def tiny_spec():
    return spec.parse_spec(TINY_SPEC)


@pytest.fixture(scope="session")
def micro_spec():
    return spec.parse_spec(MICRO_SPEC)


def make_dataset(projects, dv_names=("dv_a",), cov_names=()):
    """Dataset from [(project_id, t0, [(ts, [dvs], [covs]), ...]), ...]."""
    records = []
    for pid, t0, events in projects:
        ts = np.array([e[0] for e in events], dtype=np.float64)
        dvs = np.array([e[1] for e in events], dtype=np.float64).reshape(len(events), -1)
        if cov_names:
            covs = np.array([e[2] for e in events], dtype=np.float64).reshape(
                len(events), -1
            )
        else:
            covs = np.zeros((len(events), 0))
        order = np.argsort(ts, kind="stable")
        records.append(
            data.ProjectRecord(pid, float(t0), ts[order], dvs[order], covs[order])
        )
    return data.EventDataset(tuple(dv_names), tuple(cov_names), tuple(records))


def straddle_events(rng, n, span, t0, n_dv, n_cov, base=5.0):
    """Random events guaranteed to straddle t0."""
    while True:
        ts = rng.uniform(t0 - span, t0 + span, size=n)
        if (ts < t0).any() and (ts > t0).any():
            break
    ts.sort()
    dvs = rng.poisson(base, size=(n, n_dv)).astype(float)
    covs = rng.normal(10.0, 2.0, size=(n, n_cov))
    return [(ts[i], list(dvs[i]), list(covs[i])) for i in range(n)]


@pytest.fixture(scope="session")
def small_dataset():
    """40 projects, 2 dvs, 1 covariate; enough data for every tiny-spec panel."""
    from forkgarden.data import CovariateSpec, DvEffect, SynthConfig, synthesize

    cfg = SynthConfig(
        n_projects=40,
        events_per_day=0.6,
        span_days=400.0,
        dv_effects=(
            ("dv_a", DvEffect(10.0, 0.05, -2.0, -0.08)),
            ("dv_b", DvEffect(6.0, -0.02, 1.5, 0.0)),
        ),
        covariates=(("size", CovariateSpec(100.0, 1.0, 40.0, 0.01)),),
        seed=11,
    )
    return synthesize(cfg)


@pytest.fixture(scope="session")
def small_baseline(small_dataset, tiny_spec):
    from forkgarden.outcomes import baseline_from_result
    from forkgarden.rdit import run_universe

    return baseline_from_result(run_universe(small_dataset, tiny_spec, tiny_spec.universe(0)))
