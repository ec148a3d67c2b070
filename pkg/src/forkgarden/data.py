"""Event datasets: schema, file format, validation, synthesis.

A dataset is a set of projects, each with an intervention time and a
sorted list of timestamped events.  Every event carries one non-negative
value per dependent variable and one finite value per covariate.  Storage
is columnar (one float64 array per project and column family) because the
panel builder consumes whole columns; EventRecord views exist for tests
and debugging.

File format: UTF-8 text, two header lines naming the schema, then one CSV
row per event::

    #dv: merged_count,comment_count
    #cov: community_size
    proj-a,12.5,100,3,250.0

Row columns are project_id, timestamp_days, intervention_days, one column
per dependent variable, one per covariate.  Blank lines and ``#`` comment
lines are ignored after the header.  Projects whose events do not straddle
the intervention are rejected at ingestion and reported, not silently
dropped.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from forkgarden.errors import (
    EmptyDataset,
    InvalidConfig,
    InvalidProject,
    ParseError,
    SchemaError,
)

__all__ = [
    "EventRecord",
    "ProjectRecord",
    "EventDataset",
    "IngestReport",
    "DvEffect",
    "CovariateSpec",
    "SynthConfig",
    "ingest",
    "ingest_text",
    "serialize",
    "synthesize",
]

RESERVED_NAMES = frozenset(
    {"const", "time", "intervention", "time_after", "project_id", "period"}
)

_NAME_OK = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class EventRecord(NamedTuple):
    """Row view of one event, for inspection and tests."""

    timestamp: float
    dv_values: dict
    covariate_values: dict


class ProjectRecord:
    """Immutable per-project event table.

    timestamps are sorted ascending; dv_values is (n_events, n_dv) and
    cov_values (n_events, n_cov), aligned with timestamps.
    """

    __slots__ = ("project_id", "intervention_time", "timestamps", "dv_values", "cov_values")

    def __init__(self, project_id, intervention_time, timestamps, dv_values, cov_values):
        timestamps = np.ascontiguousarray(timestamps, dtype=np.float64)
        dv_values = np.ascontiguousarray(dv_values, dtype=np.float64)
        cov_values = np.ascontiguousarray(cov_values, dtype=np.float64)
        n = timestamps.shape[0]
        if dv_values.ndim != 2 or dv_values.shape[0] != n:
            raise InvalidProject(f"{project_id}: dv block must be (n_events, n_dv)")
        if cov_values.ndim != 2 or cov_values.shape[0] != n:
            raise InvalidProject(f"{project_id}: covariate block must be (n_events, n_cov)")
        if n < 2:
            raise InvalidProject(f"{project_id}: needs at least two events")
        if not np.all(np.isfinite(timestamps)):
            raise InvalidProject(f"{project_id}: non-finite timestamp")
        if np.any(np.diff(timestamps) < 0):
            raise InvalidProject(f"{project_id}: timestamps not sorted")
        if not math.isfinite(intervention_time):
            raise InvalidProject(f"{project_id}: non-finite intervention time")
        if not np.all(np.isfinite(dv_values)):
            raise InvalidProject(f"{project_id}: non-finite dependent-variable value")
        if np.any(dv_values < 0):
            raise InvalidProject(f"{project_id}: negative dependent-variable value")
        if not np.all(np.isfinite(cov_values)):
            raise InvalidProject(f"{project_id}: non-finite covariate value")
        if not np.any(timestamps < intervention_time):
            raise InvalidProject(f"{project_id}: no event before the intervention")
        if not np.any(timestamps > intervention_time):
            raise InvalidProject(f"{project_id}: no event after the intervention")
        for arr in (timestamps, dv_values, cov_values):
            arr.setflags(write=False)
        self.project_id = str(project_id)
        self.intervention_time = float(intervention_time)
        self.timestamps = timestamps
        self.dv_values = dv_values
        self.cov_values = cov_values

    @property
    def n_events(self) -> int:
        return self.timestamps.shape[0]

    def __eq__(self, other):
        return (
            isinstance(other, ProjectRecord)
            and self.project_id == other.project_id
            and self.intervention_time == other.intervention_time
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.dv_values, other.dv_values)
            and np.array_equal(self.cov_values, other.cov_values)
        )


@dataclass(frozen=True)
class IngestReport:
    """What ingestion read, kept, and rejected (with reasons)."""

    n_rows: int
    n_projects: int
    rejected: tuple  # of (project_id, reason)


def _check_names(names, label):
    for n in names:
        if not _NAME_OK.fullmatch(n):
            raise SchemaError(f"bad {label} name {n!r}")
        if n in RESERVED_NAMES:
            raise SchemaError(f"{label} name {n!r} is reserved")


class EventDataset:
    """Schema plus per-project event tables.

    The schema names dependent variables and covariates; those names feed
    straight into panel and design-matrix columns, so reserved column
    names are rejected here.
    """

    def __init__(self, dv_names, cov_names, projects, ingest_report=None):
        dv_names = tuple(str(n) for n in dv_names)
        cov_names = tuple(str(n) for n in cov_names)
        if not dv_names:
            raise SchemaError("dataset needs at least one dependent variable")
        _check_names(dv_names, "dependent-variable")
        _check_names(cov_names, "covariate")
        all_names = dv_names + cov_names
        if len(set(all_names)) != len(all_names):
            raise SchemaError("dependent-variable and covariate names overlap")
        projects = tuple(projects)
        if not projects:
            raise EmptyDataset("dataset has no projects")
        ids = [p.project_id for p in projects]
        if len(set(ids)) != len(ids):
            raise SchemaError("duplicate project ids")
        for p in projects:
            if p.dv_values.shape[1] != len(dv_names):
                raise SchemaError(f"{p.project_id}: wrong dependent-variable count")
            if p.cov_values.shape[1] != len(cov_names):
                raise SchemaError(f"{p.project_id}: wrong covariate count")
        self.dv_names = dv_names
        self.cov_names = cov_names
        self.projects = projects
        self.ingest_report = ingest_report
        self._stack_cache = None
        self._digest_cache = None

    @property
    def n_projects(self) -> int:
        return len(self.projects)

    @property
    def n_events(self) -> int:
        return sum(p.n_events for p in self.projects)

    def project(self, project_id: str) -> ProjectRecord:
        for p in self.projects:
            if p.project_id == project_id:
                return p
        raise KeyError(project_id)

    def iter_events(self, project_id: str):
        """EventRecord views of one project's rows."""
        p = self.project(project_id)
        for i in range(p.n_events):
            yield EventRecord(
                float(p.timestamps[i]),
                dict(zip(self.dv_names, p.dv_values[i].tolist())),
                dict(zip(self.cov_names, p.cov_values[i].tolist())),
            )

    def __eq__(self, other):
        return (
            isinstance(other, EventDataset)
            and self.dv_names == other.dv_names
            and self.cov_names == other.cov_names
            and self.projects == other.projects
        )

    def stacked(self):
        """Concatenated event columns for the panel builder.

        Returns (rel_t, dv_all, cov_all, starts) where rel_t is the event
        time minus the project's intervention time and starts[g]:starts[g+1]
        delimits project g.  Computed once and cached; arrays are
        read-only.
        """
        if self._stack_cache is None:
            rel = np.concatenate(
                [p.timestamps - p.intervention_time for p in self.projects]
            )
            dv = np.concatenate([p.dv_values for p in self.projects], axis=0)
            cov = np.concatenate([p.cov_values for p in self.projects], axis=0)
            counts = np.array([p.n_events for p in self.projects], dtype=np.int64)
            starts = np.concatenate(([0], np.cumsum(counts)))
            for arr in (rel, dv, cov, starts):
                arr.setflags(write=False)
            self._stack_cache = (rel, dv, cov, starts)
        return self._stack_cache

    def digest(self) -> str:
        if self._digest_cache is None:
            h = hashlib.sha256()
            for chunk in _serialized_chunks(self):
                h.update(chunk.encode("utf-8"))
            self._digest_cache = h.hexdigest()
        return self._digest_cache


# ---------------------------------------------------------------------------
# file format


def _fmt(v: float) -> str:
    # shortest round-trip form; integral values stay integral
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _serialized_chunks(dataset: EventDataset):
    yield "#dv: " + ",".join(dataset.dv_names) + "\n"
    yield "#cov: " + ",".join(dataset.cov_names) + "\n"
    for p in dataset.projects:
        ts = p.timestamps
        dv = p.dv_values
        cov = p.cov_values
        t0 = _fmt(p.intervention_time)
        rows = []
        for i in range(p.n_events):
            cells = [p.project_id, _fmt(ts[i]), t0]
            cells.extend(_fmt(x) for x in dv[i])
            cells.extend(_fmt(x) for x in cov[i])
            rows.append(",".join(cells) + "\n")
        yield "".join(rows)


def serialize(dataset: EventDataset, path) -> None:
    """Write a dataset in the ingestible text format (exact round trip)."""
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in _serialized_chunks(dataset):
            fh.write(chunk)


def ingest_text(text: str) -> EventDataset:
    """Parse dataset text; see the module docstring for the format."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#dv:"):
        raise SchemaError("first line must declare dependent variables: '#dv: ...'")
    if len(lines) < 2 or not lines[1].startswith("#cov:"):
        raise SchemaError("second line must declare covariates: '#cov: ...'")
    dv_names = [t.strip() for t in lines[0][len("#dv:"):].split(",") if t.strip()]
    cov_raw = lines[1][len("#cov:"):].strip()
    cov_names = [t.strip() for t in cov_raw.split(",") if t.strip()] if cov_raw else []
    if not dv_names:
        raise SchemaError("no dependent variables declared")
    ncol = 3 + len(dv_names) + len(cov_names)
    # per project id: [t0, [ts...], [dv rows...], [cov rows...], first_line]
    acc: dict = {}
    order: list = []
    n_rows = 0
    for line_no, raw in enumerate(lines[2:], start=3):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = line.split(",")
        if len(cells) != ncol:
            raise ParseError(line_no, f"expected {ncol} columns, got {len(cells)}")
        pid = cells[0].strip()
        if not pid:
            raise ParseError(line_no, "empty project id")
        try:
            nums = [float(c) for c in cells[1:]]
        except ValueError:
            bad = next(c for c in cells[1:] if not _is_float(c))
            raise ParseError(line_no, f"not a number: {bad.strip()!r}") from None
        ts, t0 = nums[0], nums[1]
        dvs = nums[2:2 + len(dv_names)]
        covs = nums[2 + len(dv_names):]
        for name, v in zip(dv_names, dvs):
            if not math.isfinite(v) or v < 0:
                raise ParseError(
                    line_no, f"dependent variable {name!r} must be a non-negative count"
                )
        for name, v in zip(cov_names, covs):
            if not math.isfinite(v):
                raise ParseError(line_no, f"covariate {name!r} is not finite")
        if not math.isfinite(ts):
            raise ParseError(line_no, "timestamp is not finite")
        if pid not in acc:
            acc[pid] = [t0, [], [], [], line_no]
            order.append(pid)
        elif acc[pid][0] != t0:
            raise ParseError(
                line_no,
                f"project {pid!r} declares intervention {t0!r}, "
                f"earlier rows said {acc[pid][0]!r}",
            )
        slot = acc[pid]
        slot[1].append(ts)
        slot[2].append(dvs)
        slot[3].append(covs)
        n_rows += 1
    if not order:
        raise EmptyDataset("no event rows")
    projects = []
    rejected = []
    for pid in order:
        t0, ts, dvs, covs, _first = acc[pid]
        idx = np.argsort(np.asarray(ts), kind="stable")
        try:
            projects.append(
                ProjectRecord(
                    pid,
                    t0,
                    np.asarray(ts, dtype=np.float64)[idx],
                    np.asarray(dvs, dtype=np.float64).reshape(len(ts), len(dv_names))[idx],
                    np.asarray(covs, dtype=np.float64).reshape(len(ts), len(cov_names))[idx],
                )
            )
        except InvalidProject as e:
            rejected.append((pid, str(e)))
    report = IngestReport(n_rows=n_rows, n_projects=len(projects), rejected=tuple(rejected))
    if not projects:
        raise EmptyDataset(
            "all projects rejected: "
            + "; ".join(reason for _, reason in rejected[:5])
        )
    return EventDataset(dv_names, cov_names, projects, ingest_report=report)


def _is_float(c: str) -> bool:
    try:
        float(c)
        return True
    except ValueError:
        return False


def ingest(path) -> EventDataset:
    """Read and validate a dataset file."""
    with open(path, "r", encoding="utf-8") as fh:
        return ingest_text(fh.read())


# ---------------------------------------------------------------------------
# synthesis


@dataclass(frozen=True)
class DvEffect:
    """Ground-truth coefficients of one dependent variable, in period units.

    level + trend * tau + step * [t >= t0] + trend_change * max(tau, 0),
    with tau the event time minus the intervention time divided by
    reference_period_days.
    """

    level: float
    trend: float = 0.0
    step: float = 0.0
    trend_change: float = 0.0


@dataclass(frozen=True)
class CovariateSpec:
    """Covariate generator: base + trend * tau + N(0, jitter_sd) per event.

    ``effect`` is the covariate's loading on every dependent variable's
    mean.
    """

    base: float
    trend: float = 0.0
    jitter_sd: float = 1.0
    effect: float = 0.0


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic dataset recipe.  Same config and seed, same bytes out."""

    n_projects: int
    events_per_day: float
    span_days: float
    dv_effects: tuple  # of (name, DvEffect)
    covariates: tuple = ()  # of (name, CovariateSpec)
    intercept_sd: float = 0.5
    noise_sd: float = 1.0
    reference_period_days: float = 30.0
    intervention_range: tuple = (1000.0, 2000.0)
    seed: int = 0

    def __post_init__(self):
        if self.n_projects < 1:
            raise InvalidConfig("n_projects must be positive")
        if not self.events_per_day > 0:
            raise InvalidConfig("events_per_day must be positive")
        if not self.span_days > 0:
            raise InvalidConfig("span_days must be positive")
        if not self.dv_effects:
            raise InvalidConfig("at least one dependent variable required")
        if self.intercept_sd < 0 or self.noise_sd < 0:
            raise InvalidConfig("standard deviations must be non-negative")
        if not self.reference_period_days > 0:
            raise InvalidConfig("reference_period_days must be positive")
        lo, hi = self.intervention_range
        if not lo <= hi:
            raise InvalidConfig("intervention_range must be ordered")
        object.__setattr__(self, "dv_effects", tuple(self.dv_effects))
        object.__setattr__(self, "covariates", tuple(self.covariates))


def synthesize(config: SynthConfig) -> EventDataset:
    """Generate a dataset from known ground truth.

    Event counts per project are Poisson in the window length, timestamps
    uniform over (t0 - span, t0 + span).  Each dependent variable draws
    one project intercept, adds the configured discontinuity terms and
    covariate loadings, then clamps at zero and rounds to an integer
    count.  The draw order is fixed, so output is bitwise reproducible
    for a given config.
    """
    rng = np.random.default_rng(config.seed)
    dv_names = [n for n, _ in config.dv_effects]
    cov_names = [n for n, _ in config.covariates]
    lo, hi = config.intervention_range
    width = int(math.log10(config.n_projects)) + 1 if config.n_projects > 1 else 1
    projects = []
    for i in range(config.n_projects):
        t0 = float(rng.uniform(lo, hi))
        n_ev = int(rng.poisson(config.events_per_day * 2.0 * config.span_days))
        while True:
            ts = rng.uniform(t0 - config.span_days, t0 + config.span_days, size=max(n_ev, 2))
            if np.any(ts < t0) and np.any(ts > t0):
                break
        ts = np.sort(ts)
        tau = (ts - t0) / config.reference_period_days
        cov_cols = []
        cov_load = np.zeros(ts.shape[0])
        for _, cs in config.covariates:
            col = cs.base + cs.trend * tau + rng.normal(0.0, cs.jitter_sd, ts.shape[0])
            cov_cols.append(col)
            cov_load = cov_load + cs.effect * col
        post = ts >= t0
        dv_cols = []
        for _, eff in config.dv_effects:
            u = float(rng.normal(0.0, config.intercept_sd))
            mu = (
                eff.level
                + u
                + eff.trend * tau
                + eff.step * post
                + eff.trend_change * np.maximum(tau, 0.0)
                + cov_load
            )
            noisy = mu + rng.normal(0.0, config.noise_sd, ts.shape[0])
            dv_cols.append(np.rint(np.maximum(noisy, 0.0)))
        projects.append(
            ProjectRecord(
                f"p{i:0{width}d}",
                t0,
                ts,
                np.column_stack(dv_cols) if dv_cols else np.empty((ts.shape[0], 0)),
                np.column_stack(cov_cols) if cov_cols else np.empty((ts.shape[0], 0)),
            )
        )
    return EventDataset(dv_names, cov_names, projects)
