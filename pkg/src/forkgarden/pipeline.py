"""Panel construction: events to period-level observations.

For one parameterization, each project's timeline is cut into n_periods
consecutive windows of period_length_days, half before and half after the
intervention, skipping a closed exclusion window [t0 - before, t0 + after]
around the intervention itself.  Post periods count 1, 2, ... away from
the exclusion edge, pre periods -1, -2, ... backwards; an event at
relative time e lands in

    period  floor((e - after) / L) + 1      if e > after
    period -(floor((-before - e) / L) + 1)  if e < -before

and is discarded otherwise (so period +1 covers [after, after + L) except
that the boundary point itself belongs to the exclusion window, and
period -1 mirrors it on the left).  Periods beyond +-n_periods/2 are
dropped.

Within each non-empty (project, period) cell the dependent variable is
scaled per event first (ln -> log(1 + v), log10 -> log10(1 + v)), then
averaged by the configured statistic.  Covariates are averaged the same
way but never scaled.  When a digit precision is set, aggregates are
rounded half-to-even at that many decimals.  Empty cells produce no row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from forkgarden.errors import DegeneratePanel, UnknownDependentVariable
from forkgarden.spec import AVERAGINGS, SCALINGS

__all__ = ["PanelParams", "PanelRow", "PanelFrame", "build_panel", "build_panel_set"]


@dataclass(frozen=True)
class PanelParams:
    """Projection of a universe onto the decisions that shape the panel.

    Universes that agree on these fields share panels exactly, which the
    runner exploits to build each distinct panel once.
    """

    n_periods: int
    period_length_days: float
    exclusion: tuple  # (days_before, days_after)
    scaling: str
    averaging: str
    digits: int | None  # None = leave aggregates unmodified

    def __post_init__(self):
        if self.n_periods < 2 or self.n_periods % 2:
            raise ValueError("n_periods must be a positive even integer")
        if not self.period_length_days > 0:
            raise ValueError("period_length_days must be positive")
        before, after = self.exclusion
        if before < 0 or after < 0:
            raise ValueError("exclusion window bounds must be non-negative")
        if self.scaling not in SCALINGS:
            raise ValueError(f"unknown scaling {self.scaling!r}")
        if self.averaging not in AVERAGINGS:
            raise ValueError(f"unknown averaging {self.averaging!r}")
        if self.digits is not None and self.digits < 0:
            raise ValueError("digits must be non-negative")
        object.__setattr__(
            self, "exclusion", (float(before), float(after))
        )
        object.__setattr__(self, "period_length_days", float(self.period_length_days))

    @classmethod
    def from_universe(cls, spec, universe) -> "PanelParams":
        """Project a universe assignment onto panel parameters by kind."""
        get = lambda kind: universe.get(spec.by_kind(kind).id)
        digits = get("rounding")
        return cls(
            n_periods=get("count"),
            period_length_days=get("duration-days"),
            exclusion=get("exclusion-window"),
            scaling=get("scaling"),
            averaging=get("averaging"),
            digits=None if digits == "unmodified" else int(digits),
        )


@dataclass(frozen=True)
class PanelRow:
    """One (project, period) observation, as a plain record."""

    project_id: str
    period: int
    value: float
    covariates: dict


class PanelFrame:
    """Period-level panel for one dependent variable, stored columnar.

    Rows are ordered by (project, period).  ``period`` is the signed
    period index; the derived regressors are properties so the design
    matrix and any serialization agree by construction.
    """

    def __init__(self, dv_name, params, project_ids, project_index, period, values, cov_names, cov_values):
        self.dv_name = dv_name
        self.params = params
        self.project_ids = tuple(project_ids)
        self.project_index = project_index
        self.period = period
        self.values = values
        self.cov_names = tuple(cov_names)
        self.cov_values = cov_values
        for arr in (project_index, period, values, cov_values):
            arr.setflags(write=False)

    @property
    def n_rows(self) -> int:
        return self.period.shape[0]

    @property
    def time(self) -> np.ndarray:
        return self.period.astype(np.float64)

    @property
    def intervention(self) -> np.ndarray:
        return (self.period > 0).astype(np.float64)

    @property
    def time_after(self) -> np.ndarray:
        return np.maximum(self.period, 0).astype(np.float64)

    def rows(self):
        """PanelRow views, for tests and inspection."""
        out = []
        for i in range(self.n_rows):
            out.append(
                PanelRow(
                    self.project_ids[self.project_index[i]],
                    int(self.period[i]),
                    float(self.values[i]),
                    dict(zip(self.cov_names, self.cov_values[i].tolist())),
                )
            )
        return out

    def to_text(self, fh) -> None:
        """Write a delimited dump (header comment, then CSV rows)."""
        p = self.params
        fh.write(
            "# dv=%s periods=%d period_length=%s exclusion=(%s, %s) "
            "scaling=%s averaging=%s digits=%s\n"
            % (
                self.dv_name,
                p.n_periods,
                _num(p.period_length_days),
                _num(p.exclusion[0]),
                _num(p.exclusion[1]),
                p.scaling,
                p.averaging,
                "unmodified" if p.digits is None else p.digits,
            )
        )
        cols = ["project_id", "period", "intervention", "time_after", self.dv_name]
        cols.extend(self.cov_names)
        fh.write(",".join(cols) + "\n")
        inter = self.intervention
        tafter = self.time_after
        for i in range(self.n_rows):
            cells = [
                self.project_ids[self.project_index[i]],
                str(int(self.period[i])),
                str(int(inter[i])),
                str(int(tafter[i])),
                repr(float(self.values[i])),
            ]
            cells.extend(repr(float(v)) for v in self.cov_values[i])
            fh.write(",".join(cells) + "\n")


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def _scale(values: np.ndarray, scaling: str) -> np.ndarray:
    if scaling == "original":
        return values
    if scaling == "ln":
        return np.log1p(values)
    return np.log10(1.0 + values)


def _cell_layout(dataset, params: PanelParams):
    """Assign events to (project, period) cells.

    Returns (starts, counts, row_project, row_period, valid_order) where
    valid_order indexes the retained events in cell order and
    starts/counts delimit each cell's run inside that selection.
    """
    rel_t, _dv, _cov, proj_starts = dataset.stacked()
    before, after = params.exclusion
    length = params.period_length_days
    half = params.n_periods // 2

    period = np.zeros(rel_t.shape[0], dtype=np.int64)
    pre = rel_t < -before
    if np.any(pre):
        i = np.floor((-before - rel_t[pre]) / length).astype(np.int64) + 1
        i[i > half] = 0
        period[pre] = -i
    post = rel_t > after
    if np.any(post):
        i = np.floor((rel_t[post] - after) / length).astype(np.int64) + 1
        i[i > half] = 0
        period[post] = i

    valid = np.flatnonzero(period)
    if valid.size == 0:
        raise DegeneratePanel(
            "no events fall inside any period for these parameters"
        )
    counts_per_proj = np.diff(proj_starts)
    proj_of_event = np.repeat(
        np.arange(counts_per_proj.shape[0], dtype=np.int64), counts_per_proj
    )
    vperiod = period[valid]
    # signed period -> dense slot 0..n_periods-1, preserving order
    slot = np.where(vperiod < 0, vperiod + half, vperiod + half - 1)
    cell = proj_of_event[valid] * params.n_periods + slot
    # events are time-sorted within projects and the period map is
    # monotone in time, so cell codes arrive nondecreasing
    starts = np.flatnonzero(np.concatenate(([True], cell[1:] != cell[:-1])))
    counts = np.diff(np.append(starts, cell.shape[0]))
    cell_ids = cell[starts]
    row_project = cell_ids // params.n_periods
    row_slot = cell_ids % params.n_periods
    row_period = np.where(row_slot < half, row_slot - half, row_slot - half + 1)
    return starts, counts, row_project, row_period, valid, cell


def _aggregate(column, starts, counts, cell, averaging):
    if averaging == "mean":
        return np.add.reduceat(column, starts) / counts
    order = np.lexsort((column, cell))
    sv = column[order]
    lo = sv[starts + (counts - 1) // 2]
    hi = sv[starts + counts // 2]
    return 0.5 * (lo + hi)


def _round(arr, digits):
    if digits is None:
        return arr
    return np.round(arr, digits)


def build_panel_set(dataset, params: PanelParams, dv_names=None) -> dict:
    """Panels for several dependent variables in one cell-assignment pass.

    All frames share the row layout and the covariate aggregates, since
    neither depends on the dependent variable.
    """
    if dv_names is None:
        dv_names = dataset.dv_names
    for name in dv_names:
        if name not in dataset.dv_names:
            raise UnknownDependentVariable(name)
    starts, counts, row_project, row_period, valid, cell = _cell_layout(dataset, params)
    _rel, dv_all, cov_all, _ps = dataset.stacked()
    cov_aggs = np.empty((starts.shape[0], len(dataset.cov_names)))
    for j in range(len(dataset.cov_names)):
        cov_aggs[:, j] = _aggregate(
            cov_all[valid, j], starts, counts, cell, params.averaging
        )
    cov_aggs = _round(cov_aggs, params.digits)
    cov_aggs.setflags(write=False)
    out = {}
    for name in dv_names:
        col = dv_all[valid, dataset.dv_names.index(name)]
        scaled = _scale(col, params.scaling)
        agg = _round(
            _aggregate(scaled, starts, counts, cell, params.averaging), params.digits
        )
        out[name] = PanelFrame(
            dv_name=name,
            params=params,
            project_ids=[p.project_id for p in dataset.projects],
            project_index=row_project,
            period=row_period,
            values=agg,
            cov_names=dataset.cov_names,
            cov_values=cov_aggs,
        )
    return out


def build_panel(dataset, dv_name: str, params: PanelParams) -> PanelFrame:
    """Panel for one dependent variable."""
    return build_panel_set(dataset, params, dv_names=[dv_name])[dv_name]
