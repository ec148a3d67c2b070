"""Discontinuity fits over universes.

The model for every universe and dependent variable is a random-intercept
regression of the period-level aggregate on three time regressors

    time         signed period index
    intervention indicator of the post-intervention half
    time_after   period index clipped below at zero (slope change)

plus covariate aggregates.  Covariates are subject to VIF pruning at the
universe's threshold with the intercept and the three time regressors
protected; the variance ratio criterion (REML or ML) is the universe's
fitting flag.  Typed fit errors are captured per dependent variable as
fit failures rather than raised.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from forkgarden import stats
from forkgarden.errors import FitError
from forkgarden.pipeline import PanelFrame, PanelParams, build_panel_set
from forkgarden.stats import DesignMatrix, FitResult

__all__ = [
    "TIME_COLUMNS",
    "ModelParams",
    "HypothesisOutcome",
    "UniverseResult",
    "design_matrix",
    "fit_universe_dv",
    "run_universe",
]

TIME_COLUMNS = ("time", "intervention", "time_after")


@dataclass(frozen=True)
class ModelParams:
    """Projection of a universe onto the decisions that shape the fit."""

    vif_threshold: float
    reml: bool

    @classmethod
    def from_universe(cls, spec, universe) -> "ModelParams":
        return cls(
            vif_threshold=universe.get(spec.by_kind("vif-threshold").id),
            reml=universe.get(spec.by_kind("fitting-flag").id),
        )


@dataclass(frozen=True)
class HypothesisOutcome:
    """Significance and sign of every coefficient of one fitted model.

    status is "fitted" or "fit-failure"; failed fits carry the error code
    and no triples.  Signs are "+", "-" or "0" on the raw estimate.
    """

    dv_name: str
    alpha: float
    status: str
    failure: str | None = None
    coefficients: tuple = ()  # of (name, significant, sign)

    def triple(self, name: str):
        for nm, sig, sign in self.coefficients:
            if nm == name:
                return (sig, sign)
        raise KeyError(name)

    @property
    def fitted(self) -> bool:
        return self.status == "fitted"


@dataclass(frozen=True)
class UniverseResult:
    """Everything one universe produced: outcomes and full fit payloads."""

    universe_id: int
    outcomes: tuple  # of (dv_name, HypothesisOutcome)
    fits: tuple  # of (dv_name, FitResult | None), aligned with outcomes

    def outcome(self, dv_name: str) -> HypothesisOutcome:
        for nm, o in self.outcomes:
            if nm == dv_name:
                return o
        raise KeyError(dv_name)


def design_matrix(panel: PanelFrame) -> DesignMatrix:
    """Design matrix [const, time, intervention, time_after, covariates]
    grouped by project."""
    cols = [
        np.ones(panel.n_rows),
        panel.time,
        panel.intervention,
        panel.time_after,
    ]
    names = ["const", *TIME_COLUMNS]
    for j, nm in enumerate(panel.cov_names):
        cols.append(panel.cov_values[:, j])
        names.append(nm)
    return DesignMatrix(names, np.column_stack(cols), groups=panel.project_index)


def _sign(x: float) -> str:
    if x > 0:
        return "+"
    if x < 0:
        return "-"
    return "0"


def failure_outcome(dv_name: str, code: str, alpha: float) -> HypothesisOutcome:
    return HypothesisOutcome(
        dv_name=dv_name, alpha=alpha, status="fit-failure", failure=code
    )


def outcome_from_fit(dv_name: str, fit: FitResult, alpha: float) -> HypothesisOutcome:
    triples = tuple(
        (nm, fit.p_values[nm] < alpha, _sign(fit.coefficients[nm]))
        for nm in fit.coefficients
    )
    return HypothesisOutcome(
        dv_name=dv_name, alpha=alpha, status="fitted", coefficients=triples
    )


def fit_universe_dv(panel: PanelFrame, model: ModelParams, alpha: float):
    """Fit one dependent variable under one universe's model decisions.

    Returns (HypothesisOutcome, FitResult or None).  Typed fit errors
    become a fit-failure outcome carrying the error code.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    try:
        X = design_matrix(panel)
        X, dropped = stats.vif_prune(X, model.vif_threshold, protected=TIME_COLUMNS)
        fit = stats.lmm(X, panel.values, reml=model.reml)
    except FitError as e:
        return failure_outcome(panel.dv_name, e.code, alpha), None
    if dropped:
        fit = replace(fit, dropped_columns=tuple(dropped))
    return outcome_from_fit(panel.dv_name, fit, alpha), fit


def run_universe(dataset, spec, universe, alpha: float = 0.05) -> UniverseResult:
    """All dependent variables of one universe.

    Panel-construction failures (degenerate panels) become fit failures
    for every dependent variable rather than propagating.
    """
    panel_params = PanelParams.from_universe(spec, universe)
    model = ModelParams.from_universe(spec, universe)
    try:
        panels = build_panel_set(dataset, panel_params)
    except FitError as e:
        outcomes = tuple(
            (
                nm,
                HypothesisOutcome(
                    dv_name=nm, alpha=alpha, status="fit-failure", failure=e.code
                ),
            )
            for nm in dataset.dv_names
        )
        return UniverseResult(
            universe_id=universe.universe_id,
            outcomes=outcomes,
            fits=tuple((nm, None) for nm in dataset.dv_names),
        )
    outcomes = []
    fits = []
    for nm in dataset.dv_names:
        outcome, fit = fit_universe_dv(panels[nm], model, alpha)
        outcomes.append((nm, outcome))
        fits.append((nm, fit))
    return UniverseResult(
        universe_id=universe.universe_id,
        outcomes=tuple(outcomes),
        fits=tuple(fits),
    )
