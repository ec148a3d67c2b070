"""Multiverse runner: expansion, scheduling, journaling, the results store.

Work is chunked by panel projection: universes that agree on every
data-shaping decision share one task, so each distinct panel set is built
exactly once, and within a task the pruned design for each (dependent
variable, VIF threshold) pair is prepared once and solved under both
fitting criteria.

Output is a results store: one canonical-JSON header line, then one
record line per universe sorted by universe id, every float at 17
significant digits.  The bytes depend only on dataset, spec, baseline
and alpha, never on worker count or completion order.  A journal file
(store path + ".journal") receives records in completion order and lets
an interrupted run resume; per-universe wall times go to a sidecar
(store path + ".times.json") because timings are not reproducible.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass, replace

import forkgarden
from forkgarden import jsonio, stats
from forkgarden.errors import FitError, ResumeMismatch, StoreError
from forkgarden.outcomes import (
    BaselineOutcome,
    bucket_universe,
    match_count,
)
from forkgarden.pipeline import PanelParams, build_panel_set
from forkgarden.rdit import (
    TIME_COLUMNS,
    ModelParams,
    UniverseResult,
    design_matrix,
    failure_outcome,
    outcome_from_fit,
)
from forkgarden.spec import format_value

__all__ = ["ResultsStore", "RunTelemetry", "run_multiverse", "store_header"]

STORE_FORMAT = "forkgarden-store"
STORE_VERSION = 1


@dataclass(frozen=True)
class RunTelemetry:
    """Run accounting: cache effectiveness and cost."""

    universes: int
    projections: int
    panel_cache_hits: int
    fits_attempted: int
    wall_seconds: float


class ResultsStore:
    """In-memory results store: header dict plus records by universe id."""

    def __init__(self, header: dict, records: list):
        self.header = header
        self.records = sorted(records, key=lambda r: r["universe_id"])
        ids = [r["universe_id"] for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate universe ids in store")

    def __eq__(self, other):
        return (
            isinstance(other, ResultsStore)
            and self.header == other.header
            and self.records == other.records
        )

    def record(self, universe_id: int) -> dict:
        for r in self.records:
            if r["universe_id"] == universe_id:
                return r
        raise KeyError(universe_id)

    def to_text(self) -> str:
        lines = [jsonio.dumps_canonical(self.header)]
        lines.extend(jsonio.dumps_canonical(r) for r in self.records)
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        """Atomic write: full temp file, then rename."""
        tmp = f"{path}.tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "ResultsStore":
        """Parse and validate a store file.

        Malformed lines raise StoreError with their 1-based line number.
        """
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        lines = text.splitlines()
        if not lines or not lines[0].strip():
            raise StoreError(1, "missing store header")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as e:
            raise StoreError(1, f"bad header: {e.msg}") from None
        if not isinstance(header, dict) or header.get("format") != STORE_FORMAT:
            raise StoreError(1, f"not a {STORE_FORMAT} file")
        if header.get("version") != STORE_VERSION:
            raise StoreError(1, f"unsupported store version {header.get('version')!r}")
        records = []
        prev_id = None
        for line_no, raw in enumerate(lines[1:], start=2):
            if not raw.strip():
                raise StoreError(line_no, "blank line inside store")
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as e:
                raise StoreError(line_no, f"bad record: {e.msg}") from None
            if not isinstance(rec, dict) or "universe_id" not in rec:
                raise StoreError(line_no, "record has no universe_id")
            uid = rec["universe_id"]
            if prev_id is not None and uid <= prev_id:
                raise StoreError(line_no, "universe ids out of order")
            prev_id = uid
            records.append(rec)
        expected = header.get("n_universes")
        if expected is not None and expected != len(records):
            raise StoreError(
                1, f"header promises {expected} universes, file has {len(records)}"
            )
        return cls(header, records)


def store_header(spec, dataset, baseline: BaselineOutcome, alpha: float) -> dict:
    """Store header: everything a reader needs to interpret records."""
    return {
        "format": STORE_FORMAT,
        "version": STORE_VERSION,
        "engine": forkgarden.__version__,
        "alpha": float(alpha),
        "spec_digest": spec.digest(),
        "dataset_digest": dataset.digest(),
        "n_universes": len(spec.expand()),
        "dv_names": list(dataset.dv_names),
        "decisions": [
            {
                "id": d.id,
                "kind": d.kind,
                "values": [format_value(v) for v in d.values],
            }
            for d in spec.decisions
        ],
        "severity": list(baseline.severity),
        "baseline": {
            nm: {
                coef: {"significant": bool(sig), "sign": sign}
                for coef, sig, sign in trips
            }
            for nm, trips in baseline.verdicts
        },
    }


# ---------------------------------------------------------------------------
# record building


def _fit_payload(fit: stats.FitResult) -> dict:
    conv = fit.convergence
    payload = {
        "method": fit.method,
        "coefficients": {k: float(v) for k, v in fit.coefficients.items()},
        "standard_errors": {k: float(v) for k, v in fit.standard_errors.items()},
        "p_values": {k: float(v) for k, v in fit.p_values.items()},
        "nobs": int(fit.nobs),
        "df": int(fit.df),
        "rss": float(fit.rss),
        "dropped_columns": list(fit.dropped_columns),
    }
    if fit.variance_components is not None:
        payload["variance_components"] = {
            "residual": float(fit.variance_components[0]),
            "intercept": float(fit.variance_components[1]),
        }
    if conv is not None:
        payload["convergence"] = {
            "converged": bool(conv.converged),
            "n_evaluations": int(conv.n_evaluations),
            "log_ratio": float(conv.log_ratio),
            "boundary": bool(conv.boundary),
            "deviance": float(conv.deviance),
            "criterion": conv.criterion,
        }
    return payload


def record_from_result(
    result: UniverseResult, universe, baseline: BaselineOutcome
) -> dict:
    per_dv, study = bucket_universe(result, baseline)
    buckets = dict(per_dv)
    dvs = {}
    for (nm, outcome), (_, fit) in zip(result.outcomes, result.fits):
        entry = {
            "status": outcome.status,
            "bucket": buckets[nm],
        }
        if outcome.fitted:
            entry["verdicts"] = {
                cn: {"significant": bool(sig), "sign": sign}
                for cn, sig, sign in outcome.coefficients
            }
            entry["fit"] = _fit_payload(fit)
        else:
            entry["failure"] = outcome.failure
        dvs[nm] = entry
    return {
        "universe_id": result.universe_id,
        "assignment": {d: format_value(v) for d, v in universe.assignment},
        "dvs": dvs,
        "study_bucket": study,
        "match_count": match_count(result, baseline),
    }


# ---------------------------------------------------------------------------
# projection tasks

# Worker state is inherited through fork: the parent fills this module
# global right before creating the pool, so the dataset is never pickled.
_TASK_STATE = None


def _run_projection(universe_ids):
    """Fit every universe of one panel projection.  Returns
    (universe_id, record, seconds) triples."""
    dataset, spec, baseline, alpha = _TASK_STATE
    universes = [spec.universe(uid) for uid in universe_ids]
    params = PanelParams.from_universe(spec, universes[0])
    out = []
    t_panel0 = time.perf_counter()
    try:
        panels = build_panel_set(dataset, params)
    except FitError as e:
        shared = time.perf_counter() - t_panel0
        for u in universes:
            t0 = time.perf_counter()
            result = UniverseResult(
                universe_id=u.universe_id,
                outcomes=tuple(
                    (nm, failure_outcome(nm, e.code, alpha))
                    for nm in dataset.dv_names
                ),
                fits=tuple((nm, None) for nm in dataset.dv_names),
            )
            rec = record_from_result(result, u, baseline)
            out.append(
                (u.universe_id, rec, time.perf_counter() - t0 + shared / len(universes))
            )
        return out
    shared = time.perf_counter() - t_panel0
    # (dv, vif) -> (LmmProfile | FitError code, dropped)
    prepared: dict = {}
    for u in universes:
        t0 = time.perf_counter()
        model = ModelParams.from_universe(spec, u)
        outcomes = []
        fits = []
        for nm in dataset.dv_names:
            key = (nm, model.vif_threshold)
            if key not in prepared:
                panel = panels[nm]
                try:
                    X = design_matrix(panel)
                    X, dropped = stats.vif_prune(
                        X, model.vif_threshold, protected=TIME_COLUMNS
                    )
                    prepared[key] = (stats.prepare_lmm(X, panel.values), dropped, None)
                except FitError as e:
                    prepared[key] = (None, (), e.code)
            profile, dropped, err = prepared[key]
            if err is not None:
                outcomes.append((nm, failure_outcome(nm, err, alpha)))
                fits.append((nm, None))
                continue
            try:
                fit = stats.lmm_from_profile(profile, reml=model.reml)
            except FitError as e:
                outcomes.append((nm, failure_outcome(nm, e.code, alpha)))
                fits.append((nm, None))
                continue
            if dropped:
                fit = replace(fit, dropped_columns=tuple(dropped))
            outcomes.append((nm, outcome_from_fit(nm, fit, alpha)))
            fits.append((nm, fit))
        result = UniverseResult(
            universe_id=u.universe_id, outcomes=tuple(outcomes), fits=tuple(fits)
        )
        rec = record_from_result(result, u, baseline)
        out.append(
            (u.universe_id, rec, time.perf_counter() - t0 + shared / len(universes))
        )
    return out


def _projection_tasks(spec, universes):
    """Group universe ids by panel projection, in first-seen order."""
    groups: dict = {}
    for u in universes:
        params = PanelParams.from_universe(spec, u)
        groups.setdefault(params, []).append(u.universe_id)
    return list(groups.values())


# ---------------------------------------------------------------------------
# journal / resume


def _read_journal(path, header_line: str):
    """Completed records from a journal, verifying the run signature.

    The final line may be torn by a crash and is then ignored; corruption
    anywhere else is an error.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
        last_complete = True
    else:
        last_complete = False
    if not lines:
        return {}
    if lines[0] != header_line:
        raise ResumeMismatch(
            "journal was written by a different run "
            "(spec, dataset, baseline, alpha or engine changed)"
        )
    records = {}
    for i, raw in enumerate(lines[1:], start=2):
        torn_ok = (i == len(lines)) and not last_complete
        try:
            rec = json.loads(raw)
            if not isinstance(rec, dict) or "universe_id" not in rec:
                raise ValueError("no universe_id")
        except ValueError:
            if torn_ok:
                break
            raise StoreError(i, "corrupt journal record") from None
        records[rec["universe_id"]] = rec
    return records


def run_multiverse(
    dataset,
    spec,
    baseline: BaselineOutcome,
    out_path,
    alpha: float = 0.05,
    workers: int = 1,
    resume: bool = False,
    progress=None,
):
    """Run every universe and write the canonical store to out_path.

    Returns (ResultsStore, RunTelemetry).  ``workers`` > 1 forks a process
    pool; results are identical byte for byte regardless.  ``resume``
    continues from out_path + ".journal" if one matches this run.
    ``progress`` is called as progress(done, total) after every projection.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if workers < 1:
        raise ValueError("workers must be at least 1")
    for nm in dataset.dv_names:
        baseline.triples(nm)  # raises BaselineMissing early
    t_start = time.perf_counter()
    universes = spec.expand()
    header = store_header(spec, dataset, baseline, alpha)
    header_line = jsonio.dumps_canonical(header)
    out_path = os.fspath(out_path)
    journal_path = out_path + ".journal"
    times_path = out_path + ".times.json"

    done_records: dict = {}
    if resume and os.path.exists(journal_path):
        done_records = _read_journal(journal_path, header_line)
        known = {u.universe_id for u in universes}
        alien = set(done_records) - known
        if alien:
            raise ResumeMismatch(
                f"journal contains universes not in this spec: {sorted(alien)[:5]}"
            )

    todo = [u for u in universes if u.universe_id not in done_records]
    tasks = _projection_tasks(spec, todo)
    n_projections_total = len(_projection_tasks(spec, universes))

    global _TASK_STATE
    _TASK_STATE = (dataset, spec, baseline, alpha)
    timings: dict = {}
    mode = "a" if done_records else "w"
    with open(journal_path, mode, encoding="utf-8") as journal:
        if not done_records:
            journal.write(header_line + "\n")
            journal.flush()
        done = len(done_records)
        total = len(universes)

        def consume(batch):
            nonlocal done
            for uid, rec, secs in batch:
                done_records[uid] = rec
                timings[str(uid)] = secs
                journal.write(jsonio.dumps_canonical(rec) + "\n")
                done += 1
            journal.flush()
            if progress is not None:
                progress(done, total)

        if workers == 1:
            for task in tasks:
                consume(_run_projection(task))
        else:
            import multiprocessing as mp

            ctx = mp.get_context("fork")
            with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
                pending = {pool.submit(_run_projection, task) for task in tasks}
                while pending:
                    finished, pending = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in finished:
                        consume(fut.result())
    _TASK_STATE = None

    store = ResultsStore(header, list(done_records.values()))
    store.write(out_path)
    os.remove(journal_path)
    wall = time.perf_counter() - t_start
    telemetry = RunTelemetry(
        universes=len(universes),
        projections=n_projections_total,
        panel_cache_hits=len(universes) - n_projections_total,
        fits_attempted=len(universes) * len(dataset.dv_names),
        wall_seconds=wall,
    )
    with open(times_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "universes": telemetry.universes,
                "projections": telemetry.projections,
                "panel_cache_hits": telemetry.panel_cache_hits,
                "fits_attempted": telemetry.fits_attempted,
                "wall_seconds": telemetry.wall_seconds,
                "universe_seconds": timings,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return store, telemetry
