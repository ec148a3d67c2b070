"""Multiverse summaries over a results store.

Three views, each computable from the store alone:

specification curve
    Universes ordered by how many baseline verdicts they reproduce
    (ascending match count, ties by universe id).

change stability
    For each decision, partition the universes into groups that agree on
    every *other* decision.  Within a group only that one decision varies,
    so differing study buckets inside a group mean the single decision
    flipped the conclusion.  The flip rate is the fraction of ordered
    pairs within groups whose buckets differ, aggregated over all groups
    of the decision; the histogram counts groups by how many distinct
    buckets they contain.

time curve
    Universes grouped by total observed timeframe (period count times
    period length, in days) with the bucket mix per timeframe, study
    level and per dependent variable.

Every view accepts pre-filtered stores (see filter_records) and an
include_fit_failures flag; excluding drops universes whose study bucket
is the fit-failure bucket before anything else is computed.
"""

from __future__ import annotations

from forkgarden.errors import EmptyResults
from forkgarden.outcomes import FAILURE
from forkgarden.runner import ResultsStore

__all__ = [
    "spec_curve",
    "change_stability",
    "time_curve",
    "filter_records",
    "visible_records",
]

FLIP_RATE_DEFINITION = (
    "fraction of ordered universe pairs, within groups fixing every other "
    "decision, whose study buckets differ"
)


def visible_records(store: ResultsStore, include_fit_failures: bool = True) -> list:
    records = store.records
    if not include_fit_failures:
        records = [r for r in records if r["study_bucket"] != FAILURE]
    if not records:
        raise EmptyResults("no universes to analyze")
    return records


def filter_records(store: ResultsStore, pins: dict) -> ResultsStore:
    """Sub-store keeping universes whose assignment matches the pins.

    ``pins`` maps decision id to an allowed set of canonical value
    strings.  Unknown decision ids or values are rejected.
    """
    known = {d["id"]: set(d["values"]) for d in store.header["decisions"]}
    for did, allowed in pins.items():
        if did not in known:
            raise KeyError(f"unknown decision {did!r}")
        bad = set(allowed) - known[did]
        if bad:
            raise KeyError(f"unknown values for {did!r}: {sorted(bad)}")
    records = [
        r
        for r in store.records
        if all(r["assignment"][d] in allowed for d, allowed in pins.items())
    ]
    return ResultsStore(store.header, records)


def spec_curve(store: ResultsStore, include_fit_failures: bool = True) -> dict:
    """Specification curve: match count per universe, sorted ascending."""
    records = visible_records(store, include_fit_failures)
    entries = sorted(
        (
            {
                "universe_id": r["universe_id"],
                "match_count": r["match_count"],
                "study_bucket": r["study_bucket"],
            }
            for r in records
        ),
        key=lambda e: (e["match_count"], e["universe_id"]),
    )
    return {
        "analysis": "spec-curve",
        "include_fit_failures": include_fit_failures,
        "n_universes": len(entries),
        "max_match_count": max(e["match_count"] for e in entries),
        "universes": entries,
    }


def change_stability(store: ResultsStore, include_fit_failures: bool = True) -> dict:
    """Flip rates and distinct-bucket histograms per decision."""
    records = visible_records(store, include_fit_failures)
    decision_ids = [d["id"] for d in store.header["decisions"]]
    out = {}
    for did in decision_ids:
        others = [d for d in decision_ids if d != did]
        groups: dict = {}
        for r in records:
            key = tuple(r["assignment"][o] for o in others)
            groups.setdefault(key, []).append(r["study_bucket"])
        histogram: dict = {}
        pairs_total = 0
        pairs_differing = 0
        for buckets in groups.values():
            distinct = len(set(buckets))
            histogram[str(distinct)] = histogram.get(str(distinct), 0) + 1
            k = len(buckets)
            same = 0
            for b in set(buckets):
                c = buckets.count(b)
                same += c * (c - 1)
            pairs_total += k * (k - 1)
            pairs_differing += k * (k - 1) - same
        out[did] = {
            "n_groups": len(groups),
            "histogram": histogram,
            "pairs_total": pairs_total,
            "pairs_differing": pairs_differing,
            "flip_rate": (pairs_differing / pairs_total) if pairs_total else 0.0,
        }
    return {
        "analysis": "change-stability",
        "include_fit_failures": include_fit_failures,
        "definition": FLIP_RATE_DEFINITION,
        "decisions": out,
    }


def _timeframe_ids(store: ResultsStore):
    kinds = {d["id"]: d["kind"] for d in store.header["decisions"]}
    count_ids = [i for i, k in kinds.items() if k == "count"]
    length_ids = [i for i, k in kinds.items() if k == "duration-days"]
    if len(count_ids) != 1 or len(length_ids) != 1:
        raise EmptyResults(
            "time curve needs exactly one period-count and one period-length decision"
        )
    return count_ids[0], length_ids[0]


def time_curve(store: ResultsStore, include_fit_failures: bool = True) -> dict:
    """Bucket mix by total observed timeframe."""
    records = visible_records(store, include_fit_failures)
    count_id, length_id = _timeframe_ids(store)
    dv_names = store.header["dv_names"]
    frames: dict = {}
    for r in records:
        days = int(r["assignment"][count_id]) * float(r["assignment"][length_id])
        slot = frames.setdefault(
            days, {"n": 0, "study": {}, "dvs": {nm: {} for nm in dv_names}}
        )
        slot["n"] += 1
        sb = r["study_bucket"]
        slot["study"][sb] = slot["study"].get(sb, 0) + 1
        for nm in dv_names:
            b = r["dvs"][nm]["bucket"]
            slot["dvs"][nm][b] = slot["dvs"][nm].get(b, 0) + 1
    timeframes = []
    for days in sorted(frames):
        slot = frames[days]
        n = slot["n"]
        entry = {
            "days": float(days),
            "n_universes": n,
            "study": {
                "counts": slot["study"],
                "proportions": {b: c / n for b, c in slot["study"].items()},
            },
            "dvs": {
                nm: {
                    "counts": cnts,
                    "proportions": {b: c / n for b, c in cnts.items()},
                }
                for nm, cnts in slot["dvs"].items()
            },
        }
        timeframes.append(entry)
    return {
        "analysis": "time-curve",
        "include_fit_failures": include_fit_failures,
        "timeframes": timeframes,
    }
