"""Outcome bucketing against a baseline study.

Each fitted coefficient is compared with its baseline counterpart:

    match        same significance verdict, and the same sign whenever
                 both are significant
    unconfirmed  significant in the baseline but not in the universe
    opposite     significant in the universe where the baseline was not,
                 or significant in both with flipped sign

A fitted model is a full replication when every compared coefficient
matches, an opposite result when any coefficient is opposite, otherwise
unconfirmed.  Failed fits are their own bucket.  A universe's study-level
bucket is the worst bucket across its dependent variables under the
severity order (best to worst)

    full-replication > unconfirmed-results > opposite-results
                     > model-fit-failure

which a baseline file may override.

Baseline file grammar: one section per dependent variable with a
``sig+`` / ``sig-`` / ``ns`` token per coefficient, plus an optional
severity section::

    [dv merged_count]
    time = sig-
    intervention = sig+
    time_after = ns

    [severity]
    order = full-replication, unconfirmed-results, opposite-results, model-fit-failure
"""

from __future__ import annotations

from dataclasses import dataclass

from forkgarden.errors import BaselineMissing, ParseError
from forkgarden.rdit import HypothesisOutcome, UniverseResult

__all__ = [
    "BUCKETS",
    "MATCH",
    "UNCONFIRMED",
    "OPPOSITE",
    "BaselineOutcome",
    "classify_coefficient",
    "bucket_hypothesis",
    "bucket_universe",
    "match_count",
    "parse_baseline",
    "load_baseline",
    "baseline_from_result",
]

FULL = "full-replication"
UNCONFIRMED_BUCKET = "unconfirmed-results"
OPPOSITE_BUCKET = "opposite-results"
FAILURE = "model-fit-failure"
BUCKETS = (FULL, UNCONFIRMED_BUCKET, OPPOSITE_BUCKET, FAILURE)

MATCH = "match"
UNCONFIRMED = "unconfirmed"
OPPOSITE = "opposite"


@dataclass(frozen=True)
class BaselineOutcome:
    """Baseline verdicts per dependent variable, plus the severity order.

    ``verdicts`` maps dv name to a tuple of (coefficient, significant,
    sign) triples; ``severity`` orders the buckets best to worst.
    """

    verdicts: tuple  # of (dv_name, ((coef, significant, sign), ...))
    severity: tuple = BUCKETS

    def __post_init__(self):
        if sorted(self.severity) != sorted(BUCKETS):
            raise ValueError("severity must order exactly the four buckets")
        names = [nm for nm, _ in self.verdicts]
        if len(set(names)) != len(names):
            raise ValueError("duplicate dependent variable in baseline")

    def dv_names(self) -> tuple:
        return tuple(nm for nm, _ in self.verdicts)

    def triples(self, dv_name: str) -> tuple:
        for nm, trips in self.verdicts:
            if nm == dv_name:
                return trips
        raise BaselineMissing(f"baseline has no entry for {dv_name!r}")

    def rank(self, bucket: str) -> int:
        """Position in the severity order; lower is better."""
        return self.severity.index(bucket)

    def worst(self, buckets) -> str:
        """The lowest bucket of the given ones under this severity order."""
        buckets = list(buckets)
        if not buckets:
            raise ValueError("no buckets to combine")
        return max(buckets, key=self.rank)

    def to_text(self) -> str:
        lines = []
        for nm, trips in self.verdicts:
            lines.append(f"[dv {nm}]")
            for coef, sig, sign in trips:
                lines.append(f"{coef} = " + (f"sig{sign}" if sig else "ns"))
            lines.append("")
        if self.severity != BUCKETS:
            lines.append("[severity]")
            lines.append("order = " + ", ".join(self.severity))
            lines.append("")
        return "\n".join(lines)


def classify_coefficient(universe_triple, baseline_triple) -> str:
    """Compare one coefficient's (significant, sign) with the baseline."""
    u_sig, u_sign = universe_triple
    b_sig, b_sign = baseline_triple
    if b_sig and not u_sig:
        return UNCONFIRMED
    if u_sig and not b_sig:
        return OPPOSITE
    if u_sig and b_sig and u_sign != b_sign:
        return OPPOSITE
    return MATCH


def bucket_hypothesis(outcome: HypothesisOutcome, baseline: BaselineOutcome) -> str:
    """Bucket one dependent variable's outcome against the baseline."""
    if not outcome.fitted:
        return FAILURE
    base = baseline.triples(outcome.dv_name)
    classes = []
    for coef, b_sig, b_sign in base:
        try:
            u = outcome.triple(coef)
        except KeyError:
            raise BaselineMissing(
                f"fitted model for {outcome.dv_name!r} has no coefficient {coef!r}"
            ) from None
        classes.append(classify_coefficient(u, (b_sig, b_sign)))
    if any(c == OPPOSITE for c in classes):
        return OPPOSITE_BUCKET
    if all(c == MATCH for c in classes):
        return FULL
    return UNCONFIRMED_BUCKET


def bucket_universe(result: UniverseResult, baseline: BaselineOutcome):
    """Bucket every dependent variable and combine to the study level.

    Returns (per_dv, study_bucket) with per_dv a tuple of
    (dv_name, bucket).  The study bucket is the worst per-dv bucket under
    the baseline's severity order.
    """
    per_dv = tuple(
        (nm, bucket_hypothesis(o, baseline)) for nm, o in result.outcomes
    )
    study = baseline.worst(b for _, b in per_dv)
    return per_dv, study


def match_count(result: UniverseResult, baseline: BaselineOutcome) -> int:
    """Number of baseline coefficients the universe reproduces.

    Counts matches across all dependent variables; failed fits contribute
    zero.
    """
    total = 0
    for nm, o in result.outcomes:
        if not o.fitted:
            continue
        for coef, b_sig, b_sign in baseline.triples(nm):
            u = o.triple(coef)
            if classify_coefficient(u, (b_sig, b_sign)) == MATCH:
                total += 1
    return total


# ---------------------------------------------------------------------------
# baseline files


def parse_baseline(text: str) -> BaselineOutcome:
    """Parse baseline text; see the module docstring for the grammar."""
    verdicts = []
    severity = BUCKETS
    current = None  # (dv_name, [triples])
    in_severity = False
    seen_severity = False
    seen_dvs = set()

    def close():
        if current is not None:
            if not current[1]:
                raise ParseError(current[2], f"[dv {current[0]}] lists no coefficients")
            verdicts.append((current[0], tuple(current[1])))

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(line_no, "unterminated section header")
            header = line[1:-1].strip()
            close()
            current = None
            in_severity = False
            if header == "severity":
                if seen_severity:
                    raise ParseError(line_no, "duplicate [severity] section")
                seen_severity = True
                in_severity = True
            elif header.startswith("dv "):
                nm = header[3:].strip()
                if not nm:
                    raise ParseError(line_no, "empty dependent-variable name")
                if nm in seen_dvs:
                    raise ParseError(line_no, f"duplicate section [dv {nm}]")
                seen_dvs.add(nm)
                current = (nm, [], line_no)
            else:
                raise ParseError(line_no, f"unknown section [{header}]")
            continue
        if "=" not in line:
            raise ParseError(line_no, f"expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if in_severity:
            if key != "order":
                raise ParseError(line_no, f"unknown key {key!r} in [severity]")
            severity = tuple(t.strip() for t in value.split(","))
            if sorted(severity) != sorted(BUCKETS):
                raise ParseError(
                    line_no, "severity order must name each bucket exactly once"
                )
        elif current is not None:
            if any(c == key for c, _, _ in current[1]):
                raise ParseError(line_no, f"duplicate coefficient {key!r}")
            if value == "ns":
                current[1].append((key, False, "0"))
            elif value == "sig+":
                current[1].append((key, True, "+"))
            elif value == "sig-":
                current[1].append((key, True, "-"))
            else:
                raise ParseError(
                    line_no, f"verdict must be sig+, sig- or ns, got {value!r}"
                )
        else:
            raise ParseError(line_no, "content before any section header")
    close()
    if not verdicts:
        raise ParseError(1, "baseline declares no dependent variables")
    return BaselineOutcome(tuple(verdicts), severity)


def load_baseline(path) -> BaselineOutcome:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_baseline(fh.read())


def baseline_from_result(result: UniverseResult, severity=BUCKETS) -> BaselineOutcome:
    """Adopt one universe's fitted outcomes as the baseline.

    Only the three time regressors enter the baseline: covariate
    coefficients are controls, and pruning can remove them from some
    universes, so they are not comparable across the multiverse.
    """
    verdicts = []
    for nm, o in result.outcomes:
        if not o.fitted:
            raise ValueError(f"cannot baseline a failed fit for {nm!r}")
        trips = []
        for coef, sig, sign in o.coefficients:
            if coef in ("time", "intervention", "time_after"):
                trips.append((coef, sig, sign if sig else "0"))
        verdicts.append((nm, tuple(trips)))
    return BaselineOutcome(tuple(verdicts), tuple(severity))
