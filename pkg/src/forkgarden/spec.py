"""Decision space: decision points, constraints, and universe expansion.

A multiverse spec is an ordered list of decision points, each with a kind
and an ordered value list, plus optional constraints that forbid value
combinations.  A universe is one complete assignment.  Universe ids come
from mixed-radix numbering over the value-list positions with the first
decision most significant, so ids are stable for a fixed spec and the
expansion order is the numbering order.

Spec file grammar (one section per decision, values comma-separated;
``#`` starts a comment line)::

    [decision periods]
    kind = count
    values = 36, 24, 18, 12

    [constraints]
    forbid = scaling=ln & averaging=median

A constraint forbids any universe that matches all of its decision=value
pairs.  Unknown section names and unknown keys are rejected with the line
number.
"""

from __future__ import annotations

import hashlib
import itertools
import re
from dataclasses import dataclass, field

from forkgarden.errors import (
    EmptySpec,
    MalformedConstraint,
    SpecFileError,
    UnknownUniverse,
)

__all__ = [
    "KINDS",
    "DecisionPoint",
    "Constraint",
    "MultiverseSpec",
    "UniverseSpec",
    "format_value",
    "parse_value",
    "load_spec",
    "default_spec_path",
]

KINDS = (
    "count",
    "duration-days",
    "exclusion-window",
    "scaling",
    "averaging",
    "rounding",
    "vif-threshold",
    "fitting-flag",
)

SCALINGS = ("original", "ln", "log10")
AVERAGINGS = ("mean", "median")

_ID_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


def _fmt_num(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def format_value(value) -> str:
    """Canonical text form of a decision value (inverse of parse_value)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt_num(value)
    if isinstance(value, tuple):
        return "(" + ", ".join(_fmt_num(x) for x in value) + ")"
    return str(value)


def parse_value(kind: str, text: str):
    """Parse one value token for a decision of the given kind.

    Raises ValueError with a human-readable reason on bad input.
    """
    text = text.strip()
    if kind == "count":
        n = int(text)
        if n < 2 or n % 2:
            raise ValueError(f"period count must be a positive even integer, got {n}")
        return n
    if kind == "duration-days":
        v = float(text)
        if not v > 0:
            raise ValueError(f"duration must be positive, got {text}")
        return v
    if kind == "exclusion-window":
        m = re.fullmatch(r"\(([^,()]+),([^,()]+)\)", text)
        if not m:
            raise ValueError(f"expected '(before, after)', got {text!r}")
        before, after = float(m.group(1)), float(m.group(2))
        if before < 0 or after < 0:
            raise ValueError("exclusion window bounds must be non-negative")
        return (before, after)
    if kind == "scaling":
        if text not in SCALINGS:
            raise ValueError(f"scaling must be one of {SCALINGS}, got {text!r}")
        return text
    if kind == "averaging":
        if text not in AVERAGINGS:
            raise ValueError(f"averaging must be one of {AVERAGINGS}, got {text!r}")
        return text
    if kind == "rounding":
        if text == "unmodified":
            return "unmodified"
        n = int(text)
        if n < 0:
            raise ValueError("digit count must be non-negative")
        return n
    if kind == "vif-threshold":
        v = float(text)
        if not v > 1:
            raise ValueError(f"VIF threshold must exceed 1, got {text}")
        return v
    if kind == "fitting-flag":
        if text == "true":
            return True
        if text == "false":
            return False
        raise ValueError(f"expected 'true' or 'false', got {text!r}")
    raise ValueError(f"unknown decision kind {kind!r}")


@dataclass(frozen=True)
class DecisionPoint:
    """One named decision with its ordered value list."""

    id: str
    kind: str
    values: tuple

    def __post_init__(self):
        if not _ID_RE.fullmatch(self.id):
            raise ValueError(f"bad decision id {self.id!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown decision kind {self.kind!r}")
        if not self.values:
            raise ValueError(f"decision {self.id!r} has no values")
        object.__setattr__(self, "values", tuple(self.values))
        texts = [format_value(v) for v in self.values]
        if len(set(texts)) != len(texts):
            raise ValueError(f"decision {self.id!r} has duplicate values")
        # round-trip each value through the parser to enforce the domain
        for t in texts:
            parse_value(self.kind, t)


@dataclass(frozen=True)
class Constraint:
    """Forbidden co-occurrence: a universe matching every pair is dropped."""

    forbidden: tuple  # of (decision_id, value) pairs

    def __post_init__(self):
        pairs = tuple(self.forbidden)
        if not pairs:
            raise MalformedConstraint("constraint with no pairs")
        ids = [d for d, _ in pairs]
        if len(set(ids)) != len(ids):
            raise MalformedConstraint(
                "constraint names the same decision twice: " + ", ".join(sorted(ids))
            )
        object.__setattr__(self, "forbidden", pairs)

    def violated_by(self, assignment: dict) -> bool:
        return all(assignment.get(d) == v for d, v in self.forbidden)


@dataclass(frozen=True)
class UniverseSpec:
    """One complete assignment of every decision, with its stable id."""

    universe_id: int
    assignment: tuple  # of (decision_id, value) pairs, in decision order

    def __post_init__(self):
        object.__setattr__(self, "assignment", tuple(self.assignment))

    def get(self, decision_id: str):
        for d, v in self.assignment:
            if d == decision_id:
                return v
        raise KeyError(decision_id)

    def as_dict(self) -> dict:
        return dict(self.assignment)

    def digest(self) -> str:
        """Human-readable universe key: 'id=value;...' sorted by id."""
        return ";".join(
            f"{d}={format_value(v)}" for d, v in sorted(self.assignment)
        )


class MultiverseSpec:
    """Ordered decision points plus constraints."""

    def __init__(self, decisions, constraints=()):
        decisions = tuple(decisions)
        if not decisions:
            raise EmptySpec("a multiverse needs at least one decision point")
        ids = [d.id for d in decisions]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate decision ids")
        self.decisions = decisions
        self._index = {d.id: d for d in decisions}
        checked = []
        for c in constraints:
            if not isinstance(c, Constraint):
                c = Constraint(tuple(c))
            for d, v in c.forbidden:
                dp = self._index.get(d)
                if dp is None:
                    raise MalformedConstraint(f"constraint names unknown decision {d!r}")
                if v not in dp.values:
                    raise MalformedConstraint(
                        f"constraint value {format_value(v)!r} not in decision {d!r}"
                    )
            checked.append(c)
        self.constraints = tuple(checked)

    # -- structure ---------------------------------------------------------

    def __eq__(self, other):
        return (
            isinstance(other, MultiverseSpec)
            and self.decisions == other.decisions
            and self.constraints == other.constraints
        )

    def __hash__(self):
        return hash((self.decisions, self.constraints))

    def decision(self, decision_id: str) -> DecisionPoint:
        try:
            return self._index[decision_id]
        except KeyError:
            raise KeyError(f"no decision {decision_id!r}") from None

    def by_kind(self, kind: str) -> DecisionPoint:
        """The unique decision of a kind; KeyError if absent or ambiguous."""
        hits = [d for d in self.decisions if d.kind == kind]
        if len(hits) != 1:
            raise KeyError(f"expected exactly one {kind!r} decision, found {len(hits)}")
        return hits[0]

    @property
    def radices(self) -> tuple:
        return tuple(len(d.values) for d in self.decisions)

    def size_unconstrained(self) -> int:
        out = 1
        for r in self.radices:
            out *= r
        return out

    # -- numbering -----------------------------------------------------------

    def universe_id_of(self, indices) -> int:
        uid = 0
        for d, i in zip(self.decisions, indices):
            if not 0 <= i < len(d.values):
                raise UnknownUniverse(f"index {i} out of range for {d.id!r}")
            uid = uid * len(d.values) + i
        return uid

    def indices_of(self, universe_id: int) -> tuple:
        if not 0 <= universe_id < self.size_unconstrained():
            raise UnknownUniverse(f"universe id {universe_id} out of range")
        out = []
        rem = universe_id
        for r in reversed(self.radices):
            out.append(rem % r)
            rem //= r
        return tuple(reversed(out))

    def universe(self, universe_id: int) -> UniverseSpec:
        """Universe by id.  The id must not be excluded by constraints."""
        idx = self.indices_of(universe_id)
        assignment = tuple(
            (d.id, d.values[i]) for d, i in zip(self.decisions, idx)
        )
        adict = dict(assignment)
        if any(c.violated_by(adict) for c in self.constraints):
            raise UnknownUniverse(
                f"universe {universe_id} is excluded by a constraint"
            )
        return UniverseSpec(universe_id, assignment)

    def expand(self) -> list:
        """Every admissible universe, ordered by universe id."""
        ids = [d.id for d in self.decisions]
        out = []
        for uid, combo in enumerate(
            itertools.product(*(d.values for d in self.decisions))
        ):
            assignment = tuple(zip(ids, combo))
            if self.constraints:
                adict = dict(assignment)
                if any(c.violated_by(adict) for c in self.constraints):
                    continue
            out.append(UniverseSpec(uid, assignment))
        return out

    def universe_from_digest(self, digest: str) -> UniverseSpec:
        """Inverse of UniverseSpec.digest for this spec."""
        pairs = {}
        for tok in digest.split(";"):
            if "=" not in tok:
                raise UnknownUniverse(f"bad digest token {tok!r}")
            d, _, raw = tok.partition("=")
            if d in pairs:
                raise UnknownUniverse(f"decision {d!r} repeated in digest")
            pairs[d] = raw
        indices = []
        for d in self.decisions:
            if d.id not in pairs:
                raise UnknownUniverse(f"digest is missing decision {d.id!r}")
            try:
                v = parse_value(d.kind, pairs.pop(d.id))
            except ValueError as e:
                raise UnknownUniverse(str(e)) from None
            if v not in d.values:
                raise UnknownUniverse(
                    f"value {format_value(v)!r} not admissible for {d.id!r}"
                )
            indices.append(d.values.index(v))
        if pairs:
            raise UnknownUniverse(f"digest names unknown decisions: {sorted(pairs)}")
        return self.universe(self.universe_id_of(indices))

    # -- text form -------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for d in self.decisions:
            lines.append(f"[decision {d.id}]")
            lines.append(f"kind = {d.kind}")
            lines.append("values = " + ", ".join(format_value(v) for v in d.values))
            lines.append("")
        if self.constraints:
            lines.append("[constraints]")
            for c in self.constraints:
                lines.append(
                    "forbid = "
                    + " & ".join(f"{d}={format_value(v)}" for d, v in c.forbidden)
                )
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# file parsing


def _split_top_level(text: str) -> list:
    """Split on commas that are not inside parentheses."""
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(depth - 1, 0)
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


class _SectionReader:
    """Accumulates key = value lines of one spec-file section."""

    def __init__(self, header_line: int, name: str):
        self.header_line = header_line
        self.name = name
        self.entries = []  # (line_no, key, value)

    def add(self, line_no: int, key: str, value: str, allowed, repeatable=False):
        if key not in allowed:
            raise SpecFileError(line_no, f"unknown key {key!r} in [{self.name}]")
        if not repeatable and any(k == key for _, k, _ in self.entries):
            raise SpecFileError(line_no, f"duplicate key {key!r} in [{self.name}]")
        self.entries.append((line_no, key, value))

    def get(self, key: str):
        for line_no, k, v in self.entries:
            if k == key:
                return line_no, v
        raise SpecFileError(self.header_line, f"[{self.name}] is missing {key!r}")


def parse_spec(text: str) -> MultiverseSpec:
    """Parse spec-file text.  Raises SpecFileError with a line number."""
    decisions = []
    seen_ids = set()
    constraint_entries = []  # (line_no, raw)
    section = None  # None | ("decision", reader) | ("constraints", reader)

    def close_section():
        if section is None:
            return
        kind_tag, reader = section
        if kind_tag == "decision":
            kline, kind = reader.get("kind")
            if kind.strip() not in KINDS:
                raise SpecFileError(kline, f"unknown decision kind {kind.strip()!r}")
            vline, values_raw = reader.get("values")
            values = []
            for tok in _split_top_level(values_raw):
                if not tok:
                    raise SpecFileError(vline, "empty value in list")
                try:
                    values.append(parse_value(kind.strip(), tok))
                except ValueError as e:
                    raise SpecFileError(vline, str(e)) from None
            try:
                decisions.append(DecisionPoint(reader.name, kind.strip(), tuple(values)))
            except ValueError as e:
                raise SpecFileError(reader.header_line, str(e)) from None
        else:
            constraint_entries.extend(
                (line_no, v) for line_no, k, v in reader.entries
            )

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise SpecFileError(line_no, "unterminated section header")
            header = line[1:-1].strip()
            close_section()
            if header == "constraints":
                section = ("constraints", _SectionReader(line_no, "constraints"))
            elif header.startswith("decision "):
                did = header[len("decision "):].strip()
                if not _ID_RE.fullmatch(did):
                    raise SpecFileError(line_no, f"bad decision id {did!r}")
                if did in seen_ids:
                    raise SpecFileError(line_no, f"duplicate decision {did!r}")
                seen_ids.add(did)
                section = ("decision", _SectionReader(line_no, did))
            else:
                raise SpecFileError(line_no, f"unknown section [{header}]")
            continue
        if "=" not in line:
            raise SpecFileError(line_no, f"expected 'key = value', got {line!r}")
        if section is None:
            raise SpecFileError(line_no, "content before any section header")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if section[0] == "decision":
            section[1].add(line_no, key, value, allowed=("kind", "values"))
        else:
            section[1].add(
                line_no, key, value, allowed=("forbid",), repeatable=True
            )
    close_section()

    if not decisions:
        raise EmptySpec("spec file defines no decision points")
    spec_wo_constraints = MultiverseSpec(decisions)
    constraints = []
    for line_no, raw in constraint_entries:
        pairs = []
        for part in raw.split("&"):
            part = part.strip()
            if "=" not in part:
                raise SpecFileError(line_no, f"expected 'decision=value', got {part!r}")
            did, _, vtext = part.partition("=")
            did = did.strip()
            vtext = vtext.strip()
            dp = spec_wo_constraints._index.get(did)
            if dp is None:
                raise SpecFileError(line_no, f"constraint names unknown decision {did!r}")
            try:
                pairs.append((did, parse_value(dp.kind, vtext)))
            except ValueError as e:
                raise SpecFileError(line_no, str(e)) from None
        try:
            constraints.append(Constraint(tuple(pairs)))
        except MalformedConstraint as e:
            raise SpecFileError(line_no, str(e)) from None
    try:
        return MultiverseSpec(decisions, constraints)
    except MalformedConstraint as e:
        # constraint values were validated above, but keep the guard
        raise SpecFileError(1, str(e)) from None


def load_spec(path) -> MultiverseSpec:
    """Parse a spec file from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())


def default_spec_path(name: str = "default") -> str:
    """Path of a bundled spec file ('default' or 'restricted')."""
    from importlib.resources import files

    p = files("forkgarden").joinpath(f"resources/{name}.fgspec")
    return str(p)
