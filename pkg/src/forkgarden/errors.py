"""Exception taxonomy.

Every error the engine raises deliberately derives from ForkgardenError so
callers (and the CLI) can distinguish engine failures from bugs.  Fit
failures get their own branch: they are recorded as outcomes rather than
propagated, and each carries a short stable ``code`` that ends up in the
results store.
"""

from __future__ import annotations


class ForkgardenError(Exception):
    """Base class for all engine errors."""


# ---------------------------------------------------------------------------
# decision-space errors


class EmptySpec(ForkgardenError):
    """Multiverse spec has no decision points."""


class MalformedConstraint(ForkgardenError):
    """Constraint references an unknown decision or value."""


class SpecFileError(ForkgardenError):
    """Spec file could not be parsed; carries a 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnknownUniverse(ForkgardenError):
    """Universe digest or id does not belong to the spec."""


# ---------------------------------------------------------------------------
# dataset errors


class ParseError(ForkgardenError):
    """Dataset or baseline file is malformed; carries a 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SchemaError(ForkgardenError):
    """Dataset header is missing or inconsistent."""


class EmptyDataset(ForkgardenError):
    """No usable projects after validation."""


class InvalidProject(ForkgardenError):
    """Project record violates a dataset invariant."""


class InvalidConfig(ForkgardenError):
    """Synthetic-data configuration is out of domain."""


# ---------------------------------------------------------------------------
# panel errors


class UnknownDependentVariable(ForkgardenError):
    """Requested dependent variable is not in the dataset schema."""


# ---------------------------------------------------------------------------
# fit failures: recorded per universe rather than propagated

class FitError(ForkgardenError):
    """Base class for failures that bucket a universe as a fit failure."""

    code = "fit-error"


class DegeneratePanel(FitError):
    """Panel construction produced no rows."""

    code = "degenerate-panel"


class RankDeficient(FitError):
    """Design matrix is numerically rank deficient."""

    code = "rank-deficient"


class Underdetermined(FitError):
    """Fewer observations than free parameters."""

    code = "underdetermined"


class DegenerateGrouping(FitError):
    """Random-intercept model needs at least two groups."""

    code = "degenerate-grouping"


class NonConvergence(FitError):
    """Variance-ratio search hit its iteration cap."""

    code = "non-convergence"


# ---------------------------------------------------------------------------
# outcome / analysis errors


class BaselineMissing(ForkgardenError):
    """Baseline has no entry for a dependent variable in the results."""


class EmptyResults(ForkgardenError):
    """Analysis invoked on a store with no (visible) universes."""


# ---------------------------------------------------------------------------
# runner errors


class StoreError(ForkgardenError):
    """Results store file is malformed; carries a 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ResumeMismatch(ForkgardenError):
    """Journal on disk was produced by a different run configuration."""
