"""Model fitting: OLS, a random-intercept linear mixed model, and VIF pruning.

The mixed model profiles the variance ratio lambda = sigma2_u / sigma2_e
out of the (restricted) likelihood and minimizes the resulting
one-dimensional deviance in log lambda by golden-section search on
[-12, 12].  Deviance evaluations run on the kernel backend selected at
import time (compiled extension or pure-Python mirror); everything above
the kernel, including the search itself, is shared so both backends walk
the identical sequence of evaluation points.

Inference is Wald: t = beta / se with n - p degrees of freedom, two-sided
p-values from forkgarden.tdist.  Standard errors use the dispersion
estimate of the chosen criterion (rss / (n - p) under REML, rss / n under
ML).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from forkgarden import _backend, tdist
from forkgarden.errors import (
    DegenerateGrouping,
    NonConvergence,
    RankDeficient,
    Underdetermined,
)

__all__ = [
    "DesignMatrix",
    "FitResult",
    "ConvergenceInfo",
    "LmmProfile",
    "ols",
    "lmm",
    "lmm_from_profile",
    "lmm_fixed_ratio",
    "prepare_lmm",
    "vif_prune",
    "vif_values",
    "profile_deviance",
    "backend_name",
]

LOG_LAMBDA_LO = -12.0
LOG_LAMBDA_HI = 12.0
LOG_LAMBDA_TOL = 1e-8
MAX_SEARCH_ITER = 200
_BOUNDARY_MARGIN = 1e-6

backend_name = _backend.backend_name


class DesignMatrix:
    """Named, grouped design matrix.

    Column 0 must be an all-ones intercept named ``const``.  ``groups``
    carries one hashable label per row (the project id in panel use); it
    may be None for models that ignore grouping.
    """

    def __init__(self, names, matrix, groups=None):
        names = tuple(str(n) for n in names)
        matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        if matrix.shape[1] != len(names):
            raise ValueError("one name per column required")
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        if not names or names[0] != "const":
            raise ValueError("first column must be named 'const'")
        if matrix.shape[0] and not np.all(matrix[:, 0] == 1.0):
            raise ValueError("const column must be all ones")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("design matrix contains non-finite values")
        if groups is not None:
            groups = np.asarray(groups)
            if groups.shape != (matrix.shape[0],):
                raise ValueError("one group label per row required")
        self.names = names
        self.matrix = matrix
        self.groups = groups

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.matrix[:, self.names.index(name)]

    def drop(self, names) -> "DesignMatrix":
        """New DesignMatrix without the given columns (order preserved)."""
        gone = set(names)
        keep = [i for i, n in enumerate(self.names) if n not in gone]
        return DesignMatrix(
            [self.names[i] for i in keep],
            np.ascontiguousarray(self.matrix[:, keep]),
            self.groups,
        )


@dataclass(frozen=True)
class ConvergenceInfo:
    """Diagnostics of the variance-ratio search."""

    converged: bool
    n_evaluations: int
    log_ratio: float
    boundary: bool
    deviance: float
    criterion: str  # "reml" or "ml"


@dataclass(frozen=True)
class FitResult:
    """Estimates keyed by retained column name, plus diagnostics."""

    method: str  # "ols", "ml" or "reml"
    coefficients: dict
    standard_errors: dict
    p_values: dict
    nobs: int
    df: int
    rss: float
    dropped_columns: tuple = ()
    variance_components: tuple | None = None  # (sigma2_resid, sigma2_intercept)
    convergence: ConvergenceInfo | None = None

    def coefficient_names(self) -> tuple:
        return tuple(self.coefficients)


def _wald_p(beta: float, se: float, df: int) -> float:
    # se == 0 only on exactly collinear-free, noise-free data; keep the
    # limit behaviour instead of dividing by zero.
    if se == 0.0:
        return 1.0 if beta == 0.0 else 0.0
    return tdist.t_sf(beta / se, df)


# ---------------------------------------------------------------------------
# ordinary least squares


def ols(X: DesignMatrix, y) -> FitResult:
    """Least-squares fit by QR decomposition.

    Raises Underdetermined when rows <= columns and RankDeficient when the
    R factor has a relative diagonal below 1e-10.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.matrix.shape
    if y.shape != (n,):
        raise ValueError("response length must match design rows")
    if n <= p:
        raise Underdetermined(f"{n} rows cannot identify {p} coefficients")
    q, r = np.linalg.qr(X.matrix)
    rdiag = np.abs(np.diag(r))
    if rdiag.min() <= rdiag.max() * 1e-10:
        raise RankDeficient("columns are numerically collinear")
    beta = np.linalg.solve(r, q.T @ y)
    resid = y - X.matrix @ beta
    rss = float(resid @ resid)
    df = n - p
    sig2 = rss / df
    rinv = np.linalg.solve(r, np.eye(p))
    se = np.sqrt(sig2 * np.sum(rinv * rinv, axis=1))
    names = X.names
    return FitResult(
        method="ols",
        coefficients={nm: float(b) for nm, b in zip(names, beta)},
        standard_errors={nm: float(s) for nm, s in zip(names, se)},
        p_values={
            nm: _wald_p(float(b), float(s), df)
            for nm, b, s in zip(names, beta, se)
        },
        nobs=n,
        df=df,
        rss=rss,
    )


# ---------------------------------------------------------------------------
# random-intercept mixed model


def _contiguous_groups(labels: np.ndarray):
    """Map row labels to 0-based codes in first-appearance order.

    Returns (codes, order) where ``order`` is None when rows are already
    grouped contiguously, else a stable permutation that makes them so.
    Nondecreasing integer labels (the panel case) take a vectorized path.
    """
    if labels.dtype.kind in "iu" and labels.size:
        diffs = np.diff(labels)
        if diffs.size == 0 or diffs.min() >= 0:
            codes = np.concatenate(
                ([0], np.cumsum(diffs != 0))
            ).astype(np.int64)
            return codes, None
    codes = np.empty(labels.shape[0], dtype=np.int64)
    seen: dict = {}
    contiguous = True
    prev = -1
    for i, lab in enumerate(labels.tolist()):
        c = seen.get(lab)
        if c is None:
            c = len(seen)
            seen[lab] = c
        elif c != prev:
            contiguous = False
        codes[i] = c
        prev = c
    if contiguous:
        return codes, None
    order = np.argsort(codes, kind="stable")
    return codes, order


def _suffstats(xm: np.ndarray, y: np.ndarray, codes: np.ndarray):
    """Sufficient statistics for the kernel, deterministically.

    einsum (optimize left off) and add.reduceat keep the accumulation
    order fixed regardless of BLAS build or thread count, which the
    byte-identical-store guarantee depends on.
    """
    xtx = np.einsum("ij,ik->jk", xm, xm)
    xty = np.einsum("ij,i->j", xm, y)
    yty = float(np.einsum("i,i->", y, y))
    boundaries = np.flatnonzero(np.diff(codes)) + 1
    starts = np.concatenate(([0], boundaries))
    gx = np.add.reduceat(xm, starts, axis=0)
    gy = np.add.reduceat(y, starts)
    gn = np.diff(np.append(starts, codes.shape[0]))
    return xtx, xty, yty, gx, gy, gn


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def _golden_section(f, lo: float, hi: float, tol: float, max_iter: int):
    """Golden-section minimum of a unimodal function on [lo, hi].

    Returns (x, n_evaluations).  Deterministic: the probe sequence depends
    only on the interval and the comparison outcomes.
    """
    a, b = lo, hi
    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc = f(c)
    fd = f(d)
    n_eval = 2
    it = 0
    while (b - a) > tol:
        if it >= max_iter:
            raise NonConvergence(
                f"variance-ratio search exceeded {max_iter} iterations"
            )
        if fc < fd:
            b = d
            d = c
            fd = fc
            h = b - a
            c = a + _INVPHI2 * h
            fc = f(c)
        else:
            a = c
            c = d
            fc = fd
            h = b - a
            d = a + _INVPHI * h
            fd = f(d)
        n_eval += 1
        it += 1
    return 0.5 * (a + b), n_eval


def _make_profile(X: DesignMatrix, y):
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, p = X.matrix.shape
    if y.shape != (n,):
        raise ValueError("response length must match design rows")
    if X.groups is None:
        raise ValueError("mixed model requires row group labels")
    if n <= p:
        raise Underdetermined(f"{n} rows cannot identify {p} coefficients")
    codes, order = _contiguous_groups(np.asarray(X.groups))
    xm = X.matrix
    if order is not None:
        xm = np.ascontiguousarray(xm[order])
        y = np.ascontiguousarray(y[order])
        codes = codes[order]
    n_groups = int(codes[-1]) + 1 if codes.size else 0
    if n_groups < 2:
        raise DegenerateGrouping("random intercept requires at least two groups")
    xtx, xty, yty, gx, gy, gn = _suffstats(xm, y, codes)
    return _backend.make_profile(xtx, xty, yty, gx, gy, gn, n), n, p


@dataclass(frozen=True)
class LmmProfile:
    """Prepared mixed-model problem: sufficient statistics plus metadata.

    Building this is the expensive part of a fit; the runner prepares one
    per pruned design and solves it under both fitting criteria.
    """

    kernel: object
    names: tuple
    n: int
    p: int


def prepare_lmm(X: DesignMatrix, y) -> LmmProfile:
    prof, n, p = _make_profile(X, y)
    return LmmProfile(kernel=prof, names=X.names, n=n, p=p)


def profile_deviance(X: DesignMatrix, y, log_lambda: float, reml: bool) -> float:
    """Profiled deviance at a fixed log variance ratio (for diagnostics
    and tests; lmm() minimizes exactly this function)."""
    prof, _, _ = _make_profile(X, y)
    return prof.deviance(float(log_lambda), bool(reml))


def lmm(X: DesignMatrix, y, reml: bool = True) -> FitResult:
    """Random-intercept linear mixed model with profiled variance ratio.

    The group structure comes from X.groups.  Raises the typed fit errors
    (Underdetermined, DegenerateGrouping, RankDeficient, NonConvergence);
    boundary solutions are reported in the convergence diagnostics rather
    than raised.
    """
    return lmm_from_profile(prepare_lmm(X, y), reml)


def lmm_from_profile(lp: LmmProfile, reml: bool = True) -> FitResult:
    """Minimize the profiled deviance of a prepared problem."""
    prof, n, p = lp.kernel, lp.n, lp.p
    reml = bool(reml)

    def dev(ll: float) -> float:
        return prof.deviance(ll, reml)

    log_ratio, n_eval = _golden_section(
        dev, LOG_LAMBDA_LO, LOG_LAMBDA_HI, LOG_LAMBDA_TOL, MAX_SEARCH_ITER
    )
    boundary = (
        log_ratio - LOG_LAMBDA_LO < _BOUNDARY_MARGIN
        or LOG_LAMBDA_HI - log_ratio < _BOUNDARY_MARGIN
    )
    beta, ainv_diag, sig2e, rss, _logdet_v, _logdet_a = prof.solve(log_ratio, reml)
    deviance = dev(log_ratio)
    df = n - p
    sig2u = math.exp(log_ratio) * sig2e
    names = lp.names
    se = [math.sqrt(sig2e * a) for a in ainv_diag]
    return FitResult(
        method="reml" if reml else "ml",
        coefficients={nm: float(b) for nm, b in zip(names, beta)},
        standard_errors={nm: float(s) for nm, s in zip(names, se)},
        p_values={
            nm: _wald_p(float(b), float(s), df)
            for nm, b, s in zip(names, beta, se)
        },
        nobs=n,
        df=df,
        rss=float(rss),
        variance_components=(float(sig2e), float(sig2u)),
        convergence=ConvergenceInfo(
            converged=True,
            n_evaluations=n_eval,
            log_ratio=float(log_ratio),
            boundary=boundary,
            deviance=float(deviance),
            criterion="reml" if reml else "ml",
        ),
    )


def lmm_fixed_ratio(X: DesignMatrix, y, lam: float, reml: bool = True) -> FitResult:
    """Mixed-model solve at a pinned variance ratio lambda >= 0.

    lambda = 0 reduces the weighted system to the plain normal equations,
    which the OLS agreement test exploits.
    """
    if lam < 0.0:
        raise ValueError("variance ratio must be non-negative")
    prof, n, p = _make_profile(X, y)
    reml = bool(reml)
    log_ratio = math.log(lam) if lam > 0.0 else -math.inf
    beta, ainv_diag, sig2e, rss, _lv, _la = prof.solve(log_ratio, reml)
    df = n - p
    names = X.names
    se = [math.sqrt(sig2e * a) for a in ainv_diag]
    return FitResult(
        method="reml" if reml else "ml",
        coefficients={nm: float(b) for nm, b in zip(names, beta)},
        standard_errors={nm: float(s) for nm, s in zip(names, se)},
        p_values={
            nm: _wald_p(float(b), float(s), df)
            for nm, b, s in zip(names, beta, se)
        },
        nobs=n,
        df=df,
        rss=float(rss),
        variance_components=(float(sig2e), lam * float(sig2e)),
        convergence=ConvergenceInfo(
            converged=True,
            n_evaluations=0,
            log_ratio=float(log_ratio),
            boundary=False,
            deviance=float(prof.deviance(log_ratio, reml)) if lam > 0.0 else math.nan,
            criterion="reml" if reml else "ml",
        ),
    )


# ---------------------------------------------------------------------------
# variance inflation factors


def vif_values(X: DesignMatrix, skip=("const",)) -> dict:
    """VIF of every column not in ``skip``.

    VIF_j = 1 / (1 - R2_j) from regressing column j on all other columns
    (the intercept included as a regressor but never scored itself).
    Computed from the Gram matrix; 1 - R2 below 1e-12 reports inf.
    """
    xm = X.matrix
    n, p = xm.shape
    gram = np.einsum("ij,ik->jk", xm, xm)
    colsum = gram[0]  # row of const: per-column sums
    out = {}
    skip = set(skip)
    for j, name in enumerate(X.names):
        if name in skip:
            continue
        others = [k for k in range(p) if k != j]
        sub = gram[np.ix_(others, others)]
        rhs = gram[others, j]
        coef, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
        rss = float(gram[j, j] - rhs @ coef)
        tss = float(gram[j, j] - colsum[j] * colsum[j] / n)
        if tss <= 0.0:
            out[name] = math.inf
            continue
        one_minus_r2 = max(rss, 0.0) / tss
        out[name] = math.inf if one_minus_r2 < 1e-12 else 1.0 / one_minus_r2
    return out


def vif_prune(X: DesignMatrix, threshold: float, protected=()) -> tuple:
    """Iteratively drop the worst collinear column until all VIFs pass.

    Each round removes the single unprotected column with the highest VIF
    above ``threshold`` (ties broken toward the later column), then
    recomputes.  ``const`` is implicitly protected and never scored.
    Returns (pruned DesignMatrix, tuple of dropped names in drop order).
    """
    if not threshold > 1.0:
        raise ValueError("VIF threshold must exceed 1")
    protected = set(protected) | {"const"}
    current = X
    dropped = []
    while True:
        candidates = [n for n in current.names if n not in protected]
        if not candidates:
            break
        vifs = vif_values(current, skip=protected | {"const"})
        worst_name = None
        worst = threshold
        for name in current.names:  # column order; later ties overwrite
            if name in protected:
                continue
            v = vifs[name]
            if v > threshold and v >= worst:
                worst = v
                worst_name = name
        if worst_name is None:
            break
        dropped.append(worst_name)
        current = current.drop([worst_name])
    return current, tuple(dropped)
