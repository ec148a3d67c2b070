"""Compare the compiled profile kernel against the pure-Python mirror.

Builds identical random-intercept problems at panel sizes the runner
actually produces, then times the two hot operations on both backends:
deviance evaluation (the golden-section search calls this ~40 times per
fit) and the final solve.  Agreement is checked exactly while timing, so
a run doubles as a backend-equivalence smoke test.

    python3 benchmarks/bench_kernels.py [--repeats N] [--evals N]
"""

import argparse
import statistics
import time

import numpy as np

from forkgarden import _kernels_py
from forkgarden.stats import LOG_LAMBDA_HI, LOG_LAMBDA_LO, _suffstats

try:
    from forkgarden import _kernels

    HAVE_COMPILED = True
except ImportError:
    HAVE_COMPILED = False

# (projects, periods, extra covariate columns): spans one small inspection
# panel up to the largest default-space panel.
SHAPES = [
    (40, 12, 0),
    (200, 12, 0),
    (200, 24, 2),
    (200, 48, 2),
    (500, 48, 4),
]


def build_problem(rng, projects, periods, extra):
    n = projects * periods
    p = 4 + extra
    per = np.concatenate(
        [np.arange(-periods // 2, 0), np.arange(1, periods // 2 + 1)]
    ).astype(float)
    period = np.tile(per, projects)
    cols = [
        np.ones(n),
        period,
        (period > 0).astype(float),
        np.maximum(period, 0.0),
    ]
    for _ in range(extra):
        cols.append(rng.normal(size=n))
    xm = np.ascontiguousarray(np.column_stack(cols))
    codes = np.repeat(np.arange(projects), periods)
    u = rng.normal(scale=0.7, size=projects)
    y = xm @ rng.normal(size=p) + u[codes] + rng.normal(size=n)
    return xm, np.ascontiguousarray(y), codes


def profiles_for(xm, y, codes):
    n = xm.shape[0]
    xtx, xty, yty, gx, gy, gn = _suffstats(xm, y, codes)
    py = _kernels_py.RandomInterceptProfile(
        xtx.tolist(), xty.tolist(), float(yty),
        gx.tolist(), gy.tolist(), [int(v) for v in gn], n,
    )
    if not HAVE_COMPILED:
        return py, None
    comp = _kernels.RandomInterceptProfile(
        np.ascontiguousarray(xtx), np.ascontiguousarray(xty), float(yty),
        np.ascontiguousarray(gx), np.ascontiguousarray(gy),
        np.ascontiguousarray(gn, dtype=np.int64), n,
    )
    return py, comp


def time_backend(profile, grid, repeats):
    """Median seconds for one deviance sweep plus a solve at the optimum."""
    samples = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        devs = [profile.deviance(ll, True) for ll in grid]
        best = grid[int(np.argmin(devs))]
        out = profile.solve(best, True)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples), devs, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=9, help="timing repetitions")
    ap.add_argument("--evals", type=int, default=40, help="deviance calls per sweep")
    args = ap.parse_args()

    if not HAVE_COMPILED:
        print("compiled kernel unavailable; timing the Python backend only")

    rng = np.random.default_rng(20240816)
    grid = list(np.linspace(LOG_LAMBDA_LO, LOG_LAMBDA_HI, args.evals))

    header = f"{'panel':>22} {'rows':>7} {'p':>3} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for projects, periods, extra in SHAPES:
        xm, y, codes = build_problem(rng, projects, periods, extra)
        py, comp = profiles_for(xm, y, codes)
        t_py, devs_py, out_py = time_backend(py, grid, args.repeats)
        label = f"{projects} proj x {periods} per"
        if comp is None:
            print(f"{label:>22} {xm.shape[0]:>7} {xm.shape[1]:>3} {t_py * 1e3:>8.2f}ms {'-':>10} {'-':>8}")
            continue
        t_c, devs_c, out_c = time_backend(comp, grid, args.repeats)
        if devs_py != devs_c or list(out_py[0]) != list(out_c[0]):
            raise SystemExit(f"backend mismatch on {label}")
        print(
            f"{label:>22} {xm.shape[0]:>7} {xm.shape[1]:>3} "
            f"{t_py * 1e3:>8.2f}ms {t_c * 1e3:>8.2f}ms {t_py / t_c:>7.1f}x"
        )


if __name__ == "__main__":
    main()
