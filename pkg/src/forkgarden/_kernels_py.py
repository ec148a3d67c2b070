"""Pure-Python random-intercept profile kernel (reference backend).

This module is the readable twin of the compiled extension in
``forkgarden._kernels``.  Both evaluate the profiled deviance of a linear
model with one random intercept per group from sufficient statistics
alone, and both must produce bit-identical doubles: the compiled kernel
copies this file's statement order exactly and is built with FP
contraction disabled.  Change one and you must change the other.

Model
-----
y = X beta + Z u + e,  u ~ N(0, sigma2_u I_G),  e ~ N(0, sigma2_e I_n),
with Z the group-membership indicator.  Write lambda = sigma2_u / sigma2_e.
Then V = I + lambda Z Z' is block diagonal and Woodbury gives, per group g
with n_g rows, weight w_g = lambda / (1 + n_g lambda) and

    X'V^-1X = X'X - sum_g w_g s_g s_g',      s_g = column sums of X in g,
    X'V^-1y = X'y - sum_g w_g t_g s_g,       t_g = sum of y in g,
    y'V^-1y = y'y - sum_g w_g t_g**2,
    log|V|  = sum_g log(1 + n_g lambda).

Profiling beta and sigma2_e out of the (restricted) likelihood leaves a
one-dimensional problem in log lambda; see Harville (1977) for the REML
form.  The kernel factors X'V^-1X by Cholesky, so a fit costs
O(G p**2 + p**3) per deviance evaluation regardless of n.
"""

from __future__ import annotations

import math

from forkgarden.errors import RankDeficient

LOG_2PI = 1.8378770664093453  # log(2 pi), shared literal with the compiled kernel
_RSS_FLOOR = 1e-300
_PIVOT_RTOL = 1e-12


class RandomInterceptProfile:
    """Profiled deviance of a random-intercept model, from sufficient stats.

    Parameters are plain nested lists / floats so that all arithmetic runs
    in scalar Python doubles:

    xtx : p x p list of lists, X'X
    xty : length-p list, X'y
    yty : float, y'y
    gx  : G x p list of lists, per-group column sums of X
    gy  : length-G list, per-group sums of y
    gn  : length-G list of ints, group sizes
    n   : int, total number of rows
    """

    def __init__(self, xtx, xty, yty, gx, gy, gn, n):
        self.p = len(xty)
        self.n_groups = len(gn)
        self.n = n
        self.xtx = xtx
        self.xty = xty
        self.yty = yty
        self.gx = gx
        self.gy = gy
        self.gn = gn

    # -- shared factorization ------------------------------------------------

    def _factor(self, log_lambda: float):
        """Build and Cholesky-factor the weighted system at one lambda.

        Returns (a, bvec, q, logdet_v, logdet_a, beta, rss) where ``a``
        holds the Cholesky factor L in its lower triangle.
        """
        p = self.p
        lam = math.exp(log_lambda)
        a = [row[:] for row in self.xtx]
        bvec = self.xty[:]
        q = self.yty
        logdet_v = 0.0
        for g in range(self.n_groups):
            ng = self.gn[g]
            w = lam / (1.0 + ng * lam)
            logdet_v += math.log1p(ng * lam)
            tg = self.gy[g]
            sg = self.gx[g]
            for i in range(p):
                wsi = w * sg[i]
                bvec[i] -= wsi * tg
                ai = a[i]
                for j in range(p):
                    ai[j] -= wsi * sg[j]
            q -= w * tg * tg
        # Cholesky a = L L', in place, lower triangle.  The pivot check is
        # relative to each column's unweighted diagonal so it is invariant
        # to column scaling.
        for k in range(p):
            piv_tol = self.xtx[k][k] * _PIVOT_RTOL
            d = a[k][k]
            for r in range(k):
                d -= a[k][r] * a[k][r]
            if not d > piv_tol:
                raise RankDeficient(
                    f"pivot {d!r} at column {k} below tolerance {piv_tol!r}"
                )
            lkk = math.sqrt(d)
            a[k][k] = lkk
            for i in range(k + 1, p):
                s = a[i][k]
                for r in range(k):
                    s -= a[i][r] * a[k][r]
                a[i][k] = s / lkk
        logdet_a = 0.0
        for k in range(p):
            logdet_a += 2.0 * math.log(a[k][k])
        # solve L z = b, then L' beta = z
        z = [0.0] * p
        for i in range(p):
            s = bvec[i]
            for r in range(i):
                s -= a[i][r] * z[r]
            z[i] = s / a[i][i]
        beta = [0.0] * p
        for i in range(p - 1, -1, -1):
            s = z[i]
            for r in range(i + 1, p):
                s -= a[r][i] * beta[r]
            beta[i] = s / a[i][i]
        rss = q
        for i in range(p):
            rss -= beta[i] * bvec[i]
        if rss < _RSS_FLOOR:
            rss = _RSS_FLOOR
        return a, bvec, q, logdet_v, logdet_a, beta, rss

    # -- public surface --------------------------------------------------

    def deviance(self, log_lambda: float, reml: bool) -> float:
        """-2 log (restricted) likelihood, profiled over beta and sigma2_e,
        up to the criterion's usual additive constant."""
        a, bvec, q, logdet_v, logdet_a, beta, rss = self._factor(log_lambda)
        n = self.n
        p = self.p
        if reml:
            sig2 = rss / (n - p)
            return (n - p) * (LOG_2PI + math.log(sig2) + 1.0) + logdet_v + logdet_a
        sig2 = rss / n
        return n * (LOG_2PI + math.log(sig2) + 1.0) + logdet_v

    def solve(self, log_lambda: float, reml: bool):
        """Coefficients and dispersion at a fixed variance ratio.

        Returns (beta, ainv_diag, sigma2_e, rss, logdet_v, logdet_a) with
        beta and ainv_diag as lists; ainv_diag holds the diagonal of
        (X'V^-1X)^-1.
        """
        a, bvec, q, logdet_v, logdet_a, beta, rss = self._factor(log_lambda)
        p = self.p
        n = self.n
        if reml:
            sig2 = rss / (n - p)
        else:
            sig2 = rss / n
        # diag of A^-1 = L'^-1 L^-1: column i of L^-1 by forward solve of e_i
        ainv_diag = [0.0] * p
        v = [0.0] * p
        for i in range(p):
            for k in range(i, p):
                if k == i:
                    s = 1.0
                else:
                    s = 0.0
                for r in range(i, k):
                    s -= a[k][r] * v[r]
                v[k] = s / a[k][k]
            acc = 0.0
            for k in range(i, p):
                acc += v[k] * v[k]
            ainv_diag[i] = acc
        return beta, ainv_diag, sig2, rss, logdet_v, logdet_a
