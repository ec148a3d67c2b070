# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled random-intercept profile kernel.

Statement-for-statement mirror of forkgarden._kernels_py; see that module
for the model, the derivation, and the result contract.  Keep the two in
lockstep: the build disables FP contraction precisely so that this file
and the pure-Python reference produce bit-identical doubles.
"""

from libc.math cimport exp, log, log1p, sqrt
from libc.stdlib cimport free, malloc

from forkgarden.errors import RankDeficient

cdef double LOG_2PI = 1.8378770664093453
cdef double _RSS_FLOOR = 1e-300
cdef double _PIVOT_RTOL = 1e-12


cdef class RandomInterceptProfile:
    """Profiled deviance of a random-intercept model, from sufficient stats.

    Same constructor contract as the reference backend except that array
    arguments are C-contiguous float64 buffers (group sizes int64) rather
    than nested lists.
    """

    cdef double[:, ::1] xtx
    cdef double[::1] xty
    cdef double yty
    cdef double[:, ::1] gx
    cdef double[::1] gy
    cdef long long[::1] gn
    cdef int n
    cdef int p
    cdef int n_groups
    cdef double* _a
    cdef double* _b
    cdef double* _z
    cdef double* _beta
    cdef double* _v
    cdef double _logdet_v
    cdef double _logdet_a
    cdef double _rss

    def __cinit__(self, double[:, ::1] xtx, double[::1] xty, double yty,
                  double[:, ::1] gx, double[::1] gy, long long[::1] gn, int n):
        cdef int p = xty.shape[0]
        self.xtx = xtx
        self.xty = xty
        self.yty = yty
        self.gx = gx
        self.gy = gy
        self.gn = gn
        self.n = n
        self.p = p
        self.n_groups = gn.shape[0]
        self._a = <double*> malloc(p * p * sizeof(double))
        self._b = <double*> malloc(p * sizeof(double))
        self._z = <double*> malloc(p * sizeof(double))
        self._beta = <double*> malloc(p * sizeof(double))
        self._v = <double*> malloc(p * sizeof(double))
        if (self._a == NULL or self._b == NULL or self._z == NULL
                or self._beta == NULL or self._v == NULL):
            raise MemoryError()

    def __dealloc__(self):
        free(self._a)
        free(self._b)
        free(self._z)
        free(self._beta)
        free(self._v)

    # -- shared factorization ------------------------------------------------

    cdef int _factor(self, double log_lambda) except -1:
        cdef int p = self.p
        cdef int G = self.n_groups
        cdef double lam = exp(log_lambda)
        cdef double* a = self._a
        cdef double* bvec = self._b
        cdef double* z = self._z
        cdef double* beta = self._beta
        cdef int i, j, k, r, g
        cdef long long ng
        cdef double w, tg, wsi, q, logdet_v, logdet_a, d, lkk, s, piv_tol, rss
        for i in range(p):
            for j in range(p):
                a[i * p + j] = self.xtx[i, j]
            bvec[i] = self.xty[i]
        q = self.yty
        logdet_v = 0.0
        for g in range(G):
            ng = self.gn[g]
            w = lam / (1.0 + ng * lam)
            logdet_v += log1p(ng * lam)
            tg = self.gy[g]
            for i in range(p):
                wsi = w * self.gx[g, i]
                bvec[i] -= wsi * tg
                for j in range(p):
                    a[i * p + j] -= wsi * self.gx[g, j]
            q -= w * tg * tg
        for k in range(p):
            piv_tol = self.xtx[k, k] * _PIVOT_RTOL
            d = a[k * p + k]
            for r in range(k):
                d -= a[k * p + r] * a[k * p + r]
            if not d > piv_tol:
                raise RankDeficient(
                    "pivot %r at column %d below tolerance %r" % (d, k, piv_tol)
                )
            lkk = sqrt(d)
            a[k * p + k] = lkk
            for i in range(k + 1, p):
                s = a[i * p + k]
                for r in range(k):
                    s -= a[i * p + r] * a[k * p + r]
                a[i * p + k] = s / lkk
        logdet_a = 0.0
        for k in range(p):
            logdet_a += 2.0 * log(a[k * p + k])
        for i in range(p):
            s = bvec[i]
            for r in range(i):
                s -= a[i * p + r] * z[r]
            z[i] = s / a[i * p + i]
        for i in range(p - 1, -1, -1):
            s = z[i]
            for r in range(i + 1, p):
                s -= a[r * p + i] * beta[r]
            beta[i] = s / a[i * p + i]
        rss = q
        for i in range(p):
            rss -= beta[i] * bvec[i]
        if rss < _RSS_FLOOR:
            rss = _RSS_FLOOR
        self._logdet_v = logdet_v
        self._logdet_a = logdet_a
        self._rss = rss
        return 0

    # -- public surface --------------------------------------------------

    def deviance(self, double log_lambda, bint reml):
        self._factor(log_lambda)
        cdef double rss = self._rss
        cdef int n = self.n
        cdef int p = self.p
        cdef double sig2
        if reml:
            sig2 = rss / (n - p)
            return (n - p) * (LOG_2PI + log(sig2) + 1.0) + self._logdet_v + self._logdet_a
        sig2 = rss / n
        return n * (LOG_2PI + log(sig2) + 1.0) + self._logdet_v

    def solve(self, double log_lambda, bint reml):
        self._factor(log_lambda)
        cdef int p = self.p
        cdef int n = self.n
        cdef double rss = self._rss
        cdef double* a = self._a
        cdef double* v = self._v
        cdef int i, k, r
        cdef double s, acc, sig2
        if reml:
            sig2 = rss / (n - p)
        else:
            sig2 = rss / n
        ainv_diag = [0.0] * p
        for i in range(p):
            for k in range(i, p):
                if k == i:
                    s = 1.0
                else:
                    s = 0.0
                for r in range(i, k):
                    s -= a[k * p + r] * v[r]
                v[k] = s / a[k * p + k]
            acc = 0.0
            for k in range(i, p):
                acc += v[k] * v[k]
            ainv_diag[i] = acc
        beta = [0.0] * p
        for i in range(p):
            beta[i] = self._beta[i]
        return beta, ainv_diag, sig2, rss, self._logdet_v, self._logdet_a
