# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Strang path kernel (hot loop of the path simulation)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, isfinite


cdef inline void _displacement(double* q, double* g, Py_ssize_t N,
                               double* Aa, double* Aamu, double* AaC2,
                               double* C1, double* BbC4, double* C3,
                               double* numax, double* v0, double* gamma,
                               double* W) noexcept nogil:
    cdef Py_ssize_t k, j
    cdef double x1k, aff, s
    for k in range(N):
        x1k = q[3 * k]
        s = numax[k] / (1.0 + exp(gamma[k] * (v0[k] - (q[3 * k + 1] - q[3 * k + 2]))))
        g[3 * k] = Aa[k] * s
        aff = 0.0
        for j in range(N):
            aff += W[j * N + k] * q[3 * j]
        s = numax[k] / (1.0 + exp(gamma[k] * (v0[k] - C1[k] * x1k)))
        g[3 * k + 1] = Aamu[k] + AaC2[k] * s + aff
        s = numax[k] / (1.0 + exp(gamma[k] * (v0[k] - C3[k] * x1k)))
        g[3 * k + 2] = BbC4[k] * s


def run_strang(double[::1] x0, double[:, ::1] noise,
               double[::1] vt, double[::1] kp, double[::1] vtp, double[::1] kpp,
               double[::1] l_qq, double[::1] l_pq, double[::1] l_pp,
               double delta,
               double[::1] Aa, double[::1] Aamu, double[::1] AaC2,
               double[::1] C1, double[::1] BbC4, double[::1] C3,
               double[::1] numax, double[::1] v0, double[::1] gamma,
               double[:, ::1] W, bint include_displacement=True):
    """Simulate m Strang steps; noise has shape (m, 6N), rows are N(0, I) draws.

    Returns the full path with shape (m + 1, 6N).
    """
    cdef Py_ssize_t m = noise.shape[0]
    cdef Py_ssize_t dim = x0.shape[0]
    cdef Py_ssize_t n3 = dim // 2
    cdef Py_ssize_t N = n3 // 3
    cdef double h2 = 0.5 * delta
    cdef cnp.ndarray out = np.empty((m + 1, dim), dtype=np.float64)
    cdef double[:, ::1] path = out
    cdef double[::1] q = np.array(x0[:n3])
    cdef double[::1] p = np.array(x0[n3:])
    cdef double[::1] g = np.empty(n3)
    cdef double[::1] qn = np.empty(n3)
    cdef double[::1] pn = np.empty(n3)
    cdef double[::1] Wf = np.ascontiguousarray(W).reshape(-1)
    cdef Py_ssize_t i, r
    cdef bint ok = True
    cdef Py_ssize_t bad_step = -1

    path[0, :] = x0
    with nogil:
        for i in range(m):
            if include_displacement:
                _displacement(&q[0], &g[0], N, &Aa[0], &Aamu[0], &AaC2[0],
                              &C1[0], &BbC4[0], &C3[0], &numax[0], &v0[0],
                              &gamma[0], &Wf[0])
                for r in range(n3):
                    p[r] = p[r] + h2 * g[r]
            for r in range(n3):
                qn[r] = vt[r] * q[r] + kp[r] * p[r] + l_qq[r] * noise[i, r]
                pn[r] = vtp[r] * q[r] + kpp[r] * p[r] \
                    + l_pq[r] * noise[i, r] + l_pp[r] * noise[i, n3 + r]
            for r in range(n3):
                q[r] = qn[r]
                p[r] = pn[r]
            if include_displacement:
                _displacement(&q[0], &g[0], N, &Aa[0], &Aamu[0], &AaC2[0],
                              &C1[0], &BbC4[0], &C3[0], &numax[0], &v0[0],
                              &gamma[0], &Wf[0])
                for r in range(n3):
                    p[r] = p[r] + h2 * g[r]
            for r in range(n3):
                path[i + 1, r] = q[r]
                path[i + 1, n3 + r] = p[r]
                if not isfinite(q[r]) or not isfinite(p[r]):
                    ok = False
            if not ok:
                bad_step = i + 1
                break
    if not ok:
        raise FloatingPointError(f"non-finite state at step {bad_step}")
    return out
