"""Pure-NumPy fallback for the Strang path kernel.

Same calling convention as the compiled extension jrnet._strang; used
when the extension is unavailable.  The OU sub-flow exploits that Exp
and Cov are diagonal-block matrices: the position/momentum update is
elementwise and the noise transform couples coordinate i only with
i + 3N (vectors l_qq, l_pq, l_pp hold the Cholesky entries).
"""

import numpy as np


def _displacement(q, Aa, Aamu, AaC2, C1, BbC4, C3, numax, v0, gamma, W):
    x1 = q[0::3]
    s = lambda x: numax / (1.0 + np.exp(gamma * (v0 - x)))
    g = np.empty_like(q)
    g[0::3] = Aa * s(q[1::3] - q[2::3])
    g[1::3] = Aamu + AaC2 * s(C1 * x1) + (W.T @ x1)
    g[2::3] = BbC4 * s(C3 * x1)
    return g


def run_strang(x0, noise, vt, kp, vtp, kpp, l_qq, l_pq, l_pp, delta,
               Aa, Aamu, AaC2, C1, BbC4, C3, numax, v0, gamma, W,
               include_displacement=True):
    """Simulate m Strang steps; noise has shape (m, 6N), rows are N(0, I) draws.

    Returns the full path with shape (m + 1, 6N).
    """
    m = noise.shape[0]
    dim = x0.shape[0]
    n3 = dim // 2
    h2 = 0.5 * delta
    path = np.empty((m + 1, dim))
    path[0] = x0
    q = x0[:n3].copy()
    p = x0[n3:].copy()
    args = (Aa, Aamu, AaC2, C1, BbC4, C3, numax, v0, gamma, W)
    for i in range(m):
        if include_displacement:
            p = p + h2 * _displacement(q, *args)
        nq = noise[i, :n3]
        np_ = noise[i, n3:]
        qn = vt * q + kp * p + l_qq * nq
        pn = vtp * q + kpp * p + l_pq * nq + l_pp * np_
        q, p = qn, pn
        if include_displacement:
            p = p + h2 * _displacement(q, *args)
        path[i + 1, :n3] = q
        path[i + 1, n3:] = p
        if not np.isfinite(q).all() or not np.isfinite(p).all():
            raise FloatingPointError(f"non-finite state at step {i + 1}")
    return path
