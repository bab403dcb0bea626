"""Path simulation of the 6N-dimensional system via Strang splitting.

The linear-plus-noise subsystem is an OU process whose exact transition
uses the closed-form matrices Exp(Delta) and Cov(Delta); both consist of
four diagonal 3N x 3N blocks, so one step costs O(N) plus the O(N^2)
coupling sum.  The per-path stepping loop is the hot kernel: a compiled
extension is used when available, with a pure-NumPy fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelParams, displacement

try:
    from . import _strang as _kernel
    KERNEL_IMPL = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _strang_py as _kernel
    KERNEL_IMPL = "python"

from . import _strang_py as _kernel_py

__all__ = [
    "OUPrecompute",
    "MultiSeries",
    "KERNEL_IMPL",
    "ou_precompute",
    "strang_step",
    "lie_trotter_step",
    "euler_maruyama_step",
    "simulate",
    "observe_and_subsample",
]


def gamma_diag(m: ModelParams) -> np.ndarray:
    """3N damping diagonal (a, a, b) per population."""
    return np.concatenate([[p.a, p.a, p.b] for p in m.pops])


def sigma_diag(m: ModelParams) -> np.ndarray:
    """3N diffusion diagonal (eps, sigma, eps) per population."""
    return np.concatenate([[p.eps, p.sigma, p.eps] for p in m.pops])


@dataclass(frozen=True)
class OUPrecompute:
    """Closed-form OU transition pieces for one step size.

    vt, kp, vtp, kpp are the diagonals of the four 3N x 3N blocks of
    Exp(Delta); l_qq, l_pq, l_pp hold the sparse Cholesky factor of
    Cov(Delta) (coordinate i couples only with i + 3N).  The dense
    exp_block / cov_block / chol views are kept for verification.
    """

    delta: float
    vt: np.ndarray
    kp: np.ndarray
    vtp: np.ndarray
    kpp: np.ndarray
    l_qq: np.ndarray
    l_pq: np.ndarray
    l_pp: np.ndarray
    exp_block: np.ndarray
    cov_block: np.ndarray
    chol: np.ndarray


def _block_diag_pair(tl, tr, bl, br) -> np.ndarray:
    n = tl.shape[0]
    out = np.zeros((2 * n, 2 * n))
    idx = np.arange(n)
    out[idx, idx] = tl
    out[idx, idx + n] = tr
    out[idx + n, idx] = bl
    out[idx + n, idx + n] = br
    return out


def ou_precompute(m: ModelParams, delta: float) -> OUPrecompute:
    """Exp(Delta), Cov(Delta) and a usable Cholesky factor for step delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    g = gamma_diag(m)
    s = sigma_diag(m)
    e = np.exp(-g * delta)
    vt = e * (1.0 + g * delta)
    kp = e * delta
    vtp = -(g ** 2) * e * delta
    kpp = e * (1.0 - g * delta)

    s2 = s ** 2
    c_qq = 0.25 * g ** (-3.0) * s2 * (1.0 + kp * vtp - vt ** 2)
    c_qp = 0.5 * s2 * kp ** 2
    c_pp = 0.25 * g ** (-1.0) * s2 * (1.0 + kp * vtp - kpp ** 2)

    exp_block = _block_diag_pair(vt, kp, vtp, kpp)
    cov_block = _block_diag_pair(c_qq, c_qp, c_qp, c_pp)

    chol = _robust_cholesky(cov_block)
    n3 = len(g)
    idx = np.arange(n3)
    return OUPrecompute(
        delta=delta, vt=vt, kp=kp, vtp=vtp, kpp=kpp,
        l_qq=chol[idx, idx].copy(),
        l_pq=chol[idx + n3, idx].copy(),
        l_pp=chol[idx + n3, idx + n3].copy(),
        exp_block=exp_block, cov_block=cov_block, chol=chol,
    )


def _robust_cholesky(cov: np.ndarray) -> np.ndarray:
    """Cholesky with escalating ridge; Cov(Delta) can be numerically rank-deficient."""
    dim = cov.shape[0]
    base = np.trace(cov) / dim
    ridge = 0.0
    for _ in range(7):
        try:
            return np.linalg.cholesky(cov + ridge * np.eye(dim))
        except np.linalg.LinAlgError:
            ridge = 1e-12 * base if ridge == 0.0 else ridge * 10.0
            if ridge > 1e-6 * base:
                break
    raise np.linalg.LinAlgError(
        "Cov(Delta) factorization failed even with ridge; pathological parameters?")


def _split(x, n3):
    return x[:n3], x[n3:]


def _half_kick(x: np.ndarray, m: ModelParams, h: float) -> np.ndarray:
    n3 = x.shape[0] // 2
    q, p = _split(x, n3)
    return np.concatenate([q, p + h * displacement(q, m)])


def _ou_flow(x: np.ndarray, pre: OUPrecompute, xi: np.ndarray) -> np.ndarray:
    n3 = x.shape[0] // 2
    q, p = _split(x, n3)
    xq, xp = _split(xi, n3)
    return np.concatenate([
        pre.vt * q + pre.kp * p + xq,
        pre.vtp * q + pre.kpp * p + xp,
    ])


def _correlate(pre: OUPrecompute, noise: np.ndarray) -> np.ndarray:
    n3 = noise.shape[-1] // 2
    nq, np_ = noise[..., :n3], noise[..., n3:]
    return np.concatenate([
        pre.l_qq * nq,
        pre.l_pq * nq + pre.l_pp * np_,
    ], axis=-1)


def strang_step(x: np.ndarray, pre: OUPrecompute, m: ModelParams,
                noise: np.ndarray) -> np.ndarray:
    """One Strang step: half kick, exact OU transition, half kick."""
    x = _half_kick(np.asarray(x, float), m, 0.5 * pre.delta)
    x = _ou_flow(x, pre, _correlate(pre, np.asarray(noise, float)))
    return _half_kick(x, m, 0.5 * pre.delta)


def lie_trotter_step(x: np.ndarray, pre: OUPrecompute, m: ModelParams,
                     noise: np.ndarray) -> np.ndarray:
    """One Lie-Trotter step: full kick then exact OU transition."""
    x = _half_kick(np.asarray(x, float), m, pre.delta)
    return _ou_flow(x, pre, _correlate(pre, np.asarray(noise, float)))


def euler_maruyama_step(x: np.ndarray, m: ModelParams, delta: float,
                        noise: np.ndarray) -> np.ndarray:
    """One Euler-Maruyama step for the full drift with additive diffusion.

    Comparison baseline only; fails to preserve the oscillatory dynamics
    at practically relevant step sizes.
    """
    x = np.asarray(x, float)
    n3 = x.shape[0] // 2
    q, p = _split(x, n3)
    g = gamma_diag(m)
    s = sigma_diag(m)
    nz = np.asarray(noise, float)[n3:]
    dq = q + delta * p
    dp = p + delta * (-(g ** 2) * q - 2.0 * g * p + displacement(q, m)) \
        + np.sqrt(delta) * s * nz
    return np.concatenate([dq, dp])


def _kernel_args(m: ModelParams):
    """Per-population parameter arrays consumed by the stepping kernels."""
    Aa = np.array([p.A * p.a for p in m.pops])
    W = m.effective_coupling() * Aa[np.newaxis, :]  # W[j, k] scales X1^j into pop k
    return dict(
        Aa=Aa,
        Aamu=np.array([p.A * p.a * p.mu for p in m.pops]),
        AaC2=np.array([p.A * p.a * p.C2 for p in m.pops]),
        C1=np.array([p.C1 for p in m.pops]),
        BbC4=np.array([p.B * p.b * p.C4 for p in m.pops]),
        C3=np.array([p.C3 for p in m.pops]),
        numax=np.array([p.nu_max for p in m.pops]),
        v0=np.array([p.v0 for p in m.pops]),
        gamma=np.array([p.gamma for p in m.pops]),
        W=np.ascontiguousarray(W),
    )


def _run_kernel(kern, x0, noise, pre: OUPrecompute, m: ModelParams,
                include_displacement=True, correlated=False):
    if correlated:
        ones = np.ones_like(pre.l_qq)
        zeros = np.zeros_like(pre.l_qq)
        lq, lpq, lpp = ones, zeros, ones
    else:
        lq, lpq, lpp = pre.l_qq, pre.l_pq, pre.l_pp
    return kern.run_strang(
        np.ascontiguousarray(x0, dtype=float),
        np.ascontiguousarray(noise, dtype=float),
        pre.vt, pre.kp, pre.vtp, pre.kpp, lq, lpq, lpp, pre.delta,
        include_displacement=include_displacement, **_kernel_args(m))


def _steps_for(T: float, delta: float) -> int:
    steps = T / delta
    n = int(round(steps))
    if n < 1 or abs(steps - n) > 1e-9 * max(1.0, n):
        raise ValueError(f"T/delta = {steps} is not a positive integer")
    return n


def path_rng(seed, path_index: int = 0) -> np.random.Generator:
    """Independent per-path stream derived from (master seed, path index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(path_index,)))


def simulate(m: ModelParams, T: float, delta: float, x0=None, seed=0, *,
             path_index: int = 0, method: str = "strang",
             include_displacement: bool = True,
             burn_in_fraction: float = 0.0) -> np.ndarray:
    """Simulate one path; returns array of shape (T/delta + 1, 6N).

    Bit-reproducible for fixed (seed, path_index, method, configuration).
    A burn-in fraction extends the horizon by that fraction and discards
    the leading transient (default none).
    """
    n_keep = _steps_for(T, delta)
    n_burn = int(round(burn_in_fraction * n_keep))
    n = n_keep + n_burn
    dim = 6 * m.N
    if x0 is None:
        x0 = np.zeros(dim)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (dim,):
        raise ValueError(f"x0 must have shape ({dim},)")
    rng = path_rng(seed, path_index)
    noise = rng.standard_normal((n, dim))
    pre = ou_precompute(m, delta)

    if method == "strang":
        try:
            path = _run_kernel(_kernel, x0, noise, pre, m,
                               include_displacement=include_displacement)
        except FloatingPointError as err:
            raise FloatingPointError(f"simulation blew up: {err}") from err
    elif method in ("lie_trotter", "euler"):
        path = np.empty((n + 1, dim))
        path[0] = x0
        x = x0
        for i in range(n):
            if method == "lie_trotter":
                x = lie_trotter_step(x, pre, m, noise[i])
            else:
                x = euler_maruyama_step(x, m, delta, noise[i])
            if not np.isfinite(x).all():
                raise FloatingPointError(f"simulation blew up: non-finite state at step {i + 1}")
            path[i + 1] = x
    else:
        raise ValueError(f"unknown method {method!r}")
    return path[n_burn:]


@dataclass(frozen=True)
class MultiSeries:
    """N simultaneously sampled channels on a uniform time grid."""

    dt: float
    channels: np.ndarray  # shape (N, n_points)
    labels: tuple

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=float)
        if ch.ndim != 2:
            raise ValueError("channels must be 2-dimensional (N, n_points)")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if len(self.labels) != ch.shape[0]:
            raise ValueError("one label per channel required")
        object.__setattr__(self, "channels", ch)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def N(self) -> int:
        return self.channels.shape[0]

    @property
    def n_points(self) -> int:
        return self.channels.shape[1]

    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dt


def observe_and_subsample(path: np.ndarray, delta: float, obs_step: float,
                          labels=None) -> MultiSeries:
    """Extract the observed channels Y^k = X2^k - X3^k at the coarser grid."""
    ratio = obs_step / delta
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * k:
        raise ValueError(f"obs_step/delta = {ratio} is not a positive integer")
    path = np.asarray(path)
    n3 = path.shape[1] // 2
    N = n3 // 3
    sub = path[::k]
    channels = (sub[:, 1:n3:3] - sub[:, 2:n3:3]).T
    if labels is None:
        labels = tuple(f"Y{i + 1}" for i in range(N))
    return MultiSeries(dt=obs_step, channels=channels, labels=labels)
