"""Adapted SMC-ABC for mixed continuous/binary parameter vectors.

Iteration 1 is acceptance-rejection at a pilot-run threshold; later
iterations resample continuous particles by weight, perturb them with a
Gaussian kernel (twice the weighted empirical covariance), redraw each
binary coordinate from a Bernoulli with the previous-population mean and
keep it with probability q_stay, and update importance weights using the
continuous kernel only.  The threshold shrinks along percentiles of the
accepted distances until the acceptance rate drops below a floor.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "PriorSpec",
    "Generation",
    "KernelState",
    "ABCConfig",
    "RunRecord",
    "sample_prior",
    "kernel_state",
    "propose",
    "flip_probabilities",
    "flip_kernel_propose",
    "update_weight",
    "next_threshold",
    "ess",
    "f1_score",
    "posterior_network",
    "pilot_threshold",
    "run_nsmc_abc",
    "posterior_predictive",
]


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform priors per continuous slot, Bernoulli per binary slot."""

    continuous: tuple = ()  # (lo, hi) pairs
    binary: tuple = ()      # success probabilities, default 1/2 per slot

    def __post_init__(self):
        cont = tuple((float(lo), float(hi)) for lo, hi in self.continuous)
        for lo, hi in cont:
            if not lo < hi:
                raise ValueError("uniform prior needs lo < hi")
        probs = tuple(float(p) for p in self.binary)
        for p in probs:
            if not 0 < p < 1:
                raise ValueError("Bernoulli prior probability must lie in (0, 1)")
        object.__setattr__(self, "continuous", cont)
        object.__setattr__(self, "binary", probs)

    @property
    def c_n(self) -> int:
        return len(self.continuous)

    @property
    def b_n(self) -> int:
        return len(self.binary)

    def in_support(self, theta_c) -> bool:
        return all(lo <= v <= hi for v, (lo, hi) in zip(theta_c, self.continuous))

    def density_c(self, theta_c) -> float:
        if not self.in_support(theta_c):
            return 0.0
        out = 1.0
        for lo, hi in self.continuous:
            out /= hi - lo
        return out


def sample_prior(spec: PriorSpec, rng: np.random.Generator):
    """Independent draws from the continuous and binary priors."""
    theta_c = np.array([rng.uniform(lo, hi) for lo, hi in spec.continuous])
    theta_b = np.array([rng.binomial(1, p) for p in spec.binary], dtype=np.int8)
    return theta_c, theta_b


@dataclass
class Generation:
    """M weighted particles accepted at one iteration."""

    theta_c: np.ndarray    # (M, c_n)
    theta_b: np.ndarray    # (M, b_n) in {0, 1}
    weights: np.ndarray    # (M,), normalized
    distances: np.ndarray  # (M,), all < threshold
    threshold: float
    iteration: int
    sims_used: int
    acceptance_rate: float

    @property
    def M(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class KernelState:
    """Proposal-kernel statistics derived from one generation."""

    sigma_hat: np.ndarray  # 2 x weighted empirical covariance of theta_c
    chol: np.ndarray       # lower-triangular factor of sigma_hat
    p_hat: np.ndarray      # unweighted per-coordinate mean of theta_b
    q_stay: float

    def __post_init__(self):
        if not 0.5 < self.q_stay <= 1.0:
            raise ValueError("q_stay must lie in (0.5, 1]")


def weighted_covariance(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Population-style weighted covariance: sum w_i (x_i - xbar)(x_i - xbar)^T."""
    xbar = w @ x
    d = x - xbar
    return (d * w[:, None]).T @ d


def kernel_state(gen: Generation, q_stay: float = 0.9) -> KernelState:
    """Gaussian/Bernoulli proposal statistics from the previous generation."""
    if gen.M < 2:
        raise ValueError("need at least 2 particles")
    sigma_hat = 2.0 * weighted_covariance(gen.theta_c, gen.weights)
    c_n = sigma_hat.shape[0]
    if c_n:
        try:
            chol = np.linalg.cholesky(sigma_hat)
        except np.linalg.LinAlgError:
            ridge = 1e-10 * max(np.mean(np.diag(sigma_hat)), 1e-300)
            warnings.warn("degenerate continuous particles; proposal covariance regularized")
            sigma_hat = sigma_hat + ridge * np.eye(c_n)
            chol = np.linalg.cholesky(sigma_hat)
    else:
        chol = sigma_hat
    p_hat = gen.theta_b.mean(axis=0) if gen.theta_b.size else np.empty(0)
    return KernelState(sigma_hat=sigma_hat, chol=chol, p_hat=p_hat, q_stay=q_stay)


def propose(prev: Generation, ks: KernelState, spec: PriorSpec,
            rng: np.random.Generator):
    """One proposal: weight-resampled + Gaussian-perturbed theta_c (redrawn
    until inside the prior support) and Bernoulli-redrawn + stay/flip theta_b."""
    c_n = spec.c_n
    while True:
        idx = rng.choice(prev.M, p=prev.weights)
        theta_c = prev.theta_c[idx] + ks.chol @ rng.standard_normal(c_n)
        if spec.in_support(theta_c):
            break
    theta_b = _perturb_binary(ks, rng)
    return theta_c, theta_b


def _perturb_binary(ks: KernelState, rng: np.random.Generator) -> np.ndarray:
    b_n = ks.p_hat.shape[0]
    if b_n == 0:
        return np.empty(0, dtype=np.int8)
    sampled = rng.binomial(1, ks.p_hat).astype(np.int8)
    flip = rng.random(b_n) >= ks.q_stay
    return np.where(flip, 1 - sampled, sampled).astype(np.int8)


def flip_probabilities(prev: Generation) -> np.ndarray:
    """Joint-kernel flip probability per binary coordinate: four times its
    population variance in the previous generation (always in [0, 1])."""
    if not prev.theta_b.size:
        return np.empty(0)
    return 4.0 * prev.theta_b.var(axis=0)


def flip_kernel_propose(prev: Generation, ks: KernelState, spec: PriorSpec,
                        rng: np.random.Generator):
    """Alternative joint kernel: sample a full particle by weight, perturb
    theta_c as usual, flip each binary coordinate with probability
    4 x its population variance in the previous generation."""
    q_flip = flip_probabilities(prev)
    while True:
        idx = rng.choice(prev.M, p=prev.weights)
        theta_c = prev.theta_c[idx] + ks.chol @ rng.standard_normal(spec.c_n)
        if spec.in_support(theta_c):
            break
    theta_b = prev.theta_b[idx]
    if theta_b.size:
        flip = rng.random(theta_b.shape[0]) < q_flip
        theta_b = np.where(flip, 1 - theta_b, theta_b).astype(np.int8)
    return theta_c, theta_b


def gaussian_kernel_density(theta_c: np.ndarray, centers: np.ndarray,
                            chol: np.ndarray) -> np.ndarray:
    """Multivariate normal density of theta_c around each center row."""
    d = chol.shape[0]
    if d == 0:
        return np.ones(centers.shape[0])
    diff = theta_c - centers
    zz = solve_triangular(chol, diff.T, lower=True)
    quad = np.sum(zz ** 2, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return np.exp(-0.5 * (quad + logdet + d * np.log(2.0 * np.pi)))


def update_weight(theta_c: np.ndarray, prev: Generation, ks: KernelState,
                  spec: PriorSpec) -> float:
    """Unnormalized weight: continuous prior density over the kernel mixture."""
    prior = spec.density_c(theta_c)
    if spec.c_n == 0:
        return 1.0
    mix = float(prev.weights @ gaussian_kernel_density(theta_c, prev.theta_c, ks.chol))
    if mix <= 0:
        raise ZeroDivisionError("kernel mixture vanished; should be impossible")
    return prior / mix


def next_threshold(distances: np.ndarray, acceptance_rate: float) -> float:
    """Median of the previous distances, or their 75th percentile when the
    previous acceptance rate fell to 1% or below."""
    distances = np.asarray(distances, float)
    if acceptance_rate > 0.01:
        return float(np.median(distances))
    return float(np.percentile(distances, 75))


def ess(weights) -> float:
    """Effective sample size 1 / sum(w^2) of normalized weights."""
    w = np.asarray(weights, float)
    return float(1.0 / np.sum(w ** 2))


def f1_score(estimated: np.ndarray, truth: np.ndarray) -> float:
    """F1 over directed edges (off-diagonal entries); 1.0 when both empty."""
    est = np.asarray(estimated, dtype=int)
    tru = np.asarray(truth, dtype=int)
    if est.shape != tru.shape:
        raise ValueError("shape mismatch")
    off = ~np.eye(est.shape[0], dtype=bool)
    e, t = est[off], tru[off]
    tp = int(np.sum((e == 1) & (t == 1)))
    fp = int(np.sum((e == 1) & (t == 0)))
    fn = int(np.sum((e == 0) & (t == 1)))
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def posterior_network(gen: Generation, binary_slots, N: int):
    """Edge-wise posterior means and modes of the binary particles.

    Means are unweighted (the binary particles are returned unweighted by
    the algorithm).  Returns (modes, means, weak, undecided) matrices;
    weak flags means inside [1/3, 2/3], undecided flags an exact 0.5 tie.
    Edges outside the inferred slots keep mean NaN and mode 0.
    """
    means = np.full((N, N), np.nan)
    modes = np.zeros((N, N), dtype=int)
    weak = np.zeros((N, N), dtype=bool)
    undecided = np.zeros((N, N), dtype=bool)
    col_means = gen.theta_b.mean(axis=0) if gen.theta_b.size else np.empty(0)
    for (j, k), mu in zip(binary_slots, col_means):
        means[j, k] = mu
        modes[j, k] = 1 if mu > 0.5 else 0
        undecided[j, k] = mu == 0.5
        weak[j, k] = 1.0 / 3.0 <= mu <= 2.0 / 3.0
    return modes, means, weak, undecided


@dataclass(frozen=True)
class ABCConfig:
    M: int = 500
    n_pilot: int = 10_000
    q_stay: float = 0.9
    budget: int = 10_000_000
    stop_rate: float = 0.001
    kernel: str = "independent"  # or "joint_flip"
    delta1: float | None = None  # testing hook; overrides the pilot threshold
    max_iterations: int | None = None

    def __post_init__(self):
        if self.kernel not in ("independent", "joint_flip"):
            raise ValueError(f"unknown kernel {self.kernel!r}")


@dataclass
class RunRecord:
    generations: list
    pilot_distances: np.ndarray
    status: str  # converged | budget_exhausted | stalled | partial | max_iterations
    sims_used: int
    wallclock: list = field(default_factory=list)

    @property
    def final(self) -> Generation:
        return self.generations[-1]


# -- worker-pool plumbing -------------------------------------------------

_WORKER_PROBLEM = None


def _init_worker(problem):
    global _WORKER_PROBLEM
    _WORKER_PROBLEM = problem


def _worker_eval(task):
    theta_c, theta_b, seed = task
    return _WORKER_PROBLEM.distance(theta_c, theta_b, seed)


class _Evaluator:
    """Evaluates proposal batches, serially or on a process pool."""

    def __init__(self, problem, workers: int):
        self.problem = problem
        self.workers = workers
        self.pool = None
        if workers > 1:
            self.pool = ProcessPoolExecutor(
                max_workers=workers, initializer=_init_worker, initargs=(problem,))

    def __call__(self, tasks):
        if self.pool is None:
            return [self.problem.distance(*t) for t in tasks]
        chunk = max(1, len(tasks) // (4 * self.workers))
        return list(self.pool.map(_worker_eval, tasks, chunksize=chunk))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _iter_rng(seed, r: int) -> np.random.Generator:
    """Per-iteration proposal stream; over-drawn proposals in one iteration
    cannot shift the stream of the next."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0, r)))


def _sim_seed(seed, r: int, index: int):
    """Simulation seed keyed by (iteration, proposal index within iteration)
    so accepted particle sets do not depend on batching or worker count."""
    return (int(seed), 7, int(r), int(index))


def pilot_threshold(problem, cfg: ABCConfig, seed=0, workers: int = 1,
                    evaluator=None):
    """Median of n_pilot prior-predictive distances, plus the full sample."""
    if cfg.n_pilot < 2:
        raise ValueError("n_pilot must be at least 2")
    rng = _iter_rng(seed, 0)
    tasks = []
    for i in range(cfg.n_pilot):
        theta_c, theta_b = sample_prior(problem.priors, rng)
        tasks.append((theta_c, theta_b, _sim_seed(seed, 0, i)))
    own = evaluator is None
    if own:
        evaluator = _Evaluator(problem, workers)
    try:
        dists = np.array(evaluator(tasks))
    finally:
        if own:
            evaluator.close()
    return float(np.median(dists)), dists


def run_nsmc_abc(problem, cfg: ABCConfig, seed=0, workers: int = 1) -> RunRecord:
    """Full nSMC-ABC run against ``problem``.

    ``problem`` provides ``priors`` (a PriorSpec) and a picklable
    ``distance(theta_c, theta_b, sim_seed) -> float``.  Accepted particle
    sets are deterministic for a fixed seed independently of the worker
    count; sims_used may vary with batching.
    """
    priors = problem.priors
    evaluator = _Evaluator(problem, workers)
    batch = 8 * max(1, workers)
    sims_used = 0
    generations = []
    wallclock = []
    pilot_dists = np.empty(0)
    status = None
    proposer = propose if cfg.kernel == "independent" else flip_kernel_propose

    try:
        t0 = time.monotonic()
        if cfg.delta1 is not None:
            delta1 = float(cfg.delta1)
        else:
            delta1, pilot_dists = pilot_threshold(problem, cfg, seed=seed,
                                                  evaluator=evaluator)
            sims_used += cfg.n_pilot
        wallclock.append(time.monotonic() - t0)

        r = 1
        threshold = delta1
        prev = None
        ks = None
        while True:
            t0 = time.monotonic()
            rng = _iter_rng(seed, r)
            acc_c, acc_b, acc_d = [], [], []
            proposed = 0          # proposals scanned up to the M-th acceptance
            scanned = 0
            drawn = 0             # proposals generated this iteration
            done = False
            while not done:
                if sims_used >= cfg.budget:
                    break
                n_new = min(batch, cfg.budget - sims_used)
                tasks = []
                for _ in range(n_new):
                    if r == 1:
                        theta_c, theta_b = sample_prior(priors, rng)
                    else:
                        theta_c, theta_b = proposer(prev, ks, priors, rng)
                    tasks.append((theta_c, theta_b, _sim_seed(seed, r, drawn + len(tasks))))
                drawn += n_new
                dists = evaluator(tasks)
                sims_used += n_new
                for (theta_c, theta_b, _), d in zip(tasks, dists):
                    scanned += 1
                    if d < threshold:
                        acc_c.append(theta_c)
                        acc_b.append(theta_b)
                        acc_d.append(d)
                        if len(acc_d) == cfg.M:
                            proposed = scanned
                            done = True
                            break

            if not done:
                status = "budget_exhausted" if generations else "partial"
                break

            theta_c = np.array(acc_c).reshape(cfg.M, priors.c_n)
            theta_b = np.array(acc_b, dtype=np.int8).reshape(cfg.M, priors.b_n)
            distances = np.array(acc_d)
            rate = cfg.M / proposed
            if r == 1:
                weights = np.full(cfg.M, 1.0 / cfg.M)
            else:
                raw = np.array([update_weight(tc, prev, ks, priors) for tc in theta_c])
                weights = raw / raw.sum()
            gen = Generation(theta_c=theta_c, theta_b=theta_b, weights=weights,
                             distances=distances, threshold=threshold, iteration=r,
                             sims_used=sims_used, acceptance_rate=rate)
            generations.append(gen)
            wallclock.append(time.monotonic() - t0)

            if rate < cfg.stop_rate:
                status = "converged"
                break
            if cfg.max_iterations is not None and r >= cfg.max_iterations:
                status = "max_iterations"
                break
            if sims_used >= cfg.budget:
                status = "budget_exhausted"
                break

            new_threshold = next_threshold(distances, rate)
            if not new_threshold < threshold * (1.0 - 1e-9):
                status = "stalled"
                break
            prev = gen
            ks = kernel_state(gen, cfg.q_stay)
            threshold = new_threshold
            r += 1
    finally:
        evaluator.close()

    return RunRecord(generations=generations, pilot_distances=pilot_dists,
                     status=status, sims_used=sims_used, wallclock=wallclock)


@dataclass(frozen=True)
class Envelope:
    """Pointwise min/max/median band over posterior predictive summaries."""

    grid: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    median: np.ndarray
    kind: str


def _envelope(curves) -> Envelope:
    vals = np.array([np.interp(curves[0].grid, c.grid, c.values, left=0.0, right=0.0)
                     for c in curves])
    return Envelope(grid=curves[0].grid, lo=vals.min(axis=0), hi=vals.max(axis=0),
                    median=np.median(vals, axis=0), kind=curves[0].kind)


def posterior_predictive(gen: Generation, n_draws: int, problem, seed=0):
    """Summary envelopes over n_draws weighted posterior simulations.

    ``problem`` must provide ``summaries_for(theta_c, theta_b, sim_seed)``.
    Returns (density envelopes, spectrum envelopes, ccf envelope dict).
    """
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(3,)))
    idx = rng.choice(gen.M, size=n_draws, p=gen.weights)
    sets = [problem.summaries_for(gen.theta_c[i], gen.theta_b[i],
                                  (int(seed), 8, int(n)))
            for n, i in enumerate(idx)]
    N = sets[0].N
    densities = [_envelope([s.densities[k] for s in sets]) for k in range(N)]
    spectra = [_envelope([s.spectra[k] for s in sets]) for k in range(N)]
    ccfs = {key: _envelope([s.ccfs[key] for s in sets]) for key in sets[0].ccfs}
    return densities, spectra, ccfs
