"""Benchmark the compiled stepping kernel against the pure-NumPy fallback.

Runs identical noise through both implementations, checks they agree to
floating-point tolerance, and reports wall time per simulated path.

Usage: python bench/benchmark_kernels.py [--n-pops 4] [--t 20] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from jrnet import _strang_py
from jrnet.integrator import (KERNEL_IMPL, _kernel, _run_kernel,
                              ou_precompute, path_rng)
from jrnet.model import (Adjacency, ModelParams, PopulationParams, PowerDecay)


def build_model(n_pops: int) -> ModelParams:
    pops = tuple(PopulationParams.with_connectivity(135.0) for _ in range(n_pops))
    if n_pops == 1:
        return ModelParams(pops=pops)
    adj = Adjacency.from_edges(n_pops, [(k, k + 1) for k in range(n_pops - 1)])
    return ModelParams(pops=pops, coupling=PowerDecay(L=700.0, c=1.0),
                       adjacency=adj)


def time_kernel(kern, x0, noise, pre, model, repeats):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = _run_kernel(kern, x0, noise, pre, model)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-pops", type=int, default=4)
    ap.add_argument("--t", type=float, default=20.0)
    ap.add_argument("--delta", type=float, default=1e-4)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    model = build_model(args.n_pops)
    n_steps = int(round(args.t / args.delta))
    dim = 6 * model.N
    noise = path_rng(args.seed).standard_normal((n_steps, dim))
    x0 = np.zeros(dim)
    pre = ou_precompute(model, args.delta)

    print(f"model: {model.N} populations, {n_steps} steps of {args.delta}")
    print(f"selected kernel at import: {KERNEL_IMPL}")

    t_py, out_py = time_kernel(_strang_py, x0, noise, pre, model, args.repeats)
    print(f"pure python : {t_py:8.3f} s/path")

    if KERNEL_IMPL == "compiled":
        t_c, out_c = time_kernel(_kernel, x0, noise, pre, model, args.repeats)
        print(f"compiled    : {t_c:8.3f} s/path  (speedup {t_py / t_c:.1f}x)")
        scale = np.max(np.abs(out_py))
        err = np.max(np.abs(out_c - out_py)) / scale
        assert np.allclose(out_c, out_py, rtol=1e-10, atol=1e-10 * scale), \
            f"kernel outputs disagree (max rel err {err:.3e})"
        print(f"agreement   : max relative difference {err:.3e}")
    else:
        print("compiled kernel unavailable; built fallback only")


if __name__ == "__main__":
    main()
