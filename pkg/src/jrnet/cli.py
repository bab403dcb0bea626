"""Command-line driver: simulate / summarize / infer / score / ppcheck.

The CLI is a thin single-threaded orchestrator; heavy work happens in the
library modules.  Exit codes: 0 success, 1 configuration error, 2 runtime
error, with a one-line ``error: ...`` message on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, load_config
from .inference import (ess, f1_score, posterior_network, posterior_predictive,
                        run_nsmc_abc)
from .integrator import observe_and_subsample, simulate
from .problem import build_problem
from .summaries import compute_summaries


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jrnet")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run configuration (INI)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out-dir", default=".", help="artifact directory")
        p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("simulate", help="simulate a dataset and write a series CSV")
    common(p)

    p = sub.add_parser("summarize", help="compute and export the summary curves")
    common(p)
    p.add_argument("--data", required=True, help="input series CSV")

    p = sub.add_parser("infer", help="run nSMC-ABC against an observed series")
    common(p)
    p.add_argument("--data", required=True, help="observed series CSV")

    p = sub.add_parser("score", help="F1 of an estimated network against a truth file")
    common(p)
    p.add_argument("--estimate", required=True, help="estimated adjacency CSV")
    p.add_argument("--truth", required=True, help="true adjacency CSV")

    p = sub.add_parser("ppcheck", help="posterior predictive summary envelopes")
    common(p)
    p.add_argument("--data", required=True, help="observed series CSV")
    p.add_argument("--run-dir", required=True, help="directory of a completed infer run")
    p.add_argument("--draws", type=int, default=100)
    return parser


def _echo(cfg: RunConfig, args) -> dict:
    echo = {k: dict(v) for k, v in cfg.echo.items()}
    echo.setdefault("simulation", {})["seed"] = str(cfg.seed)
    echo["_cli"] = {"command": args.command, "workers": str(args.workers)}
    return echo


def _cmd_simulate(cfg: RunConfig, args, out: Path) -> int:
    path = simulate(cfg.model, cfg.sim.T, cfg.sim.delta, seed=cfg.seed,
                    burn_in_fraction=cfg.sim.burn_in_fraction)
    series = observe_and_subsample(path, cfg.sim.delta, cfg.sim.obs_step)
    io.write_series(out / "series.csv", series)
    with open(out / "simulate.json", "w") as fh:
        json.dump({"config": _echo(cfg, args)}, fh, indent=2, sort_keys=True)
    print(f"wrote {out / 'series.csv'} "
          f"({series.N} channels, {series.n_points} points, dt={series.dt})")
    return 0


def _cmd_summarize(cfg: RunConfig, args, out: Path) -> int:
    series = io.ingest_csv(args.data, scale=cfg.scale)
    summaries = compute_summaries(series, cfg.summary)
    io.write_summary_set(out, summaries)
    with open(out / "summarize.json", "w") as fh:
        json.dump({"config": _echo(cfg, args), "data": str(args.data)},
                  fh, indent=2, sort_keys=True)
    n_curves = series.N * 2 + series.N * (series.N - 1)
    print(f"wrote {n_curves} summary curves to {out}")
    return 0


def _cmd_infer(cfg: RunConfig, args, out: Path) -> int:
    if cfg.layout.c_n == 0 and cfg.layout.b_n == 0:
        raise ConfigError("nothing to infer: [inference] section defines no slots")
    series = io.ingest_csv(args.data, scale=cfg.scale)
    problem = build_problem(cfg.model, cfg.layout, cfg.priors, series,
                            sim=cfg.sim, summary_cfg=cfg.summary)
    record = run_nsmc_abc(problem, cfg.abc, seed=cfg.seed, workers=args.workers)
    io.write_run_record(out, record, cfg.layout.continuous_names(),
                        cfg.layout.binary_names(), _echo(cfg, args))
    if not record.generations:
        print(f"status={record.status} sims={record.sims_used} (no generation completed)",
              file=sys.stderr)
        return 2
    final = record.final
    if cfg.layout.b_n:
        modes, means, weak, _ = posterior_network(final, cfg.layout.binary, cfg.model.N)
        io.write_adjacency(out / "network_estimate.csv", modes)
        np.savetxt(out / "network_means.csv", means, delimiter=",", fmt="%r")
    post_mean = final.weights @ final.theta_c if cfg.layout.c_n else np.empty(0)
    for name, val in zip(cfg.layout.continuous_names(), post_mean):
        print(f"{name}: posterior mean {val:.6g}")
    print(f"status={record.status} iterations={len(record.generations)} "
          f"sims={record.sims_used} ess={ess(final.weights):.1f}")
    return 0


def _cmd_score(cfg: RunConfig, args, out: Path) -> int:
    est = io.read_adjacency(args.estimate)
    tru = io.read_adjacency(args.truth)
    score = f1_score(est, tru)
    n = est.shape[0]
    print(f"F1 = {score}")
    for j in range(n):
        for k in range(n):
            if j != k and (est[j, k] or tru[j, k]):
                mark = "ok" if est[j, k] == tru[j, k] else ("extra" if est[j, k] else "missed")
                print(f"edge {j + 1}->{k + 1}: estimate={int(est[j, k])} "
                      f"truth={int(tru[j, k])} [{mark}]")
    return 0


def _cmd_ppcheck(cfg: RunConfig, args, out: Path) -> int:
    series = io.ingest_csv(args.data, scale=cfg.scale)
    problem = build_problem(cfg.model, cfg.layout, cfg.priors, series,
                            sim=cfg.sim, summary_cfg=cfg.summary)
    run_dir = Path(args.run_dir)
    with open(run_dir / "run.json") as fh:
        meta = json.load(fh)
    last = meta["iterations"][-1]
    gen = io.read_generation(run_dir / last["file"], cfg.layout.c_n, last)
    densities, spectra, ccfs = posterior_predictive(gen, args.draws, problem,
                                                    seed=cfg.seed)

    def dump(env, name):
        data = np.column_stack([env.grid, env.lo, env.median, env.hi])
        np.savetxt(out / name, data, delimiter=",", fmt="%r",
                   header="grid,lo,median,hi", comments="")

    for k, env in enumerate(densities):
        dump(env, f"ppc_density_{k + 1}.csv")
    for k, env in enumerate(spectra):
        dump(env, f"ppc_spectrum_{k + 1}.csv")
    for (j, k), env in ccfs.items():
        dump(env, f"ppc_ccf_{j + 1}{k + 1}.csv")
    with open(out / "ppcheck.json", "w") as fh:
        json.dump({"config": _echo(cfg, args), "draws": args.draws},
                  fh, indent=2, sort_keys=True)
    print(f"wrote posterior predictive envelopes to {out}")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "summarize": _cmd_summarize,
    "infer": _cmd_infer,
    "score": _cmd_score,
    "ppcheck": _cmd_ppcheck,
}


def run_cli(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as err:
        print(f"error: config: {err}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _COMMANDS[args.command](cfg, args, out)
    except ConfigError as err:
        print(f"error: config: {err}", file=sys.stderr)
        return 1
    except Exception as err:  # runtime failure -> exit 2, one-line stderr
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


def main():
    raise SystemExit(run_cli())


if __name__ == "__main__":
    main()
