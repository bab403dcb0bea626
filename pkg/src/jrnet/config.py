"""Flat INI run configuration.

Every tunable lives in one human-editable file with sections [model],
[inference], [simulation], [summary], [abc] and [io].  Unknown keys are
rejected; defaults are the reference implementation constants (M = 500,
n_pilot = 10^4, q_stay = 0.9, stop at 0.1%).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .inference import ABCConfig, PriorSpec
from .model import (Adjacency, Explicit, HemispherePower, ModelParams,
                    PopulationParams, PowerDecay, Slot, ThetaLayout, TwoLevel,
                    Uniform)
from .problem import SimulationConfig
from .summaries import SummaryConfig

__all__ = ["ConfigError", "RunConfig", "load_config"]


class ConfigError(ValueError):
    pass


_KNOWN = {
    "model": {
        "n", "a_gain", "b_gain", "rate_a", "rate_b", "c_total",
        "nu_max", "v0", "slope", "mu", "sigma", "eps",
        "coupling", "coupling_l", "coupling_c", "coupling_l1", "coupling_l2",
        "coupling_matrix", "adjacency",
    },
    "inference": {
        "infer_a", "infer_l", "infer_c", "infer_l1", "infer_l2",
        "infer_mu_groups", "infer_sigma_groups", "infer_edges",
        "prior_a", "prior_l", "prior_c", "prior_l1", "prior_l2",
        "prior_mu", "prior_sigma", "edge_prior",
    },
    "simulation": {"t", "step", "obs_step", "burn_in", "seed"},
    "summary": {"density_points", "spectrum_halfwidth", "lag_max", "taper"},
    "abc": {"m", "n_pilot", "q_stay", "budget", "stop_rate", "kernel",
            "delta1", "max_iterations"},
    "io": {"scale"},
}


@dataclass
class RunConfig:
    model: ModelParams
    layout: ThetaLayout
    priors: PriorSpec
    sim: SimulationConfig
    summary: SummaryConfig
    abc: ABCConfig
    seed: int
    scale: float
    echo: dict = field(default_factory=dict)


def _floats(text: str) -> list:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _broadcast(values, n, name):
    if len(values) == 1:
        return values * n
    if len(values) != n:
        raise ConfigError(f"{name}: expected 1 or {n} values, got {len(values)}")
    return values


def _parse_groups(text: str, n: int, name: str):
    """'1,2|3,4' -> [(0, 1), (2, 3)] with validation."""
    groups = []
    for part in text.split("|"):
        idx = tuple(int(tok) - 1 for tok in part.replace(",", " ").split())
        if not idx:
            raise ConfigError(f"{name}: empty group")
        for i in idx:
            if not 0 <= i < n:
                raise ConfigError(f"{name}: population index out of range")
        groups.append(idx)
    return groups


def _parse_edges(text: str, n: int):
    if text.strip().lower() == "all":
        return [(j, k) for j in range(n) for k in range(n) if j != k]
    edges = []
    for tok in text.replace(",", " ").split():
        j, k = tok.split("-")
        j, k = int(j) - 1, int(k) - 1
        if j == k or not (0 <= j < n and 0 <= k < n):
            raise ConfigError(f"bad edge {tok!r}")
        edges.append((j, k))
    return edges


def _parse_adjacency(text: str, n: int) -> Adjacency:
    rows = [row.strip() for row in text.split(";") if row.strip()]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ConfigError(f"adjacency must be {n} rows of {n} digits")
    return Adjacency(tuple(tuple(int(ch) for ch in row) for row in rows))


def _build_coupling(cp, n):
    kind = cp.get("model", "coupling", fallback="power_decay").strip()
    getf = lambda key, default=None: cp.get("model", key, fallback=default)
    if kind == "power_decay":
        return PowerDecay(L=float(getf("coupling_l", "700")),
                          c=float(getf("coupling_c", "1.0")))
    if kind == "uniform":
        return Uniform(L=float(getf("coupling_l", "700")))
    if kind == "two_level":
        return TwoLevel(L1=float(getf("coupling_l1", "700")),
                        L2=float(getf("coupling_l2", "700")))
    if kind == "hemisphere_power":
        return HemispherePower(L=float(getf("coupling_l", "700")),
                               c=float(getf("coupling_c", "1.0")))
    if kind == "explicit":
        text = getf("coupling_matrix")
        if not text:
            raise ConfigError("explicit coupling requires coupling_matrix")
        rows = [_floats(r) for r in text.split(";") if r.strip()]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ConfigError(f"coupling_matrix must be {n}x{n}")
        K = np.array(rows)
        K[np.eye(n, dtype=bool)] = 1.0  # diagonal unused; keep validator happy
        return Explicit(tuple(map(tuple, K)))
    raise ConfigError(f"unknown coupling variant {kind!r}")


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigError(f"unknown section [{section}]")
        unknown = set(cp[section]) - _KNOWN[section]
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")

    try:
        return _load(cp)
    except (ValueError, KeyError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from err


def _load(cp) -> RunConfig:
    n = cp.getint("model", "n", fallback=1)
    if n < 1:
        raise ConfigError("n must be >= 1")

    def model_vals(key, default):
        text = cp.get("model", key, fallback=None)
        vals = _floats(text) if text else [default]
        return _broadcast(vals, n, key)

    a_gain = model_vals("a_gain", 3.25)
    b_gain = model_vals("b_gain", 22.0)
    rate_a = model_vals("rate_a", 100.0)
    rate_b = model_vals("rate_b", 50.0)
    c_total = model_vals("c_total", 135.0)
    nu_max = model_vals("nu_max", 5.0)
    v0 = model_vals("v0", 6.0)
    slope = model_vals("slope", 0.56)
    mu = model_vals("mu", 90.0)
    sigma = model_vals("sigma", 500.0)
    eps = model_vals("eps", 1.0)

    pops = tuple(
        PopulationParams.with_connectivity(
            c_total[k], A=a_gain[k], B=b_gain[k], a=rate_a[k], b=rate_b[k],
            nu_max=nu_max[k], v0=v0[k], gamma=slope[k], mu=mu[k],
            sigma=sigma[k], eps=eps[k])
        for k in range(n))

    coupling = _build_coupling(cp, n) if n > 1 else None
    adjacency = None
    if n > 1:
        adj_text = cp.get("model", "adjacency", fallback=None)
        adjacency = _parse_adjacency(adj_text, n) if adj_text else Adjacency.zeros(n)
    model = ModelParams(pops=pops, coupling=coupling, adjacency=adjacency)

    # inference layout + priors (slot order: A..., L, L1, L2, c, sigma, mu)
    slots, bounds = [], []
    has_inf = cp.has_section("inference")
    geti = lambda key, default="": cp.get("inference", key, fallback=default) if has_inf else default
    getb = lambda key: has_inf and cp.getboolean("inference", key, fallback=False)

    def prior_pair(key, default):
        vals = _floats(geti(key, default))
        if len(vals) != 2:
            raise ConfigError(f"{key} must be 'lo, hi'")
        return tuple(vals)

    if geti("infer_a"):
        for tok in geti("infer_a").replace(",", " ").split():
            k = int(tok) - 1
            if not 0 <= k < n:
                raise ConfigError("infer_a population out of range")
            slots.append(Slot("A", (k,)))
            bounds.append(prior_pair("prior_a", "2, 4"))
    if getb("infer_l"):
        slots.append(Slot("L"))
        bounds.append(prior_pair("prior_l", "100, 2000"))
    if getb("infer_l1"):
        slots.append(Slot("L1"))
        bounds.append(prior_pair("prior_l1", "100, 2000"))
    if getb("infer_l2"):
        slots.append(Slot("L2"))
        bounds.append(prior_pair("prior_l2", "100, 2000"))
    if getb("infer_c"):
        slots.append(Slot("c"))
        bounds.append(prior_pair("prior_c", "0.5, 1"))
    if geti("infer_sigma_groups"):
        for group in _parse_groups(geti("infer_sigma_groups"), n, "infer_sigma_groups"):
            slots.append(Slot("sigma", group))
            bounds.append(prior_pair("prior_sigma", "100, 15000"))
    if geti("infer_mu_groups"):
        for group in _parse_groups(geti("infer_mu_groups"), n, "infer_mu_groups"):
            slots.append(Slot("mu", group))
            bounds.append(prior_pair("prior_mu", "1, 200"))

    edges = _parse_edges(geti("infer_edges"), n) if geti("infer_edges") else []
    edge_p = float(geti("edge_prior", "0.5"))
    layout = ThetaLayout(continuous=slots, binary=edges)
    priors = PriorSpec(continuous=bounds, binary=(edge_p,) * len(edges))

    sim = SimulationConfig(
        T=cp.getfloat("simulation", "t", fallback=20.0),
        delta=cp.getfloat("simulation", "step", fallback=1e-4),
        obs_step=cp.getfloat("simulation", "obs_step", fallback=2e-3),
        burn_in_fraction=cp.getfloat("simulation", "burn_in", fallback=0.0),
    )
    seed = cp.getint("simulation", "seed", fallback=0)

    def opt_int(section, key):
        text = cp.get(section, key, fallback="").strip()
        return int(text) if text else None

    def opt_float(section, key):
        text = cp.get(section, key, fallback="").strip()
        return float(text) if text else None

    summary = SummaryConfig(
        density_points=cp.getint("summary", "density_points", fallback=512),
        spectrum_halfwidth=opt_int("summary", "spectrum_halfwidth"),
        lag_max=opt_int("summary", "lag_max"),
        taper=cp.getfloat("summary", "taper", fallback=0.1),
    )
    abc = ABCConfig(
        M=cp.getint("abc", "m", fallback=500),
        n_pilot=cp.getint("abc", "n_pilot", fallback=10_000),
        q_stay=cp.getfloat("abc", "q_stay", fallback=0.9),
        budget=cp.getint("abc", "budget", fallback=10_000_000),
        stop_rate=cp.getfloat("abc", "stop_rate", fallback=0.001),
        kernel=cp.get("abc", "kernel", fallback="independent"),
        delta1=opt_float("abc", "delta1"),
        max_iterations=opt_int("abc", "max_iterations"),
    )
    scale = cp.getfloat("io", "scale", fallback=1.0)

    echo = {section: dict(cp[section]) for section in cp.sections()}
    return RunConfig(model=model, layout=layout, priors=priors, sim=sim,
                     summary=summary, abc=abc, seed=seed, scale=scale, echo=echo)
