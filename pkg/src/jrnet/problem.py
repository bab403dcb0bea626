"""Binding of the coupled-population model to the ABC machinery.

A JRProblem owns the base model, the theta layout, the priors, the
simulation settings and the observed summaries; it exposes the
``distance`` and ``summaries_for`` callables consumed by the sampler.
Instances are immutable and picklable, so they travel to pool workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .inference import PriorSpec
from .integrator import MultiSeries, observe_and_subsample, simulate
from .model import ModelParams, ThetaLayout, apply_theta
from .summaries import (DistanceWeights, SummaryConfig, SummarySet,
                        calibrate_weights, compute_summaries, distance)

__all__ = ["SimulationConfig", "JRProblem", "build_problem"]


@dataclass(frozen=True)
class SimulationConfig:
    T: float = 20.0
    delta: float = 1e-4
    obs_step: float = 2e-3
    burn_in_fraction: float = 0.0


@dataclass(frozen=True)
class JRProblem:
    base: ModelParams
    layout: ThetaLayout
    priors: PriorSpec
    sim: SimulationConfig
    summary_cfg: SummaryConfig
    obs_summaries: SummarySet
    weights: DistanceWeights

    def model_for(self, theta_c, theta_b) -> ModelParams:
        return apply_theta(self.layout, theta_c, theta_b, self.base)

    def simulate_series(self, theta_c, theta_b, sim_seed) -> MultiSeries:
        m = self.model_for(theta_c, theta_b)
        path = simulate(m, self.sim.T, self.sim.delta, seed=sim_seed,
                        burn_in_fraction=self.sim.burn_in_fraction)
        return observe_and_subsample(path, self.sim.delta, self.sim.obs_step)

    def summaries_for(self, theta_c, theta_b, sim_seed) -> SummarySet:
        series = self.simulate_series(theta_c, theta_b, sim_seed)
        return compute_summaries(series, self.summary_cfg, ref=self.obs_summaries)

    def distance(self, theta_c, theta_b, sim_seed) -> float:
        try:
            sim = self.summaries_for(theta_c, theta_b, sim_seed)
        except FloatingPointError as err:
            raise FloatingPointError(
                f"simulation failed for theta_c={np.asarray(theta_c).tolist()}, "
                f"theta_b={np.asarray(theta_b).tolist()}: {err}") from err
        return distance(self.obs_summaries, sim, self.weights)


def build_problem(base: ModelParams, layout: ThetaLayout, priors: PriorSpec,
                  obs: MultiSeries, sim: SimulationConfig = SimulationConfig(),
                  summary_cfg: SummaryConfig = SummaryConfig()) -> JRProblem:
    """Compute observed summaries, calibrate distance weights, bundle up."""
    if priors.c_n != layout.c_n or priors.b_n != layout.b_n:
        raise ValueError("prior slot counts must match the layout")
    obs_summaries = compute_summaries(obs, summary_cfg)
    if obs.N > 1:
        weights = calibrate_weights(obs_summaries)
    else:
        spec_area = float(np.mean([c.area() for c in obs_summaries.spectra]))
        weights = DistanceWeights(v1=1.0, v2=spec_area, v3=0.0)
    return JRProblem(base=base, layout=layout, priors=priors, sim=sim,
                     summary_cfg=summary_cfg, obs_summaries=obs_summaries,
                     weights=weights)
