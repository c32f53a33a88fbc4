"""Seeded episode rollouts and experiment grids."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..gaussian import make_rng
from ..planner.policies import make_policy
from ..planner.search import PlannerConfig, PlannerKind
from .stats import SummaryRow, mean_and_se

# stream ids under an episode seed
_ENV_STREAM = 1
_PLANNER_STREAM = 2


def derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class StepRecord:
    action: str
    reward: float
    plan_time: float


@dataclass
class EpisodeResult:
    planner: str
    scenario: int
    repetition: int
    seed: int
    gamma: float
    discounted_return: float
    steps: list = field(default_factory=list)

    def recomputed_return(self) -> float:
        return math.fsum(self.gamma**t * s.reward for t, s in enumerate(self.steps))

    def check(self, tol: float = 1e-9) -> None:
        if abs(self.recomputed_return() - self.discounted_return) > tol * max(1.0, abs(self.discounted_return)):
            raise AssertionError("discounted return does not match the step log")

    @property
    def mean_plan_time(self) -> float:
        return float(np.mean([s.plan_time for s in self.steps])) if self.steps else 0.0


def run_episode(
    domain,
    cfg: PlannerConfig,
    seed: int,
    scenario: int = 0,
    repetition: int = 0,
    max_steps: int | None = None,
    log=None,
) -> EpisodeResult:
    """Plan, act, observe, update until the episode ends or the step cap is hit.

    The true initial state depends only on ``scenario``; ``seed`` drives the
    simulator noise and the planner's sampling.
    """
    cap = domain.max_steps if max_steps is None else max_steps
    discrete = cfg.kind is PlannerKind.MAD
    state = domain.initial_state(scenario)
    belief = domain.initial_belief(state, discrete=discrete)
    policy = make_policy(domain.adapter(discrete), cfg)
    policy.reset()
    env_rng = make_rng(seed, _ENV_STREAM)
    gamma = domain.gamma
    total = 0.0
    steps = []
    for t in range(cap):
        if domain.is_done(state):
            break
        t0 = time.perf_counter()
        action = policy.act(belief, make_rng(seed, _PLANNER_STREAM, t))
        dt = time.perf_counter() - t0
        state, reward = domain.step(state, action, env_rng, belief)
        z = domain.observe(state, env_rng)
        belief = domain.update_belief(belief, action, z, state)
        total += gamma**t * reward
        steps.append(StepRecord(domain.describe_action(action), float(reward), dt))
        if log is not None:
            log(t, steps[-1], state, belief)
    res = EpisodeResult(cfg.label, scenario, repetition, seed, gamma, total, steps)
    return res


def episode_seed(experiment_seed: int, scenario: int, repetition: int) -> int:
    return derive_seed(experiment_seed, scenario, repetition)


def run_grid(domain, cfg: PlannerConfig, experiment_seed: int, scenarios: int, repetitions: int, max_steps=None):
    """Every (scenario, repetition) pair once, in a fixed order."""
    out = []
    for s in range(scenarios):
        for r in range(repetitions):
            out.append(run_episode(domain, cfg, episode_seed(experiment_seed, s, r), s, r, max_steps))
    return out


def summarize(cfg: PlannerConfig, results: list[EpisodeResult]) -> SummaryRow:
    mean, se = mean_and_se([r.discounted_return for r in results])
    times = [s.plan_time for r in results for s in r.steps]
    return SummaryRow(
        cfg.label,
        cfg.depth,
        cfg.samples,
        len(results),
        mean,
        se,
        float(np.mean(times)) if times else 0.0,
    )
