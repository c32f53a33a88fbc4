"""Information-search rock sampling.

An agent on an n x n grid decides which rocks to sample. Each rock has a
beacon; binary readings of a rock's value get more reliable the closer the
agent is to that rock's beacon. The agent's position is observed exactly.
Column x = n is the exit: stepping into it ends the episode.

Rock beliefs are independent. The Gaussian belief over each rock value in
[0, 1] is updated with the exponential-family filter for a Bernoulli reading;
the discrete variant keeps the exact Bernoulli posterior.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from ..belief import ExpFamilyObservation
from ..errors import ConfigError, UnsupportedDomain
from ..gaussian import make_rng
from ..planner.adapter import DomainAdapter, MacroAction
from ..rewards import PolynomialReward

MOVES = {"N": (0, 1), "S": (0, -1), "E": (1, 0), "W": (-1, 0)}
SAMPLE = "SAMPLE"
ACTIONS = ("N", "S", "E", "W", SAMPLE)
LINK_CLAMP = 1e-4


@dataclass(frozen=True)
class IsrsSpec:
    n: int
    rocks: tuple
    beacons: tuple
    d0: float | None = None
    r_good: float = 10.0
    r_bad: float = -10.0
    r_exit: float = 5.0
    gamma: float = 0.99
    max_steps: int = 100
    start: tuple | None = None
    prior_mean: float = 0.5
    prior_var: float = 0.25

    def __post_init__(self):
        rocks = tuple(tuple(int(c) for c in r) for r in self.rocks)
        beacons = tuple(tuple(int(c) for c in b) for b in self.beacons)
        object.__setattr__(self, "rocks", rocks)
        object.__setattr__(self, "beacons", beacons)
        if self.n < 1:
            raise ConfigError("grid size must be positive")
        if not rocks:
            raise ConfigError("need at least one rock")
        if len(beacons) != len(rocks):
            raise ConfigError("need exactly one beacon per rock")
        if len(set(rocks)) != len(rocks):
            raise ConfigError("two rocks share a cell")
        for p in rocks + beacons:
            if not (0 <= p[0] < self.n and 0 <= p[1] < self.n):
                raise ConfigError(f"position {p} is outside the {self.n}x{self.n} grid")
        if self.d0 is None:
            object.__setattr__(self, "d0", self.n / 4.0)
        if self.d0 <= 0:
            raise ConfigError("sensor range constant must be positive")
        start = (0, self.n // 2) if self.start is None else tuple(int(c) for c in self.start)
        if not (0 <= start[0] < self.n and 0 <= start[1] < self.n):
            raise ConfigError(f"start {start} is outside the grid")
        object.__setattr__(self, "start", start)

    @property
    def k(self) -> int:
        return len(self.rocks)

    def rock_at(self, pos) -> int | None:
        try:
            return self.rocks.index(tuple(pos))
        except ValueError:
            return None

    def accuracy(self, pos) -> np.ndarray:
        """2^(-d / d0) for the distance d from ``pos`` to every beacon."""
        b = np.asarray(self.beacons, dtype=float)
        d = np.hypot(b[:, 0] - pos[0], b[:, 1] - pos[1])
        return np.exp2(-d / self.d0)


@dataclass(frozen=True)
class IsrsState:
    pos: tuple
    values: tuple
    collected: tuple
    terminated: bool = False


@dataclass(frozen=True)
class IsrsBelief:
    """Agent context plus per-rock Gaussian (means, variances) or Bernoulli probabilities."""

    pos: tuple
    collected: tuple
    terminated: bool
    means: np.ndarray
    variances: np.ndarray | None = None

    @property
    def discrete(self) -> bool:
        return self.variances is None


@dataclass(frozen=True)
class _Ctx:
    pos: tuple
    collected: tuple
    terminated: bool


# -- dynamics ---------------------------------------------------------------------


def _move(spec: IsrsSpec, ctx: _Ctx, action) -> tuple[_Ctx, float, int | None]:
    """Deterministic context transition: (ctx', constant reward, index of rock sampled)."""
    if ctx.terminated:
        return ctx, 0.0, None
    if action == SAMPLE:
        i = spec.rock_at(ctx.pos)
        if i is None or ctx.collected[i]:
            return ctx, 0.0, None
        col = list(ctx.collected)
        col[i] = True
        return replace(ctx, collected=tuple(col)), 0.0, i
    try:
        dx, dy = MOVES[action]
    except KeyError as exc:
        raise ValueError(f"unknown action {action!r}") from exc
    x, y = ctx.pos[0] + dx, ctx.pos[1] + dy
    if x == spec.n and 0 <= y < spec.n:
        return _Ctx((x, y), ctx.collected, True), spec.r_exit, None
    if not (0 <= x < spec.n and 0 <= y < spec.n):
        return ctx, 0.0, None
    return replace(ctx, pos=(x, y)), 0.0, None


def isrs_step(spec: IsrsSpec, state: IsrsState, action, rng=None) -> tuple[IsrsState, float]:
    ctx, r, rock = _move(spec, _Ctx(state.pos, state.collected, state.terminated), action)
    if rock is not None:
        r = spec.r_good if state.values[rock] else spec.r_bad
    return IsrsState(ctx.pos, state.values, ctx.collected, ctx.terminated), r


def isrs_observe(spec: IsrsSpec, state: IsrsState, rng: np.random.Generator) -> np.ndarray:
    """One binary reading per rock: P(z=1) = 0.5 + (s - 0.5) 2^(-d/d0)."""
    f = spec.accuracy(state.pos)
    p1 = 0.5 + (np.asarray(state.values, dtype=float) - 0.5) * f
    return (rng.random(spec.k) < p1).astype(float)


def isrs_links(agent_pos, beacon, d0: float) -> ExpFamilyObservation:
    """Canonical link pieces for one rock's Bernoulli reading, state clamped away from 0 and 1."""
    d = float(np.hypot(beacon[0] - agent_pos[0], beacon[1] - agent_pos[1]))
    f = float(np.exp2(-d / d0))

    def p_of(s):
        s = np.clip(np.asarray(s, dtype=float), LINK_CLAMP, 1 - LINK_CLAMP)
        return 0.5 + (s - 0.5) * f

    def link(s):
        p = p_of(s)
        return np.log(p / (1 - p))

    def jac(s):
        p = p_of(s)
        return np.atleast_2d(f / (p * (1 - p)))

    def bdot(theta):
        return 1.0 / (1.0 + np.exp(-np.asarray(theta, dtype=float)))

    def bddot(theta):
        p = bdot(theta)
        return np.atleast_2d(p * (1 - p))

    return ExpFamilyObservation(link, jac, bdot, bddot)


# -- filtering ----------------------------------------------------------------------


def efkf_rocks(means, variances, f, z=None):
    """Vectorized single-reading update of independent rock beliefs.

    Linearizes at the (clamped) prior mean. With ``z`` None the innovation is
    taken as zero. Returns (means', variances', variance handed to the means).
    """
    m = np.clip(means, LINK_CLAMP, 1 - LINK_CLAMP)
    p = 0.5 + (m - 0.5) * f
    pq = p * (1 - p)
    # Y^2 beta_ddot = f^2 / (p (1 - p))
    info = f * f / pq
    post_var = variances / (1.0 + variances * info)
    if z is None:
        new_means = means
    else:
        gain = variances * f / (1.0 + variances * info)
        new_means = np.clip(means + gain * (z - p) / pq, 0.0, 1.0)
    return new_means, post_var, variances - post_var


def bayes_rocks(probs, f, z):
    """Exact Bernoulli posterior for one reading per rock."""
    l1 = np.where(z > 0.5, 0.5 + 0.5 * f, 0.5 - 0.5 * f)
    l0 = np.where(z > 0.5, 0.5 - 0.5 * f, 0.5 + 0.5 * f)
    num = probs * l1
    den = num + (1 - probs) * l0
    # a reading the belief deems impossible leaves it unchanged
    return np.where(den > 0, num / np.where(den > 0, den, 1.0), probs)


def isrs_reward_model(spec: IsrsSpec, pos, collected) -> PolynomialReward:
    """Sampling reward at ``pos`` as a degree-1 polynomial in the rock values.

    Only SAMPLE on an uncollected rock pays; every other action is zero here
    (the exit bonus is a constant handled by the context transition).
    """
    i = spec.rock_at(pos)
    if i is None or collected[i]:
        return PolynomialReward({})
    e = [0] * spec.k
    e[i] = 1
    return PolynomialReward({SAMPLE: [(spec.r_bad, (0,) * spec.k), (spec.r_good - spec.r_bad, tuple(e))]}, max_order=1)


# -- macros -----------------------------------------------------------------------------


def diagonal_path(start, goal) -> tuple:
    """Shortest path alternating axes, starting with the longer displacement (x on ties)."""
    dx, dy = goal[0] - start[0], goal[1] - start[1]
    xs = ["E" if dx > 0 else "W"] * abs(dx)
    ys = ["N" if dy > 0 else "S"] * abs(dy)
    first, second = (xs, ys) if len(xs) >= len(ys) else (ys, xs)
    out = []
    for i in range(len(first)):
        out.append(first[i])
        if i < len(second):
            out.append(second[i])
    return tuple(out)


@lru_cache(maxsize=4096)
def _macros_cached(spec: IsrsSpec, pos: tuple, collected: tuple) -> tuple:
    goals = [("rock", i, r) for i, r in enumerate(spec.rocks)]
    goals += [("beacon", i, b) for i, b in enumerate(spec.beacons)]
    goals.append(("exit", 0, (spec.n, pos[1])))
    base = []
    for kind, i, g in goals:
        path = diagonal_path(pos, g)
        # already there: sit still for one step (a reading is still taken)
        base.append(MacroAction(path or (SAMPLE,), f"{kind}{i}"))
    rock = spec.rock_at(pos)
    if rock is not None and not collected[rock]:
        base += [MacroAction((SAMPLE,) + m.actions, "sample+" + m.label) for m in base]
    return tuple(base)


def isrs_macros(spec: IsrsSpec, belief: IsrsBelief) -> list[MacroAction]:
    return list(_macros_cached(spec, tuple(belief.pos), tuple(belief.collected)))


# -- planning adapters ------------------------------------------------------------------


class _IsrsAdapterBase(DomainAdapter):
    def __init__(self, spec: IsrsSpec):
        self.spec = spec
        self._plan_cache: dict = {}

    def root(self, belief: IsrsBelief):
        ctx = _Ctx(tuple(belief.pos), tuple(belief.collected), bool(belief.terminated))
        return ctx, self._root_batch(belief)

    def macros(self, ctx, batch):
        return list(_macros_cached(self.spec, ctx.pos, ctx.collected))

    def required_first_actions(self, ctx, batch) -> set:
        i = self.spec.rock_at(ctx.pos)
        return {SAMPLE} if i is not None and not ctx.collected[i] else set()

    def is_terminal(self, ctx) -> bool:
        return ctx.terminated

    def _trace(self, ctx, macro):
        """Context path of a macro: per step (const reward, sampled rock, accuracy after step or None)."""
        key = (ctx, macro.actions)
        hit = self._plan_cache.get(key)
        if hit is not None:
            return hit
        steps = []
        for a in macro.actions:
            if ctx.terminated:
                break
            ctx, r, rock = _move(self.spec, ctx, a)
            steps.append((r, rock, None if ctx.terminated else self.spec.accuracy(ctx.pos)))
        last_dep = max((i for i, s in enumerate(steps) if s[1] is not None), default=-1)
        out = (steps, ctx, last_dep)
        self._plan_cache[key] = out
        return out

    def _sample_value(self, p):
        return self.spec.r_bad + (self.spec.r_good - self.spec.r_bad) * p

    def greedy_candidates(self, ctx, batch):
        return list(ACTIONS)

    def pbd_macro(self, ctx, batch, macro, gamma, need_posterior):
        raise UnsupportedDomain("PBD needs Gaussian rock beliefs")

    def sample_posterior(self, ctx, posterior, n, rng):
        raise UnsupportedDomain("PBD needs Gaussian rock beliefs")

    def nbo_macro(self, ctx, batch, macro, gamma, need_posterior):
        raise UnsupportedDomain("NBO needs Gaussian rock beliefs")


class IsrsAdapter(_IsrsAdapterBase):
    """Gaussian rock beliefs; batch = (means (N, k), variances (N, k))."""

    def _root_batch(self, belief):
        if belief.discrete:
            raise UnsupportedDomain("Gaussian adapter given a discrete belief")
        return np.atleast_2d(belief.means).astype(float), np.atleast_2d(belief.variances).astype(float)

    def batch_size(self, batch) -> int:
        return batch[0].shape[0]

    def split(self, batch):
        m, v = batch
        return [(m[i : i + 1], v[i : i + 1]) for i in range(m.shape[0])]

    def pbd_macro(self, ctx, batch, macro, gamma, need_posterior):
        means, var = batch
        spread = np.zeros_like(means)
        steps, ctx2, last_dep = self._trace(ctx, macro)
        R = np.zeros(means.shape[0])
        for i, (r, rock, f) in enumerate(steps):
            R = R + gamma**i * (r if rock is None else r + self._sample_value(means[:, rock]))
            # readings after the last belief-dependent reward only matter deeper in the tree
            if f is not None and (need_posterior or i < last_dep):
                _, var, inc = efkf_rocks(means, var, f)
                spread = spread + inc
        return R, ctx2, (means, spread, var)

    def sample_posterior(self, ctx, posterior, n, rng):
        means, spread, var = posterior
        m = np.repeat(means, n, axis=0)
        s = np.repeat(spread, n, axis=0)
        m = np.clip(m + np.sqrt(s) * rng.standard_normal(m.shape), 0.0, 1.0)
        return m, np.repeat(var, n, axis=0)

    def mac_macro(self, ctx, batch, macro, gamma, n, rng, need_posterior):
        steps, ctx2, last_dep = self._trace(ctx, macro)
        if not need_posterior and last_dep <= 0:
            # every trajectory earns the same reward; skip the replication
            R, _, _ = self.nbo_macro(ctx, batch, macro, gamma, False)
            return np.repeat(R, n), ctx2, None
        means = np.repeat(batch[0], n, axis=0)
        var = np.repeat(batch[1], n, axis=0)
        R = np.zeros(means.shape[0])
        for i, (r, rock, f) in enumerate(steps):
            R = R + gamma**i * (r if rock is None else r + self._sample_value(means[:, rock]))
            if f is not None and (need_posterior or i < last_dep):
                p1 = 0.5 + (means - 0.5) * f
                z = (rng.random(means.shape) < p1).astype(float)
                means, var, _ = efkf_rocks(means, var, f, z)
        return R, ctx2, (means, var)

    def nbo_macro(self, ctx, batch, macro, gamma, need_posterior):
        means, var = batch
        steps, ctx2, last_dep = self._trace(ctx, macro)
        R = np.zeros(means.shape[0])
        for i, (r, rock, f) in enumerate(steps):
            R = R + gamma**i * (r if rock is None else r + self._sample_value(means[:, rock]))
            if f is not None and (need_posterior or i < last_dep):
                _, var, _ = efkf_rocks(means, var, f)
        return R, ctx2, (means, var)

    def one_step_value(self, ctx, batch, action) -> float:
        _, r, rock = _move(self.spec, ctx, action)
        return float(r if rock is None else r + self._sample_value(batch[0][0, rock]))


class IsrsDiscreteAdapter(_IsrsAdapterBase):
    """Exact Bernoulli rock beliefs; batch = probabilities (N, k)."""

    discrete = True

    def _root_batch(self, belief):
        if not belief.discrete:
            raise UnsupportedDomain("discrete adapter given a Gaussian belief")
        return np.atleast_2d(belief.means).astype(float)

    def batch_size(self, batch) -> int:
        return batch.shape[0]

    def split(self, batch):
        return [batch[i : i + 1] for i in range(batch.shape[0])]

    def mac_macro(self, ctx, batch, macro, gamma, n, rng, need_posterior):
        steps, ctx2, last_dep = self._trace(ctx, macro)
        replicate = need_posterior or last_dep > 0
        probs = np.repeat(batch, n, axis=0) if replicate else batch
        R = np.zeros(probs.shape[0])
        for i, (r, rock, f) in enumerate(steps):
            R = R + gamma**i * (r if rock is None else r + self._sample_value(probs[:, rock]))
            if replicate and f is not None and (need_posterior or i < last_dep):
                p1 = probs * (0.5 + 0.5 * f) + (1 - probs) * (0.5 - 0.5 * f)
                z = (rng.random(probs.shape) < p1).astype(float)
                probs = bayes_rocks(probs, f, z)
        if not replicate:
            return np.repeat(R, n), ctx2, None
        return R, ctx2, probs

    def one_step_value(self, ctx, batch, action) -> float:
        _, r, rock = _move(self.spec, ctx, action)
        return float(r if rock is None else r + self._sample_value(batch[0, rock]))


# -- environment ---------------------------------------------------------------------------


@dataclass
class IsrsDomain:
    """Simulator + belief bookkeeping used by the episode runner."""

    spec: IsrsSpec
    name: str = "isrs"
    _adapters: dict = field(default_factory=dict, repr=False)

    @property
    def gamma(self) -> float:
        return self.spec.gamma

    @property
    def max_steps(self) -> int:
        return self.spec.max_steps

    def initial_state(self, scenario_seed: int) -> IsrsState:
        vals = make_rng(scenario_seed, 0).random(self.spec.k) < 0.5
        return IsrsState(self.spec.start, tuple(int(v) for v in vals), (False,) * self.spec.k)

    def initial_belief(self, state: IsrsState, discrete: bool = False) -> IsrsBelief:
        k = self.spec.k
        if discrete:
            return IsrsBelief(state.pos, state.collected, state.terminated, np.full(k, self.spec.prior_mean))
        return IsrsBelief(
            state.pos, state.collected, state.terminated, np.full(k, self.spec.prior_mean), np.full(k, self.spec.prior_var)
        )

    def adapter(self, discrete: bool = False) -> DomainAdapter:
        if discrete not in self._adapters:
            self._adapters[discrete] = IsrsDiscreteAdapter(self.spec) if discrete else IsrsAdapter(self.spec)
        return self._adapters[discrete]

    def step(self, state, action, rng, belief=None):
        return isrs_step(self.spec, state, action, rng)

    def observe(self, state, rng):
        if state.terminated:
            return None
        return isrs_observe(self.spec, state, rng)

    def update_belief(self, belief: IsrsBelief, action, z, state=None) -> IsrsBelief:
        ctx, _, _ = _move(self.spec, _Ctx(belief.pos, belief.collected, belief.terminated), action)
        if ctx.terminated or z is None:
            return replace(belief, pos=ctx.pos, collected=ctx.collected, terminated=ctx.terminated)
        f = self.spec.accuracy(ctx.pos)
        if belief.discrete:
            return IsrsBelief(ctx.pos, ctx.collected, False, bayes_rocks(belief.means, f, z))
        m, v, _ = efkf_rocks(belief.means, belief.variances, f, z)
        return IsrsBelief(ctx.pos, ctx.collected, False, m, v)

    def is_done(self, state) -> bool:
        return state.terminated

    def describe_action(self, action) -> str:
        return str(action)
