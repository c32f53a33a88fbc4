"""Aerial target monitoring.

A helicopter moves in a box above a 2-D world and decides every step which
ground targets are inside an interest region. Targets follow noisy unicycle
motion. A downward camera sees targets within a disc whose radius grows with
altitude; measurement noise grows with altitude and with the horizontal
offset between agent and target.

Planning uses a linear surrogate of the target motion (heading frozen at the
belief mean for each step) and an observation covariance averaged over the
predicted target belief. The simulator keeps the nonlinear unicycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from ..errors import ConfigError, InvalidPose
from ..gaussian import Gaussian, make_rng
from ..planner.adapter import DomainAdapter, MacroAction

HOVER = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TargetSpec:
    x: float
    y: float
    heading: float
    speed: float = 1.0
    turn_rate: float = 0.0
    speed_sd: float = 0.2
    turn_sd: float = 0.05
    init_sd_xy: float = 2.0
    init_sd_heading: float = 0.1


@dataclass(frozen=True)
class TmSpec:
    targets: tuple
    regions: tuple
    world: float = 100.0
    h_min: float = 1.0
    h_max: float = 20.0
    start: tuple = (50.0, 50.0, 10.0)
    max_step: float = 5.0
    agent_sd: float = 0.2
    c1: float = 0.05
    c2: float = 0.5
    c3: float = 0.1
    heading_obs_var: float = 0.01
    fov_slope: float = 1.0
    r_correct: float = 10.0
    r_wrong: float = -10.0
    motion_cost: float = 0.1
    altitudes: tuple = (5.0, 15.0)
    hover_steps: int = 4
    dt: float = 1.0
    gamma: float = 0.99
    max_steps: int = 200

    def __post_init__(self):
        targets = tuple(t if isinstance(t, TargetSpec) else TargetSpec(**t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        regions = tuple(tuple(float(v) for v in r) for r in self.regions)
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "start", tuple(float(v) for v in self.start))
        object.__setattr__(self, "altitudes", tuple(float(v) for v in self.altitudes))
        if not targets:
            raise ConfigError("need at least one target")
        if self.c1 < 0 or self.c2 < 0 or self.c3 < 0:
            raise ConfigError("sensor constants must be non-negative")
        if not 0 < self.h_min < self.h_max:
            raise ConfigError("altitude bounds must satisfy 0 < h_min < h_max")
        for x0, y0, x1, y1 in regions:
            if not (0 <= x0 < x1 <= self.world and 0 <= y0 < y1 <= self.world):
                raise ConfigError(f"region {(x0, y0, x1, y1)} is not inside the world")
        for h in self.altitudes:
            if not self.h_min <= h <= self.h_max:
                raise ConfigError(f"macro altitude {h} is outside the altitude bounds")
        if self.max_step <= 0 or self.hover_steps < 1:
            raise ConfigError("max_step and hover_steps must be positive")

    @property
    def n_targets(self) -> int:
        return len(self.targets)

    def _arr(self, name) -> np.ndarray:
        return np.array([getattr(t, name) for t in self.targets], dtype=float)


@dataclass(frozen=True)
class TmState:
    agent: tuple
    targets: np.ndarray  # (T, 3) x, y, heading


@dataclass(frozen=True)
class TmBelief:
    agent: tuple
    means: np.ndarray  # (T, 3)
    cov_xy: np.ndarray  # (T, 2, 2)
    var_heading: np.ndarray  # (T,)

    def target(self, i: int) -> Gaussian:
        c = np.zeros((3, 3))
        c[:2, :2] = self.cov_xy[i]
        c[2, 2] = self.var_heading[i]
        return Gaussian(self.means[i], c)


def wrap_angle(a):
    """Map to (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2 * np.pi)


# -- 2x2 helpers (batched over leading axes) -----------------------------------------


def _inv2(m):
    a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    det = a * d - b * c
    out = np.empty_like(m)
    out[..., 0, 0] = d / det
    out[..., 0, 1] = -b / det
    out[..., 1, 0] = -c / det
    out[..., 1, 1] = a / det
    return out


def _chol2(m):
    """Lower factor of PSD 2x2 matrices; singular inputs allowed."""
    a = np.maximum(m[..., 0, 0], 0.0)
    l11 = np.sqrt(a)
    l21 = np.divide(m[..., 1, 0], l11, out=np.zeros_like(l11), where=l11 > 0)
    l22 = np.sqrt(np.maximum(m[..., 1, 1] - l21 * l21, 0.0))
    out = np.zeros_like(m)
    out[..., 0, 0] = l11
    out[..., 1, 0] = l21
    out[..., 1, 1] = l22
    return out


def _sym(m):
    return 0.5 * (m + np.swapaxes(m, -1, -2))


# -- sensor ----------------------------------------------------------------------------------


def _check_altitude(h: float) -> None:
    if not h > 0:
        raise InvalidPose(f"agent altitude must be positive, got {h}")


def _sensor_cov(spec: TmSpec, ag, xy) -> np.ndarray:
    h = ag[..., 2]
    d = xy - ag[..., :2]
    out = (spec.c2 / h)[..., None, None] * d[..., :, None] * d[..., None, :]
    return out + (spec.c1 * h + spec.c3)[..., None, None] * np.eye(2)


def sensor_cov(spec: TmSpec, agent, target_xy) -> np.ndarray:
    """Noise covariance of an xy reading for a target at ``target_xy`` (broadcasts over leading axes)."""
    _check_altitude(agent[2])
    return _sensor_cov(spec, np.asarray(agent, dtype=float), np.asarray(target_xy, dtype=float))


def expected_sensor_cov(spec: TmSpec, agent, mean_xy, cov_xy) -> np.ndarray:
    """Sensor covariance averaged over a Gaussian target position."""
    ag = np.asarray(agent, dtype=float)
    return _sensor_cov(spec, ag, np.asarray(mean_xy, dtype=float)) + (spec.c2 / ag[..., 2])[..., None, None] * cov_xy


def tm_expected_obs_cov(target_belief: Gaussian, agent_pose, spec: TmSpec) -> np.ndarray:
    _check_altitude(agent_pose[2])
    return expected_sensor_cov(spec, agent_pose, target_belief.mean[:2], target_belief.cov[:2, :2])


def fov_radius(spec: TmSpec, h: float) -> float:
    return spec.fov_slope * h


def in_view(spec: TmSpec, agent, xy) -> np.ndarray:
    ag = np.asarray(agent, dtype=float)
    d = np.asarray(xy, dtype=float)[..., :2] - ag[..., :2]
    return np.hypot(d[..., 0], d[..., 1]) <= spec.fov_slope * ag[..., 2]


def tm_observe(spec: TmSpec, state: TmState, rng: np.random.Generator):
    """Per-target (x, y, heading) reading, or None when the target is out of view."""
    out = []
    for tgt in state.targets:
        if not in_view(spec, state.agent, tgt[:2]):
            out.append(None)
            continue
        L = _chol2(sensor_cov(spec, state.agent, tgt[:2]))
        xy = tgt[:2] + L @ rng.standard_normal(2)
        th = wrap_angle(tgt[2] + math.sqrt(spec.heading_obs_var) * rng.standard_normal())
        out.append(np.array([xy[0], xy[1], float(th)]))
    return out


# -- reporting ----------------------------------------------------------------------------------


def prob_in_regions(spec: TmSpec, mean_xy, var_x, var_y) -> np.ndarray:
    """Mass of N(mean, diag(var)) inside the interest regions (broadcasts)."""
    m = np.asarray(mean_xy, dtype=float)
    sx = np.sqrt(np.maximum(var_x, 1e-300))
    sy = np.sqrt(np.maximum(var_y, 1e-300))
    total = np.zeros(np.broadcast_shapes(m.shape[:-1], np.shape(var_x)))
    for x0, y0, x1, y1 in spec.regions:
        px = ndtr((x1 - m[..., 0]) / sx) - ndtr((x0 - m[..., 0]) / sx)
        py = ndtr((y1 - m[..., 1]) / sy) - ndtr((y0 - m[..., 1]) / sy)
        total = total + px * py
    return np.clip(total, 0.0, 1.0)


def report_value(spec: TmSpec, p_in) -> np.ndarray:
    """Expected reward of the better of report-in / report-out."""
    return np.maximum(0.0, p_in * (spec.r_correct - spec.r_wrong) + spec.r_wrong)


def tm_report(belief: TmBelief, spec: TmSpec) -> tuple[np.ndarray, np.ndarray]:
    """(report-in decisions (T,), expected reward per target (T,))."""
    p = prob_in_regions(spec, belief.means[:, :2], belief.cov_xy[:, 0, 0], belief.cov_xy[:, 1, 1])
    v = p * spec.r_correct + (1 - p) * spec.r_wrong
    return v > 0, np.maximum(v, 0.0)


def inside_regions(spec: TmSpec, xy) -> bool:
    return any(x0 <= xy[0] <= x1 and y0 <= xy[1] <= y1 for x0, y0, x1, y1 in spec.regions)


# -- motion -------------------------------------------------------------------------------------


def _clip_agent(spec: TmSpec, p) -> tuple:
    return (
        float(np.clip(p[0], 0.0, spec.world)),
        float(np.clip(p[1], 0.0, spec.world)),
        float(np.clip(p[2], spec.h_min, spec.h_max)),
    )


def _nominal_agent(spec: TmSpec, agent, action) -> tuple:
    return _clip_agent(spec, (agent[0] + action[0], agent[1] + action[1], agent[2] + action[2]))


def _advance(spec: TmSpec, ag: np.ndarray, step) -> np.ndarray:
    out = ag + step
    return np.clip(out, [0.0, 0.0, spec.h_min], [spec.world, spec.world, spec.h_max])


def motion_reward(spec: TmSpec, action):
    return -spec.motion_cost * np.linalg.norm(np.asarray(action, dtype=float), axis=-1)


def _reflect(v, hi):
    v = np.where(v < 0, -v, v)
    return np.where(v > hi, 2 * hi - v, v)


def tm_step(spec: TmSpec, state: TmState, action, rng: np.random.Generator, reports=None) -> tuple[TmState, float]:
    """Advance agent and targets one step.

    Reward is the report outcome for the current (pre-move) true target
    positions plus the motion cost of the commanded displacement.
    """
    reward = motion_reward(spec, action)
    if reports is not None:
        for rep, tgt in zip(reports, state.targets):
            if rep:
                reward += spec.r_correct if inside_regions(spec, tgt[:2]) else spec.r_wrong
    a = np.asarray(action, dtype=float) + spec.agent_sd * rng.standard_normal(3)
    agent = _clip_agent(spec, np.asarray(state.agent) + a)
    T = spec.n_targets
    v = spec._arr("speed") + spec._arr("speed_sd") * rng.standard_normal(T)
    w = spec._arr("turn_rate") + spec._arr("turn_sd") * rng.standard_normal(T)
    tg = state.targets
    th = tg[:, 2]
    x = tg[:, 0] + v * np.cos(th) * spec.dt
    y = tg[:, 1] + v * np.sin(th) * spec.dt
    th = th + w * spec.dt
    # bounce off the world edges
    hit_x = (x < 0) | (x > spec.world)
    hit_y = (y < 0) | (y > spec.world)
    th = np.where(hit_x, np.pi - th, th)
    th = np.where(hit_y, -th, th)
    x, y = _reflect(x, spec.world), _reflect(y, spec.world)
    return TmState(agent, np.stack([x, y, wrap_angle(th)], axis=1)), reward


# -- belief propagation (batched over leading axes) --------------------------------------------


_GH1 = np.array([-math.sqrt(3.0), 0.0, math.sqrt(3.0)])
_GH1_W = np.array([1 / 6, 2 / 3, 1 / 6])
_GH_NODES = [(u, v) for u in _GH1 for v in _GH1]
_GH_WEIGHTS = [wu * wv for wu in _GH1_W for wv in _GH1_W]


class _Model:
    """Vectorized linear surrogate shared by planning and execution."""

    def __init__(self, spec: TmSpec):
        self.spec = spec
        self.v = spec._arr("speed")
        self.w = spec._arr("turn_rate")
        self.sv2 = spec._arr("speed_sd") ** 2
        self.sw2 = spec._arr("turn_sd") ** 2

    def predict(self, means, cxy, cth):
        dt = self.spec.dt
        th = means[..., 2]
        c, s = np.cos(th), np.sin(th)
        step = np.stack([self.v * c * dt, self.v * s * dt, np.broadcast_to(self.w * dt, th.shape)], axis=-1)
        u = np.stack([c, s], axis=-1)
        n = np.stack([-s, c], axis=-1)
        P = dt * dt * (
            self.sv2[..., None, None] * u[..., :, None] * u[..., None, :]
            + (self.v**2 * cth)[..., None, None] * n[..., :, None] * n[..., None, :]
        )
        return means + step, cxy + P, cth + self.sw2 * dt * dt

    def gains(self, agent, means_pred, cxy_pred, cth_pred, noise_xy=None):
        """Visibility, xy gain, heading gain and posterior covariances for one reading."""
        spec = self.spec
        ag = np.asarray(agent, dtype=float)[..., None, :]
        vis = in_view(spec, ag, means_pred)
        if noise_xy is None:
            noise_xy = expected_sensor_cov(spec, ag, means_pred[..., :2], cxy_pred)
        K = cxy_pred @ _inv2(cxy_pred + noise_xy)
        K = np.where(vis[..., None, None], K, 0.0)
        inc_xy = _sym(K @ cxy_pred)
        kth = np.where(vis, cth_pred / (cth_pred + spec.heading_obs_var), 0.0)
        inc_th = kth * cth_pred
        return vis, K, kth, cxy_pred - inc_xy, cth_pred - inc_th, inc_xy, inc_th

    def report(self, means, var_x, var_y):
        return report_value(self.spec, prob_in_regions(self.spec, means[..., :2], var_x, var_y)).sum(axis=-1)

    def report_spread(self, means, cxy, spread_xy):
        """Expected report value when the belief mean is itself N(means, spread_xy).

        The report is chosen per realized belief, so the value is averaged over
        a 3x3 Gauss-Hermite grid on the mean rather than taken at the marginal.
        """
        L = _chol2(spread_xy)
        var_x, var_y = cxy[..., 0, 0], cxy[..., 1, 1]
        total = 0.0
        for (u, v), w in zip(_GH_NODES, _GH_WEIGHTS):
            off = L[..., :, 0] * u + L[..., :, 1] * v
            p = prob_in_regions(self.spec, means[..., :2] + off, var_x, var_y)
            total = total + w * report_value(self.spec, p)
        return total.sum(axis=-1)


def tm_belief_update(belief: TmBelief, action, observation, spec: TmSpec, model: _Model | None = None) -> TmBelief:
    """Process update, then a Kalman update for every target that was seen.

    The reading's noise covariance is evaluated at the reading itself since the
    true target position is unknown.
    """
    model = model or _Model(spec)
    agent = _nominal_agent(spec, belief.agent, action) if observation is None else observation[0]
    obs = None if observation is None else observation[1]
    means, cxy, cth = model.predict(belief.means, belief.cov_xy, belief.var_heading)
    means, cxy, cth = means.copy(), cxy.copy(), cth.copy()
    if obs is not None:
        for i, z in enumerate(obs):
            if z is None:
                continue
            R = sensor_cov(spec, agent, z[:2])
            S = cxy[i] + R
            K = cxy[i] @ np.linalg.inv(S)
            means[i, :2] = means[i, :2] + K @ (z[:2] - means[i, :2])
            cxy[i] = _sym((np.eye(2) - K) @ cxy[i])
            k = cth[i] / (cth[i] + spec.heading_obs_var)
            means[i, 2] = means[i, 2] + k * wrap_angle(z[2] - means[i, 2])
            cth[i] = (1 - k) * cth[i]
    means[:, 2] = wrap_angle(means[:, 2])
    return TmBelief(agent, means, cxy, cth)


# -- macros ------------------------------------------------------------------------------------


def goto_macro(spec: TmSpec, agent, goal, label: str = "") -> MacroAction:
    d = np.asarray(goal, dtype=float) - np.asarray(agent, dtype=float)
    dist = float(np.linalg.norm(d))
    n = max(1, math.ceil(dist / spec.max_step - 1e-9))
    step = tuple(float(v) for v in d / n)
    return MacroAction((step,) * n, label)


def tm_macros(belief: TmBelief, spec: TmSpec) -> list[MacroAction]:
    out = []
    for i, m in enumerate(belief.means):
        for h in spec.altitudes:
            goal = _clip_agent(spec, (m[0], m[1], h))
            out.append(goto_macro(spec, belief.agent, goal, f"target{i}@{h:g}"))
    out.append(MacroAction((HOVER,) * spec.hover_steps, "hover"))
    return out


def axis_moves(spec: TmSpec) -> list[tuple]:
    s = spec.max_step
    return [(s, 0.0, 0.0), (-s, 0.0, 0.0), (0.0, s, 0.0), (0.0, -s, 0.0), (0.0, 0.0, s), (0.0, 0.0, -s)]


# -- planning adapter ------------------------------------------------------------------------------


class TargetMonitorAdapter(DomainAdapter):
    """Batch = (means (N, T, 3), cov_xy (N, T, 2, 2), var_heading (N, T)); context = agent pose."""

    belief_dependent_macros = True

    def __init__(self, spec: TmSpec):
        self.spec = spec
        self.model = _Model(spec)

    def root(self, belief: TmBelief):
        return tuple(belief.agent), (belief.means[None], belief.cov_xy[None], belief.var_heading[None])

    def batch_size(self, batch) -> int:
        return batch[0].shape[0]

    def split(self, batch):
        m, c, t = batch
        return [(m[i : i + 1], c[i : i + 1], t[i : i + 1]) for i in range(m.shape[0])]

    def _belief(self, ctx, batch) -> TmBelief:
        return TmBelief(ctx, batch[0][0], batch[1][0], batch[2][0])

    def macros(self, ctx, batch):
        return tm_macros(self._belief(ctx, batch), self.spec)

    def required_first_actions(self, ctx, batch) -> set:
        return {HOVER}

    def _run(self, ctx, batch, macro, gamma, mode, n=1, rng=None):
        means, cxy, cth = batch
        if mode == "mac" and n > 1:
            means, cxy, cth = (np.repeat(x, n, axis=0) for x in (means, cxy, cth))
        spread_xy = np.zeros_like(cxy)
        spread_th = np.zeros_like(cth)
        R = np.zeros(means.shape[0])
        agent = np.asarray(ctx, dtype=float)
        model = self.model
        for i, a in enumerate(macro.actions):
            if i == 0 or mode not in ("pbd", "leaf"):
                rep = model.report(means, cxy[..., 0, 0], cxy[..., 1, 1])
            else:
                rep = model.report_spread(means, cxy, spread_xy)
            R = R + gamma**i * (rep + motion_reward(self.spec, a))
            if i == len(macro) - 1 and mode == "leaf":
                break
            agent = _advance(self.spec, agent, a)
            means, cxy_p, cth_p = model.predict(means, cxy, cth)
            vis, K, kth, cxy, cth, inc_xy, inc_th = model.gains(agent, means, cxy_p, cth_p)
            if mode in ("pbd", "leaf"):
                spread_xy = spread_xy + inc_xy
                spread_th = spread_th + inc_th
            elif mode == "mac":
                # reading drawn from the predictive distribution of each trajectory
                noise = expected_sensor_cov(self.spec, agent[None, :], means[..., :2], cxy_p)
                L = _chol2(cxy_p + noise)
                innov_xy = np.einsum("...ij,...j->...i", L, rng.standard_normal(means[..., :2].shape))
                innov_th = np.sqrt(cth_p + self.spec.heading_obs_var) * rng.standard_normal(cth_p.shape)
                means = means.copy()
                means[..., :2] += np.einsum("...ij,...j->...i", K, innov_xy)
                means[..., 2] += kth * innov_th
        return R, agent, (means, cxy, cth, spread_xy, spread_th)

    def pbd_macro(self, ctx, batch, macro, gamma, need_posterior):
        R, agent, post = self._run(ctx, batch, macro, gamma, "pbd" if need_posterior else "leaf")
        return R, agent, post

    def leaf_values(self, ctx, batch, gamma, marginal):
        """All macros for all beliefs at once, padded to the longest macro."""
        spec, model = self.spec, self.model
        means, cxy, cth = batch
        N, T = means.shape[:2]
        agent = np.asarray(ctx, dtype=float)
        alts = np.array(spec.altitudes)
        goals = np.empty((N, T, len(alts), 3))
        goals[..., :2] = np.clip(means[:, :, None, :2], 0.0, spec.world)
        goals[..., 2] = alts
        d = (goals - agent).reshape(N, -1, 3)
        lengths = np.maximum(1, np.ceil(np.linalg.norm(d, axis=-1) / spec.max_step - 1e-9)).astype(int)
        steps = np.concatenate([d / lengths[..., None], np.zeros((N, 1, 3))], axis=1)
        lengths = np.concatenate([lengths, np.full((N, 1), spec.hover_steps)], axis=1)
        M = steps.shape[1]
        means, cxy, cth = means[:, None], cxy[:, None], cth[:, None]
        spread_xy = np.zeros_like(cxy)
        ag = np.broadcast_to(agent, (N, M, 3))
        cost = motion_reward(spec, steps)
        R = np.zeros((N, M))
        L = int(lengths.max())
        for i in range(L):
            if i == 0 or not marginal:
                rep = model.report(means, cxy[..., 0, 0], cxy[..., 1, 1])
            else:
                rep = model.report_spread(means, cxy, spread_xy)
            R = R + np.where(i < lengths, gamma**i * (rep + cost), 0.0)
            if i == L - 1:
                break
            ag = _advance(spec, ag, steps)
            means, cxy_p, cth_p = model.predict(means, cxy, cth)
            _, _, _, cxy, cth, inc_xy, _ = model.gains(ag, means, cxy_p, cth_p)
            if marginal:
                spread_xy = spread_xy + inc_xy
        return R.max(axis=1), N * M

    def sample_posterior(self, ctx, posterior, n, rng):
        means, cxy, cth, sxy, sth = posterior
        rep = lambda x: np.repeat(x, n, axis=0)
        means, cxy, cth, sxy, sth = map(rep, (means, cxy, cth, sxy, sth))
        q = rng.standard_normal(means.shape)
        means = means.copy()
        means[..., :2] += np.einsum("...ij,...j->...i", _chol2(sxy), q[..., :2])
        means[..., 2] += np.sqrt(np.maximum(sth, 0.0)) * q[..., 2]
        return means, cxy, cth

    def mac_macro(self, ctx, batch, macro, gamma, n, rng, need_posterior):
        R, agent, post = self._run(ctx, batch, macro, gamma, "mac", n, rng)
        return R, agent, post[:3]

    def nbo_macro(self, ctx, batch, macro, gamma, need_posterior):
        R, agent, post = self._run(ctx, batch, macro, gamma, "nbo")
        return R, agent, post[:3]

    def greedy_candidates(self, ctx, batch):
        seen = {HOVER: None}
        for a in axis_moves(self.spec):
            seen.setdefault(a, None)
        for m in self.macros(ctx, batch):
            seen.setdefault(m.first, None)
        return list(seen)

    def one_step_value(self, ctx, batch, action) -> float:
        """Motion cost plus the report value of the nominal belief after the action."""
        agent = _advance(self.spec, np.asarray(ctx, dtype=float), action)
        means, cxy_p, cth_p = self.model.predict(*batch)
        _, _, _, cxy, _, _, _ = self.model.gains(agent, means, cxy_p, cth_p)
        return float(motion_reward(self.spec, action) + self.model.report(means, cxy[..., 0, 0], cxy[..., 1, 1])[0])

    def target_uncertainties(self, belief: TmBelief) -> np.ndarray:
        return np.trace(belief.cov_xy, axis1=-2, axis2=-1) + belief.var_heading

    def approach_macro(self, belief: TmBelief, target: int) -> MacroAction:
        m = belief.means[target]
        goal = _clip_agent(self.spec, (m[0], m[1], self.spec.altitudes[0]))
        return goto_macro(self.spec, belief.agent, goal, f"target{target}")


# -- environment -------------------------------------------------------------------------------------


@dataclass
class TargetMonitorDomain:
    spec: TmSpec
    name: str = "target_monitor"
    _adapter: TargetMonitorAdapter | None = field(default=None, repr=False)

    @property
    def gamma(self) -> float:
        return self.spec.gamma

    @property
    def max_steps(self) -> int:
        return self.spec.max_steps

    def initial_state(self, scenario_seed: int) -> TmState:
        """True target poses drawn around the configured starts; the belief starts at the configured values."""
        rng = make_rng(scenario_seed, 0)
        sd_xy = self.spec._arr("init_sd_xy")
        sd_th = self.spec._arr("init_sd_heading")
        base = np.stack([self.spec._arr("x"), self.spec._arr("y"), self.spec._arr("heading")], axis=1)
        noise = rng.standard_normal(base.shape) * np.stack([sd_xy, sd_xy, sd_th], axis=1)
        tg = base + noise
        tg[:, :2] = np.clip(tg[:, :2], 0.0, self.spec.world)
        tg[:, 2] = wrap_angle(tg[:, 2])
        return TmState(self.spec.start, tg)

    def initial_belief(self, state: TmState, discrete: bool = False) -> TmBelief:
        if discrete:
            from ..errors import UnsupportedDomain

            raise UnsupportedDomain("target monitoring has no discrete belief")
        s = self.spec
        means = np.stack([s._arr("x"), s._arr("y"), s._arr("heading")], axis=1)
        cxy = np.eye(2)[None] * (s._arr("init_sd_xy") ** 2)[:, None, None]
        return TmBelief(tuple(state.agent), means, cxy, s._arr("init_sd_heading") ** 2)

    def adapter(self, discrete: bool = False) -> TargetMonitorAdapter:
        if discrete:
            from ..errors import UnsupportedDomain

            raise UnsupportedDomain("MAD is not available for target monitoring")
        if self._adapter is None:
            self._adapter = TargetMonitorAdapter(self.spec)
        return self._adapter

    def step(self, state, action, rng, belief=None):
        reports = None if belief is None else tm_report(belief, self.spec)[0]
        return tm_step(self.spec, state, action, rng, reports)

    def observe(self, state, rng):
        return state.agent, tm_observe(self.spec, state, rng)

    def update_belief(self, belief, action, z, state=None):
        return tm_belief_update(belief, action, z, self.spec, self.adapter().model)

    def is_done(self, state) -> bool:
        return False

    def describe_action(self, action) -> str:
        return "(" + ",".join(f"{v:.3f}" for v in action) + ")"
