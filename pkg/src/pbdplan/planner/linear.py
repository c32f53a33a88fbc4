"""Adapter for a generic linear-Gaussian POMDP with a fixed macro set.

Beliefs in a batch share one covariance (it never depends on observations),
so a batch is ``(means (N, D), cov (D, D))``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..belief import LinearDynamics, LinearGaussianObservation, measurement_gain
from ..gaussian import Gaussian, sqrt_factor
from ..rewards import Reward, expected_reward_many
from .adapter import DomainAdapter, MacroAction


class LinearGaussianAdapter(DomainAdapter):
    def __init__(
        self,
        dyn: LinearDynamics,
        obs: LinearGaussianObservation,
        reward: Reward,
        macros: Sequence[MacroAction],
        require_all_first_actions: bool = True,
    ):
        self.dyn = dyn
        self.obs = obs
        self.reward = reward
        self._macros = list(macros)
        self._required = {m.first for m in self._macros} if require_all_first_actions else set()

    # structure
    def root(self, belief: Gaussian):
        return None, (np.atleast_2d(belief.mean).astype(float), belief.cov)

    def batch_size(self, batch) -> int:
        return batch[0].shape[0]

    def split(self, batch):
        means, cov = batch
        return [(means[i : i + 1], cov) for i in range(means.shape[0])]

    def macros(self, ctx, batch):
        return list(self._macros)

    def required_first_actions(self, ctx, batch) -> set:
        return set(self._required)

    # helpers
    def _r(self, means, cov, a) -> np.ndarray:
        return expected_reward_many(means, cov, a, self.reward)

    def _predict(self, means, cov, a):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        means = means @ self.dyn.A.T + self.dyn.B @ a
        cov = self.dyn.A @ cov @ self.dyn.A.T + self.dyn.P
        return means, 0.5 * (cov + cov.T)

    # evaluation
    def pbd_macro(self, ctx, batch, macro, gamma, need_posterior):
        means, cov = batch
        spread = np.zeros_like(cov)
        acts = macro.actions
        R = self._r(means, cov, acts[0])
        steps = len(acts) if need_posterior else len(acts) - 1
        for i in range(steps):
            means, cov_pred = self._predict(means, cov, acts[i])
            spread = self.dyn.A @ spread @ self.dyn.A.T
            K, H, cov = measurement_gain(cov_pred, self.obs, None)
            inc = cov_pred @ H.T @ K.T
            spread = spread + 0.5 * (inc + inc.T)
            if i + 1 < len(acts):
                R = R + gamma ** (i + 1) * self._r(means, cov + spread, acts[i + 1])
        return R, ctx, (means, spread, cov)

    def sample_posterior(self, ctx, posterior, n, rng):
        means, spread, cov = posterior
        N, d = means.shape
        q = rng.standard_normal((N * n, d)) @ sqrt_factor(spread).T
        return np.repeat(means, n, axis=0) + q, cov

    def mac_macro(self, ctx, batch, macro, gamma, n, rng, need_posterior):
        means, cov = batch
        means = np.repeat(means, n, axis=0)
        acts = macro.actions
        R = self._r(means, cov, acts[0])
        steps = len(acts) if need_posterior else len(acts) - 1
        C = self.obs.C
        for i in range(steps):
            means, cov_pred = self._predict(means, cov, acts[i])
            S = C @ cov_pred @ C.T + self.obs.Q
            z = means @ C.T + rng.standard_normal((means.shape[0], C.shape[0])) @ sqrt_factor(S).T
            K, _, cov = measurement_gain(cov_pred, self.obs, None)
            means = means + (z - means @ C.T) @ K.T
            if i + 1 < len(acts):
                R = R + gamma ** (i + 1) * self._r(means, cov, acts[i + 1])
        return R, ctx, (means, cov)

    def nbo_macro(self, ctx, batch, macro, gamma, need_posterior):
        means, cov = batch
        acts = macro.actions
        R = self._r(means, cov, acts[0])
        steps = len(acts) if need_posterior else len(acts) - 1
        for i in range(steps):
            means, cov_pred = self._predict(means, cov, acts[i])
            _, _, cov = measurement_gain(cov_pred, self.obs, None)
            if i + 1 < len(acts):
                R = R + gamma ** (i + 1) * self._r(means, cov, acts[i + 1])
        return R, ctx, (means, cov)

    def one_step_value(self, ctx, batch, action) -> float:
        means, cov = batch
        return float(self._r(means, cov, action)[0])
