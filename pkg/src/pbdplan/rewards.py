"""Expected reward of primitive actions under beliefs and belief distributions.

Every state reward r(s, a) is integrated against the state marginal of a
belief distribution, N(m, Sigma + Sigma_mu). Mixture-of-Gaussians and
polynomial rewards have closed forms; anything else is sampled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .belief import BeliefDistribution, LinearDynamics, propagate_pbd_macro
from .errors import DimensionError, UnsupportedOrder
from .gaussian import MOMENT_ORDER_CAP, Gaussian, as_matrix, log_pdf_many, raw_moment, sample_gaussian


def _action_key(a) -> Any:
    if isinstance(a, np.ndarray):
        return tuple(a.ravel().tolist())
    if isinstance(a, list):
        return tuple(a)
    return a


def _pick(per_action, a):
    """Terms for action ``a``: a mapping is looked up by action, anything else is shared."""
    if isinstance(per_action, Mapping):
        return per_action.get(_action_key(a), ())
    if callable(per_action):
        return per_action(a)
    return per_action


@dataclass(frozen=True)
class GaussianMixtureReward:
    """r(s, a) = sum_j w_j N(s | center_j, spread_j).

    ``components`` is a list of ``(weight, center, spread)`` shared by every
    action, a mapping from action to such a list, or a callable of the action.
    """

    components: Any

    def terms(self, a):
        out = []
        for w, c, u in _pick(self.components, a):
            c = np.atleast_1d(np.asarray(c, dtype=float))
            out.append((float(w), c, as_matrix(u, c.shape[0])))
        return out

    def __call__(self, s, a) -> np.ndarray:
        s = np.atleast_2d(np.asarray(s, dtype=float))
        total = np.zeros(s.shape[0])
        for w, c, u in self.terms(a):
            if w:
                total += w * np.exp(log_pdf_many(c, u, s))
        return total


@dataclass(frozen=True)
class PolynomialReward:
    """r(s, a) = sum_j w_j prod_k s_k^alpha_jk, terms given as ``(w, alpha)``."""

    terms_by_action: Any
    max_order: int = MOMENT_ORDER_CAP

    def terms(self, a):
        out = []
        for w, alpha in _pick(self.terms_by_action, a):
            alpha = tuple(int(v) for v in alpha)
            if sum(alpha) > self.max_order:
                raise UnsupportedOrder(f"monomial degree {sum(alpha)} exceeds cap {self.max_order}")
            out.append((float(w), alpha))
        return out

    def __call__(self, s, a) -> np.ndarray:
        s = np.atleast_2d(np.asarray(s, dtype=float))
        total = np.zeros(s.shape[0])
        for w, alpha in self.terms(a):
            total += w * np.prod(s ** np.asarray(alpha, dtype=float), axis=1)
        return total


@dataclass(frozen=True)
class SampledReward:
    """Black-box reward fn(states (N, D), action) -> (N,), integrated by sampling."""

    fn: Callable[[np.ndarray, Any], np.ndarray]
    n_samples: int = 1000

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")

    def __call__(self, s, a) -> np.ndarray:
        return np.asarray(self.fn(np.atleast_2d(np.asarray(s, dtype=float)), a), dtype=float)


Reward = GaussianMixtureReward | PolynomialReward | SampledReward


def _marginal(bd) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(bd, BeliefDistribution):
        return bd.mean_of_means, bd.belief_cov + bd.cov_of_means
    if isinstance(bd, Gaussian):
        return bd.mean, bd.cov
    raise TypeError(f"expected a belief or belief distribution, got {type(bd).__name__}")


def gmm_expectation(means: np.ndarray, cov: np.ndarray, terms) -> np.ndarray:
    """Closed-form E[r] for each row of ``means`` under a shared covariance."""
    means = np.atleast_2d(means)
    total = np.zeros(means.shape[0])
    for w, c, u in terms:
        if c.shape[0] != means.shape[1]:
            raise DimensionError(f"mixture center has dim {c.shape[0]}, state dim is {means.shape[1]}")
        if w:
            total += w * np.exp(log_pdf_many(c, u + cov, means))
    return total


def poly_expectation(means: np.ndarray, cov: np.ndarray, terms, max_order: int = MOMENT_ORDER_CAP) -> np.ndarray:
    means = np.atleast_2d(means)
    total = np.zeros(means.shape[0])
    for w, alpha in terms:
        if w:
            total += w * raw_moment(means, cov, alpha, max_order)
    return total


def expected_reward_gmm(bd, a, r: GaussianMixtureReward) -> float:
    m, cov = _marginal(bd)
    return float(gmm_expectation(m, cov, r.terms(a))[0])


def expected_reward_poly(bd, a, r: PolynomialReward) -> float:
    m, cov = _marginal(bd)
    return float(poly_expectation(m, cov, r.terms(a), r.max_order)[0])


def expected_reward_sampled(bd, a, r: SampledReward, rng: np.random.Generator) -> float:
    m, cov = _marginal(bd)
    s = sample_gaussian(Gaussian(m, cov), rng, size=r.n_samples)
    return float(np.mean(r(s, a)))


def expected_reward(bd, a, r: Reward, rng: np.random.Generator | None = None) -> float:
    if isinstance(r, GaussianMixtureReward):
        return expected_reward_gmm(bd, a, r)
    if isinstance(r, PolynomialReward):
        return expected_reward_poly(bd, a, r)
    if isinstance(r, SampledReward):
        if rng is None:
            raise ValueError("sampled reward needs an rng")
        return expected_reward_sampled(bd, a, r, rng)
    raise TypeError(f"unsupported reward model {type(r).__name__}")


def expected_reward_many(means: np.ndarray, cov: np.ndarray, a, r: Reward, rng=None) -> np.ndarray:
    """Vectorized expected reward for a batch of beliefs with a shared covariance."""
    if isinstance(r, GaussianMixtureReward):
        return gmm_expectation(means, cov, r.terms(a))
    if isinstance(r, PolynomialReward):
        return poly_expectation(means, cov, r.terms(a), r.max_order)
    if isinstance(r, SampledReward):
        if rng is None:
            raise ValueError("sampled reward needs an rng")
        means = np.atleast_2d(means)
        q = sample_gaussian(Gaussian(np.zeros(means.shape[1]), cov), rng, size=r.n_samples)
        return np.array([np.mean(r(mu + q, a)) for mu in means])
    raise TypeError(f"unsupported reward model {type(r).__name__}")


def macro_expected_reward(b0: Gaussian, actions: Sequence, models, reward: Reward, gamma: float, rng=None) -> float:
    """r(b0, a_1) + sum_{i>=2} gamma^(i-1) r(b_dist^(i-1), a_i).

    The reward for action i is taken under the belief distribution reached
    after the first i-1 actions.
    """
    actions = list(actions)
    if not actions:
        raise ValueError("macro-action must contain at least one action")
    total = expected_reward(b0, actions[0], reward, rng)
    if len(actions) == 1 or gamma == 0.0:
        return total
    dists = propagate_pbd_macro(b0, actions[:-1], _prefix_models(models, len(actions)))
    for i, (a, bd) in enumerate(zip(actions[1:], dists), start=1):
        total += gamma**i * expected_reward(bd, a, reward, rng)
    return total


def _prefix_models(models, n: int):
    if isinstance(models, tuple) and len(models) == 2 and isinstance(models[0], LinearDynamics):
        return models
    models = list(models)
    if len(models) != n:
        raise DimensionError(f"got {len(models)} step models for {n} actions")
    return models[: n - 1]
