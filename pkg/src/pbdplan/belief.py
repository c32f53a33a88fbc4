"""Kalman / exponential-family Kalman updates and posterior-belief propagation.

A *belief distribution* is the distribution over the Gaussian beliefs that
can result from executing a fixed action sequence, over every observation
sequence that could be received on the way. For linear-Gaussian models it is
a Gaussian over belief means paired with a single, observation-independent
belief covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import DimensionError, LinkEvaluationError, NumericalFailure
from .gaussian import Gaussian, as_matrix, repair_psd, sample_gaussian

GaussianBelief = Gaussian


@dataclass(frozen=True)
class LinearDynamics:
    """s' = A s + B a + eps, eps ~ N(0, P)."""

    A: np.ndarray
    B: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A)
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        P = as_matrix(self.P, A.shape[0])
        if B.shape[0] != A.shape[0]:
            raise DimensionError(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "P", repair_psd(P))

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class LinearGaussianObservation:
    """z = C s + delta, delta ~ N(0, Q)."""

    C: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        Q = as_matrix(self.Q, C.shape[0])
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))


@dataclass(frozen=True)
class ExpFamilyObservation:
    """Exponential-family observation p(z|theta) with theta = link(s).

    ``beta_dot`` and ``beta_ddot`` are the mean and variance of z as functions
    of theta. The carrier term of the density never enters the update.
    """

    link: Callable[[np.ndarray], np.ndarray]
    link_jacobian: Callable[[np.ndarray], np.ndarray]
    beta_dot: Callable[[np.ndarray], np.ndarray]
    beta_ddot: Callable[[np.ndarray], np.ndarray]


ObservationModel = Union[LinearGaussianObservation, ExpFamilyObservation]


@dataclass(frozen=True)
class BeliefDistribution:
    """Gaussian over belief means, N(mean_of_means, cov_of_means), with a shared belief covariance."""

    mean_of_means: np.ndarray
    cov_of_means: np.ndarray
    belief_cov: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean_of_means, dtype=float))
        d = m.shape[0]
        object.__setattr__(self, "mean_of_means", m)
        object.__setattr__(self, "cov_of_means", as_matrix(self.cov_of_means, d))
        object.__setattr__(self, "belief_cov", as_matrix(self.belief_cov, d))

    @classmethod
    def from_belief(cls, b: GaussianBelief) -> "BeliefDistribution":
        return cls(b.mean, np.zeros_like(b.cov), b.cov)

    @property
    def dim(self) -> int:
        return self.mean_of_means.shape[0]

    def marginal(self) -> Gaussian:
        """State marginal N(m, Sigma + Sigma_mu)."""
        return Gaussian(self.mean_of_means, self.belief_cov + self.cov_of_means)


def _action(a, dyn: LinearDynamics) -> np.ndarray:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.shape[0] != dyn.B.shape[1]:
        raise DimensionError(f"action has dim {a.shape[0]}, B expects {dyn.B.shape[1]}")
    return a


def kalman_predict(b: GaussianBelief, a, dyn: LinearDynamics) -> GaussianBelief:
    if b.dim != dyn.dim:
        raise DimensionError(f"belief dim {b.dim} does not match dynamics dim {dyn.dim}")
    a = _action(a, dyn)
    mean = dyn.A @ b.mean + dyn.B @ a
    cov = dyn.A @ b.cov @ dyn.A.T + dyn.P
    return Gaussian(mean, 0.5 * (cov + cov.T))


def _measurement(cov_pred: np.ndarray, H: np.ndarray, R: np.ndarray, R_inv: np.ndarray | None = None):
    """Gain and posterior covariance for a linear measurement with noise R.

    Uses the information form (Sigma_bar^-1 + H^T R^-1 H)^-1, falling back to
    the Joseph form when Sigma_bar is not invertible.
    """
    if H.shape[1] != cov_pred.shape[0]:
        raise DimensionError(f"observation matrix has {H.shape[1]} columns, state dim is {cov_pred.shape[0]}")
    S = H @ cov_pred @ H.T + R
    try:
        K = np.linalg.solve(S.T, (cov_pred @ H.T).T).T
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure("innovation covariance is singular") from exc
    cov = None
    try:
        Lp = np.linalg.cholesky(cov_pred)
        if R_inv is None:
            R_inv = np.linalg.inv(R)
        ident = np.eye(cov_pred.shape[0])
        prec = np.linalg.solve(Lp.T, np.linalg.solve(Lp, ident)) + H.T @ R_inv @ H
        cov = np.linalg.inv(prec)
        if not np.all(np.isfinite(cov)):
            cov = None
    except np.linalg.LinAlgError:
        cov = None
    if cov is None:
        IKH = np.eye(cov_pred.shape[0]) - K @ H
        cov = IKH @ cov_pred @ IKH.T + K @ R @ K.T
    if not np.all(np.isfinite(cov)):
        raise NumericalFailure("posterior covariance is not finite")
    return K, 0.5 * (cov + cov.T)


def kalman_update(b_pred: GaussianBelief, z, obs: LinearGaussianObservation) -> GaussianBelief:
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.shape[0] != obs.C.shape[0]:
        raise DimensionError(f"observation has dim {z.shape[0]}, expected {obs.C.shape[0]}")
    K, cov = _measurement(b_pred.cov, obs.C, obs.Q)
    mean = b_pred.mean + K @ (z - obs.C @ b_pred.mean)
    return Gaussian(mean, cov)


def linearize_exp_family(obs: ExpFamilyObservation, at: np.ndarray):
    """(theta_hat, Y, beta_dot, beta_ddot) at state ``at``."""
    theta = np.atleast_1d(np.asarray(obs.link(at), dtype=float))
    Y = np.atleast_2d(np.asarray(obs.link_jacobian(at), dtype=float))
    bdot = np.atleast_1d(np.asarray(obs.beta_dot(theta), dtype=float))
    bddot = np.atleast_2d(np.asarray(obs.beta_ddot(theta), dtype=float))
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(Y)) and np.all(np.isfinite(bddot))):
        raise LinkEvaluationError("link evaluated to a non-finite value")
    bddot = 0.5 * (bddot + bddot.T)
    try:
        np.linalg.cholesky(bddot)
    except np.linalg.LinAlgError as exc:
        raise LinkEvaluationError("beta_ddot is not positive definite at the linearization point") from exc
    return theta, Y, bdot, bddot


def efkf_update(b_pred: GaussianBelief, z, obs: ExpFamilyObservation) -> GaussianBelief:
    """Exponential-family Kalman measurement update linearized at the predicted mean."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    theta, Y, bdot, bddot = linearize_exp_family(obs, b_pred.mean)
    R = np.linalg.inv(bddot)
    K, cov = _measurement(b_pred.cov, Y, R, R_inv=bddot)
    # projected observation z~ = theta - bddot^-1 (bdot - z)
    z_proj = theta - R @ (bdot - z)
    mean = b_pred.mean + K @ (z_proj - theta)
    return Gaussian(mean, cov)


def measurement_gain(cov_pred: np.ndarray, obs: ObservationModel, at: np.ndarray):
    """Observation-independent (gain, H, posterior covariance) for one step."""
    if isinstance(obs, LinearGaussianObservation):
        K, cov = _measurement(cov_pred, obs.C, obs.Q)
        return K, obs.C, cov
    _, Y, _, bddot = linearize_exp_family(obs, at)
    K, cov = _measurement(cov_pred, Y, np.linalg.inv(bddot), R_inv=bddot)
    return K, Y, cov


def propagate_pbd_step(bd: BeliefDistribution, a, dyn: LinearDynamics, obs: ObservationModel) -> BeliefDistribution:
    """Advance a belief distribution by one primitive action and any observation.

    mean of means  m'  = A m + B a
    spread         S'  = A S A^T + Sigma_bar H^T K^T
    belief cov     Sigma' from the measurement update of Sigma_bar.

    For exponential-family observations the link is linearized at m'.
    """
    if bd.dim != dyn.dim:
        raise DimensionError(f"belief distribution dim {bd.dim} does not match dynamics dim {dyn.dim}")
    a = _action(a, dyn)
    m = dyn.A @ bd.mean_of_means + dyn.B @ a
    cov_pred = dyn.A @ bd.belief_cov @ dyn.A.T + dyn.P
    cov_pred = 0.5 * (cov_pred + cov_pred.T)
    K, H, cov = measurement_gain(cov_pred, obs, m)
    spread = cov_pred @ H.T @ K.T
    com = dyn.A @ bd.cov_of_means @ dyn.A.T + 0.5 * (spread + spread.T)
    return BeliefDistribution(m, 0.5 * (com + com.T), cov)


def _step_models(models, n: int):
    if isinstance(models, tuple) and len(models) == 2 and isinstance(models[0], LinearDynamics):
        return [models] * n
    models = list(models)
    if len(models) != n:
        raise DimensionError(f"got {len(models)} step models for {n} actions")
    return models


def propagate_pbd_macro(b0: GaussianBelief, actions: Sequence, models) -> list[BeliefDistribution]:
    """Belief distribution after each primitive action of an open-loop sequence.

    ``models`` is either one ``(dynamics, observation)`` pair used at every
    step or a sequence with one pair per action.
    """
    actions = list(actions)
    if not actions:
        raise ValueError("macro-action must contain at least one action")
    bd = BeliefDistribution.from_belief(b0)
    out = []
    for a, (dyn, obs) in zip(actions, _step_models(models, len(actions))):
        bd = propagate_pbd_step(bd, a, dyn, obs)
        out.append(bd)
    return out


def closed_form_mean_of_means(m0, actions: Sequence, dyn: LinearDynamics) -> np.ndarray:
    """A^L m0 + sum_i A^(L-i) B a_i, evaluated directly."""
    L = len(actions)
    m = np.linalg.matrix_power(dyn.A, L) @ np.asarray(m0, dtype=float)
    for i, a in enumerate(actions, start=1):
        m = m + np.linalg.matrix_power(dyn.A, L - i) @ dyn.B @ _action(a, dyn)
    return m


def sample_posterior_beliefs(bd: BeliefDistribution, n: int, rng: np.random.Generator) -> list[GaussianBelief]:
    """Draw ``n`` beliefs: means from N(m, S), covariance exactly the shared one."""
    if n < 1:
        raise ValueError("need at least one posterior sample")
    means = sample_gaussian(Gaussian(bd.mean_of_means, bd.cov_of_means), rng, size=n)
    return [Gaussian(mu, bd.belief_cov) for mu in means]
