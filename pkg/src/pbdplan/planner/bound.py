"""Sampling error bound for the forward search value."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidInput


@dataclass(frozen=True)
class BoundInputs:
    gamma: float
    depth: int
    samples: int
    n_macros: int
    delta: float
    v_max: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidInput(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.gamma < 1.0:
            raise InvalidInput(f"discount must lie in (0, 1), got {self.gamma}")
        if self.depth < 1 or self.samples < 1 or self.n_macros < 1:
            raise InvalidInput("depth, samples and macro count must be positive")
        if self.v_max < 0:
            raise InvalidInput("v_max must be non-negative")

    @classmethod
    def with_reward_cap(cls, gamma, depth, samples, n_macros, delta, max_reward):
        """V_max taken as max |r| / (1 - gamma)."""
        return cls(gamma, depth, samples, n_macros, delta, abs(max_reward) / (1.0 - gamma))


def epsilon_bound(b: BoundInputs) -> float:
    """gamma^H V_max + sqrt(V_max^2 / N_s * ln((M N_s)^H / delta)) / (1 - gamma).

    The log is expanded as H ln(M N_s) - ln(delta) so that very large N_s does
    not overflow.
    """
    tail = b.gamma**b.depth * b.v_max
    log_term = b.depth * math.log(b.n_macros * b.samples) - math.log(b.delta)
    return tail + math.sqrt(b.v_max**2 / b.samples * log_term) / (1.0 - b.gamma)
