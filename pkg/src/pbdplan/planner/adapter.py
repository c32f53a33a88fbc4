"""Contract between the forward search and a domain.

The search works on *batches*: a group of beliefs that share a deterministic
context (for example the fully observed agent position). Batching lets the
per-sample work of a tree level run as one vectorized call. Adapters never
mutate their inputs.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Hashable, Sequence

import numpy as np

from ..errors import UnsupportedDomain


@dataclass(frozen=True)
class MacroAction:
    """Open-loop sequence of hashable primitive actions."""

    actions: tuple
    label: str = ""

    def __post_init__(self):
        acts = tuple(self.actions)
        if not acts:
            raise ValueError("a macro-action needs at least one primitive action")
        object.__setattr__(self, "actions", acts)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def first(self) -> Hashable:
        return self.actions[0]


class DomainAdapter(ABC):
    #: macros depend on the belief, not only on the context; the search then
    #: expands every belief of a batch on its own
    belief_dependent_macros: bool = False
    #: beliefs are exact discrete distributions (enables the MAD baseline)
    discrete: bool = False

    # -- structure ----------------------------------------------------------
    @abstractmethod
    def root(self, belief) -> tuple[Any, Any]:
        """(context, batch of one) for an execution-time belief."""

    @abstractmethod
    def batch_size(self, batch) -> int: ...

    def split(self, batch) -> list:
        raise NotImplementedError

    @abstractmethod
    def macros(self, ctx, batch) -> list[MacroAction]: ...

    def required_first_actions(self, ctx, batch) -> set:
        """Primitive actions that generated macros must start with."""
        return set()

    def is_terminal(self, ctx) -> bool:
        return False

    # -- macro evaluation -----------------------------------------------------
    @abstractmethod
    def pbd_macro(self, ctx, batch, macro: MacroAction, gamma: float, need_posterior: bool):
        """(R (N,), ctx', posterior) with R the expected discounted macro reward."""

    @abstractmethod
    def sample_posterior(self, ctx, posterior, n: int, rng: np.random.Generator):
        """Batch of N*n beliefs; the samples of item i are rows i*n .. i*n+n-1."""

    @abstractmethod
    def mac_macro(self, ctx, batch, macro: MacroAction, gamma: float, n: int, rng, need_posterior: bool):
        """(R (N*n,), ctx', batch') along n sampled observation sequences per belief."""

    @abstractmethod
    def nbo_macro(self, ctx, batch, macro: MacroAction, gamma: float, need_posterior: bool):
        """(R (N,), ctx', batch') for the single most likely observation sequence."""

    def leaf_values(self, ctx, batch, gamma: float, marginal: bool):
        """Optional fast path: best last-level macro value for every belief in ``batch``.

        Returns ``(values (N,), evaluations)`` or None to fall back to one
        macro at a time. ``marginal`` selects PBD (True) or NBO rewards.
        """
        return None

    # -- baselines --------------------------------------------------------------
    def greedy_candidates(self, ctx, batch) -> Sequence[Hashable]:
        seen: dict = {}
        for m in self.macros(ctx, batch):
            seen.setdefault(m.first, None)
        return list(seen)

    def one_step_value(self, ctx, batch, action) -> float:
        raise UnsupportedDomain(f"{type(self).__name__} has no one-step value")

    def target_uncertainties(self, belief) -> np.ndarray:
        raise UnsupportedDomain(f"{type(self).__name__} has no targets")

    def approach_macro(self, belief, target: int) -> MacroAction:
        raise UnsupportedDomain(f"{type(self).__name__} has no targets")

    def at_target(self, belief, target: int) -> bool:
        raise UnsupportedDomain(f"{type(self).__name__} has no targets")
