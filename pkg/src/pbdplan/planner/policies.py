"""Executable policies: forward search and the simple baselines."""

from __future__ import annotations

from collections import deque

import numpy as np

from .adapter import DomainAdapter
from .search import PlannerConfig, PlannerKind, SEARCH_KINDS, plan


def greedy_policy(belief, adapter: DomainAdapter):
    """Action with the largest expected immediate reward; ties go to the earliest candidate."""
    ctx, batch = adapter.root(belief)
    cands = list(adapter.greedy_candidates(ctx, batch))
    if not cands:
        raise ValueError("no candidate actions")
    vals = np.array([adapter.one_step_value(ctx, batch, a) for a in cands])
    return cands[int(np.argmax(vals))]


def most_uncertain_target(belief, adapter: DomainAdapter) -> int:
    return int(np.argmax(np.asarray(adapter.target_uncertainties(belief))))


def wt_policy(belief, mode: str, adapter: DomainAdapter):
    """First action towards the target whose belief has the largest covariance trace."""
    del mode  # the stateless form is identical for both modes
    return adapter.approach_macro(belief, most_uncertain_target(belief, adapter)).first


class Policy:
    label = "policy"

    def reset(self) -> None:
        pass

    def act(self, belief, rng):
        raise NotImplementedError


class SearchPolicy(Policy):
    def __init__(self, adapter: DomainAdapter, cfg: PlannerConfig):
        self.adapter, self.cfg = adapter, cfg
        self.label = cfg.label
        self.last_plan = None

    def act(self, belief, rng):
        self.last_plan = plan(belief, self.adapter, self.cfg, rng)
        return self.last_plan.action


class GreedyPolicy(Policy):
    label = "GREEDY"

    def __init__(self, adapter: DomainAdapter):
        self.adapter = adapter

    def act(self, belief, rng):
        return greedy_policy(belief, self.adapter)


class WorstTargetPolicy(Policy):
    """Head for the most uncertain target.

    In single mode the target is re-chosen every step. In macro mode the
    approach path is followed open-loop until it has been fully executed.
    """

    def __init__(self, adapter: DomainAdapter, committed: bool):
        self.adapter = adapter
        self.committed = committed
        self.label = "WT_MACRO" if committed else "WT_SINGLE"
        self._queue: deque = deque()
        self.target: int | None = None

    def reset(self) -> None:
        self._queue.clear()
        self.target = None

    def act(self, belief, rng):
        if not self.committed:
            self.target = most_uncertain_target(belief, self.adapter)
            return self.adapter.approach_macro(belief, self.target).first
        if not self._queue:
            self.target = most_uncertain_target(belief, self.adapter)
            self._queue.extend(self.adapter.approach_macro(belief, self.target).actions)
        return self._queue.popleft()


def make_policy(adapter: DomainAdapter, cfg: PlannerConfig) -> Policy:
    if cfg.kind in SEARCH_KINDS:
        return SearchPolicy(adapter, cfg)
    if cfg.kind is PlannerKind.GREEDY:
        return GreedyPolicy(adapter)
    return WorstTargetPolicy(adapter, committed=cfg.kind is PlannerKind.WT_MACRO)
