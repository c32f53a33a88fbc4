"""Macro-action forward search.

A node value is the best macro Q-value; a macro Q-value is its expected
reward plus the discounted average, over sampled posterior beliefs, of the
child node values. The search is evaluated level by level: all posterior
samples drawn under one macro form a single batch for the next level.

Random streams are keyed by the macro path from the root, so a node's
result does not depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from ..errors import GeneratorContractViolation, InvalidInput, UnsupportedDomain
from ..gaussian import make_rng
from .adapter import DomainAdapter, MacroAction


class PlannerKind(str, Enum):
    PBD = "PBD"
    MAC = "MAC"
    MAD = "MAD"
    NBO = "NBO"
    GREEDY = "GREEDY"
    WT_SINGLE = "WT_SINGLE"
    WT_MACRO = "WT_MACRO"


SEARCH_KINDS = (PlannerKind.PBD, PlannerKind.MAC, PlannerKind.MAD, PlannerKind.NBO)


@dataclass(frozen=True)
class PlannerConfig:
    kind: PlannerKind = PlannerKind.PBD
    gamma: float = 0.99
    depth: int = 2
    samples: int = 10
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.kind, PlannerKind):
            try:
                object.__setattr__(self, "kind", PlannerKind(str(self.kind).upper()))
            except ValueError as exc:
                raise InvalidInput(f"unknown planner kind {self.kind!r}") from exc
        if not 0.0 < self.gamma <= 1.0:
            raise InvalidInput(f"discount must lie in (0, 1], got {self.gamma}")
        if self.depth < 1:
            raise InvalidInput(f"search depth must be at least 1, got {self.depth}")
        if self.samples < 1:
            raise InvalidInput(f"sample count must be at least 1, got {self.samples}")

    @property
    def label(self) -> str:
        if self.kind in SEARCH_KINDS:
            return f"{self.kind.value}-d{self.depth}s{self.samples}"
        return self.kind.value

    def with_(self, **kw) -> "PlannerConfig":
        return replace(self, **kw)


def check_macros(adapter: DomainAdapter, ctx, batch, macros: list[MacroAction]) -> None:
    if not macros:
        raise GeneratorContractViolation("macro generator returned no macro-actions")
    missing = adapter.required_first_actions(ctx, batch) - {m.first for m in macros}
    if missing:
        raise GeneratorContractViolation(f"no macro-action starts with {sorted(map(str, missing))}")


class _Search:
    def __init__(self, adapter: DomainAdapter, cfg: PlannerConfig, seed: int):
        if cfg.kind not in SEARCH_KINDS:
            raise InvalidInput(f"{cfg.kind.value} is not a forward-search planner")
        if cfg.kind is PlannerKind.MAD and not adapter.discrete:
            raise UnsupportedDomain("MAD needs a domain with exact discrete beliefs")
        if cfg.kind is PlannerKind.MAC and adapter.discrete:
            raise UnsupportedDomain("MAC needs Gaussian beliefs; use MAD for discrete beliefs")
        self.a = adapter
        self.cfg = cfg
        self.seed = seed
        self.nodes = 0

    def q(self, macro: MacroAction, ctx, batch, depth: int, path: tuple) -> np.ndarray:
        a, cfg = self.a, self.cfg
        n = a.batch_size(batch)
        if depth == 0:
            return np.zeros(n)
        self.nodes += n
        recurse = depth > 1
        L = len(macro)
        kind = cfg.kind
        if kind is PlannerKind.PBD:
            R, ctx2, post = a.pbd_macro(ctx, batch, macro, cfg.gamma, recurse)
            if not recurse:
                return R
            children = a.sample_posterior(ctx2, post, cfg.samples, make_rng(self.seed, *path))
            future = self.value(ctx2, children, depth - 1, path)
            return R + cfg.gamma**L * future.reshape(n, cfg.samples).mean(axis=1)
        if kind is PlannerKind.NBO:
            R, ctx2, nominal = a.nbo_macro(ctx, batch, macro, cfg.gamma, recurse)
            if not recurse:
                return R
            return R + cfg.gamma**L * self.value(ctx2, nominal, depth - 1, path)
        # MAC / MAD: one return per sampled observation sequence
        R, ctx2, children = a.mac_macro(ctx, batch, macro, cfg.gamma, cfg.samples, make_rng(self.seed, *path), recurse)
        if recurse:
            R = R + cfg.gamma**L * self.value(ctx2, children, depth - 1, path)
        return R.reshape(n, cfg.samples).mean(axis=1)

    def q_table(self, ctx, batch, depth: int, path: tuple) -> tuple[list[MacroAction], np.ndarray]:
        macros = self.a.macros(ctx, batch)
        check_macros(self.a, ctx, batch, macros)
        Q = np.stack([self.q(m, ctx, batch, depth, path + (j,)) for j, m in enumerate(macros)])
        return macros, Q

    def value(self, ctx, batch, depth: int, path: tuple) -> np.ndarray:
        a = self.a
        if depth == 0 or a.is_terminal(ctx):
            return np.zeros(a.batch_size(batch))
        if depth == 1 and self.cfg.kind in (PlannerKind.PBD, PlannerKind.NBO):
            fast = a.leaf_values(ctx, batch, self.cfg.gamma, self.cfg.kind is PlannerKind.PBD)
            if fast is not None:
                self.nodes += fast[1]
                return fast[0]
        if a.belief_dependent_macros and a.batch_size(batch) > 1:
            parts = [self.value(ctx, b, depth, path + (-1 - i,)) for i, b in enumerate(a.split(batch))]
            return np.concatenate(parts)
        return self.q_table(ctx, batch, depth, path)[1].max(axis=0)


def _root_seed(rng) -> int:
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(0, 2**63 - 1))
    return int(rng)


def _expand(kind: PlannerKind, macro, belief, adapter, cfg, depth, rng) -> float:
    if depth < 0:
        raise InvalidInput("depth must be non-negative")
    s = _Search(adapter, cfg.with_(kind=kind), _root_seed(rng))
    ctx, batch = adapter.root(belief)
    if depth == 0:
        return 0.0
    return float(s.q(macro, ctx, batch, depth, (0,))[0])


def pbd_expand(macro, belief, adapter, cfg, depth, rng=0) -> float:
    return _expand(PlannerKind.PBD, macro, belief, adapter, cfg, depth, rng)


def mac_expand(macro, belief, adapter, cfg, depth, rng=0) -> float:
    return _expand(PlannerKind.MAC, macro, belief, adapter, cfg, depth, rng)


def mad_expand(macro, belief, adapter, cfg, depth, rng=0) -> float:
    return _expand(PlannerKind.MAD, macro, belief, adapter, cfg, depth, rng)


def nbo_expand(macro, belief, adapter, cfg, depth) -> float:
    return _expand(PlannerKind.NBO, macro, belief, adapter, cfg, depth, 0)


@dataclass(frozen=True)
class Plan:
    macros: list
    q_values: np.ndarray
    best: int
    nodes: int

    @property
    def action(self):
        return self.macros[self.best].first


def plan(belief, adapter: DomainAdapter, cfg: PlannerConfig, rng=None) -> Plan:
    """Q-value of every root macro; the best is the first maximizer."""
    seed = cfg.seed if rng is None else _root_seed(rng)
    s = _Search(adapter, cfg, seed)
    ctx, batch = adapter.root(belief)
    macros, Q = s.q_table(ctx, batch, cfg.depth, ())
    q = Q[:, 0]
    return Plan(macros, q, int(np.argmax(q)), s.nodes)


def select_action(belief, adapter: DomainAdapter, cfg: PlannerConfig, rng=None):
    return plan(belief, adapter, cfg, rng).action
