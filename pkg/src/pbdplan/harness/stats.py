"""Summary statistics for episode returns."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


def mean_and_se(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and standard error (sample stddev / sqrt(n)); one value gives SE 0."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("no values")
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def separated(a: tuple[float, float], b: tuple[float, float], k: float = 2.0) -> bool:
    """True when mean a exceeds mean b by more than k combined standard errors."""
    return a[0] - b[0] > k * math.hypot(a[1], b[1])


@dataclass(frozen=True)
class SummaryRow:
    planner: str
    depth: int
    samples: int
    episodes: int
    mean_return: float
    std_error: float
    mean_decision_time: float
