"""Small dense Gaussian primitives: density, sampling, moments, RNG streams."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb, prod
from typing import Sequence

import numpy as np

from .errors import DimensionError, NumericalFailure, SingularCovariance, UnsupportedOrder

EIGEN_TOL = 1e-10
MOMENT_ORDER_CAP = 10


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed by a 64-bit seed and an integer path.

    The same ``(seed, path)`` always yields the same stream, independent of
    which other streams were created before it.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(p) & 0xFFFFFFFFFFFFFFFF for p in path))
    return np.random.Generator(np.random.Philox(ss))


def as_matrix(m, dim: int | None = None) -> np.ndarray:
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"expected {dim}x{dim} matrix, got {a.shape}")
    return a


def repair_psd(cov, tol: float = EIGEN_TOL) -> np.ndarray:
    """Symmetrize and clamp slightly negative eigenvalues to zero.

    Raises NumericalFailure when the matrix is asymmetric beyond round-off or
    has an eigenvalue below ``-tol`` (relative to its scale).
    """
    c = as_matrix(cov)
    scale = max(1.0, float(np.max(np.abs(c))))
    # round-off asymmetry is folded away; anything larger is a caller bug
    if np.max(np.abs(c - c.T)) > 1e-6 * scale:
        raise NumericalFailure("covariance is not symmetric")
    c = 0.5 * (c + c.T)
    w, v = np.linalg.eigh(c)
    if w.min() >= 0.0:
        return c
    if w.min() < -tol * scale:
        raise NumericalFailure(f"covariance has negative eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.T


@dataclass(frozen=True)
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = as_matrix(self.cov)
        if cov.shape[0] != mean.shape[0]:
            raise DimensionError(f"mean has dim {mean.shape[0]} but cov is {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def _cholesky_pd(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance("covariance is not positive definite") from exc


def log_pdf_many(mean: np.ndarray, cov: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Log density of N(mean, cov) at each row of ``x`` (or each row of ``mean``)."""
    cov = as_matrix(cov)
    d = cov.shape[0]
    L = _cholesky_pd(0.5 * (cov + cov.T))
    diff = np.atleast_2d(np.asarray(x, dtype=float) - np.asarray(mean, dtype=float))
    if diff.shape[-1] != d:
        raise DimensionError(f"point has dim {diff.shape[-1]}, expected {d}")
    sol = np.linalg.solve(L, diff.T)
    maha = np.sum(sol * sol, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return -0.5 * (maha + logdet + d * np.log(2.0 * np.pi))


def gaussian_pdf(g: Gaussian, x) -> float:
    """Density of ``g`` at ``x``; symmetric in (mean, x)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != g.mean.shape:
        raise DimensionError(f"point has shape {x.shape}, expected {g.mean.shape}")
    return float(np.exp(log_pdf_many(g.mean, g.cov, x)[0]))


def sqrt_factor(cov) -> np.ndarray:
    """Matrix A with A @ A.T == cov, for PSD (possibly singular) cov."""
    c = repair_psd(cov)
    if not np.any(c):
        return np.zeros_like(c)
    try:
        return np.linalg.cholesky(c)
    except np.linalg.LinAlgError:
        pass
    w, v = np.linalg.eigh(c)
    w = np.clip(w, 0.0, None)
    a = v * np.sqrt(w)
    if not np.all(np.isfinite(a)):
        raise NumericalFailure("could not factor covariance")
    return a


def sample_gaussian(g: Gaussian, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw mean + A q with cov = A A^T and q standard normal.

    Returns shape ``(dim,)`` when ``size`` is None, else ``(size, dim)``.
    """
    a = sqrt_factor(g.cov)
    n = 1 if size is None else int(size)
    q = rng.standard_normal((n, g.dim))
    out = g.mean + q @ a.T
    return out[0] if size is None else out


# -- moments -----------------------------------------------------------------


def index_from_coords(coords: Sequence[int], dim: int) -> tuple[int, ...]:
    """Convert a coordinate list such as (0, 1, 1) into an exponent vector."""
    alpha = [0] * dim
    for c in coords:
        alpha[c] += 1
    return tuple(alpha)


def _pairing_sum(cov: np.ndarray, alpha: tuple[int, ...]) -> float:
    # memoized on the remaining exponent multiset
    @lru_cache(maxsize=None)
    def rec(a: tuple[int, ...]) -> float:
        total = sum(a)
        if total == 0:
            return 1.0
        if total % 2:
            return 0.0
        i = next(k for k, v in enumerate(a) if v)
        rest = list(a)
        rest[i] -= 1
        acc = 0.0
        # pair the chosen factor with every remaining factor
        for j, count in enumerate(rest):
            if count == 0 or cov[i, j] == 0.0:
                continue
            nxt = rest.copy()
            nxt[j] -= 1
            acc += count * cov[i, j] * rec(tuple(nxt))
        return acc

    return rec(alpha)


def central_moment(cov, index: Sequence[int], max_order: int = MOMENT_ORDER_CAP) -> float:
    """E[prod_k (s_k - mu_k)^index[k]] for s ~ N(mu, cov).

    ``index`` is an exponent vector with one entry per dimension of ``cov``.
    The value is the sum over all perfect matchings of the factors of the
    product of paired covariance entries; odd total order gives zero.
    """
    c = as_matrix(cov)
    alpha = tuple(int(v) for v in index)
    if len(alpha) != c.shape[0]:
        raise DimensionError(f"index has {len(alpha)} entries for a {c.shape[0]}-dim covariance")
    if any(v < 0 for v in alpha):
        raise ValueError("negative exponent in moment index")
    order = sum(alpha)
    if order > max_order:
        raise UnsupportedOrder(f"moment order {order} exceeds cap {max_order}")
    if order % 2:
        return 0.0
    return _pairing_sum(c, alpha)


def raw_moment(mean, cov, index: Sequence[int], max_order: int = MOMENT_ORDER_CAP):
    """E[prod_k s_k^index[k]] via binomial expansion about the mean.

    ``mean`` may be a single vector or an (N, D) array of means sharing ``cov``;
    the result is a float or an (N,) array accordingly.
    """
    m = np.asarray(mean, dtype=float)
    batched = m.ndim == 2
    m = np.atleast_2d(m)
    c = as_matrix(cov, m.shape[1])
    alpha = tuple(int(v) for v in index)
    if len(alpha) != m.shape[1]:
        raise DimensionError(f"index has {len(alpha)} entries for dimension {m.shape[1]}")
    if sum(alpha) > max_order:
        raise UnsupportedOrder(f"moment order {sum(alpha)} exceeds cap {max_order}")
    total = np.zeros(m.shape[0])
    for beta in np.ndindex(*(a + 1 for a in alpha)):
        if sum(beta) % 2:
            continue
        cm = central_moment(c, beta, max_order)
        if cm == 0.0:
            continue
        coef = prod(comb(a, b) for a, b in zip(alpha, beta))
        mono = np.ones(m.shape[0])
        for k in range(len(alpha)):
            if alpha[k] > beta[k]:
                mono = mono * m[:, k] ** (alpha[k] - beta[k])
        total += coef * cm * mono
    return total if batched else float(total[0])
