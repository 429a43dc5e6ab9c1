"""Window ranks, break-adapted pseudo-observations, empirical copulas.

Pseudo-observations of a window ``k..l`` (1-based, inclusive) are normalised
ranks ``U_i = #{j in window : X_j <= X_i} / (window size + 1)``, computed
coordinate-wise.  The break-adapted variant re-ranks every observation only
against the part of the window that falls inside its own stationarity
segment, which removes marginal change-points from the ranks while keeping
one row per observation.
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import warnings

import numpy as np

from .copulas import MultivariateSample
from .errors import DataError

__all__ = [
    "BreakSpec",
    "PseudoObsBlock",
    "pseudo_obs",
    "pseudo_obs_breaks",
    "empirical_copula",
]


@dataclass(frozen=True)
class BreakSpec:
    """Known marginal break locations as sample fractions.

    ``thetas`` must be strictly increasing inside ``(0, 1)``; the implied
    indices ``m_r = floor(n * theta_r)`` split ``1..n`` into segments
    ``m_{r-1}+1 .. m_r``.  Indices must stay inside ``1..n-1`` and be
    distinct after flooring.
    """

    thetas: tuple[float, ...]
    n: int

    def __post_init__(self) -> None:
        thetas = tuple(float(v) for v in self.thetas)
        object.__setattr__(self, "thetas", thetas)
        if self.n < 2:
            raise DataError("n must be at least 2")
        if not thetas:
            raise DataError("at least one break fraction is required")
        if any(not 0.0 < v < 1.0 for v in thetas):
            raise DataError(f"break fractions must lie in (0, 1), got {thetas}")
        if any(b <= a for a, b in zip(thetas, thetas[1:])):
            raise DataError(f"break fractions must be strictly increasing, got {thetas}")
        idx = self.indices
        if idx[0] < 1 or any(b <= a for a, b in zip(idx, idx[1:])):
            raise DataError(
                f"break fractions {thetas} collapse after flooring with n={self.n}"
            )

    @property
    def indices(self) -> tuple[int, ...]:
        """Last row index of each leading segment, ``floor(n * theta_r)``."""
        return tuple(math.floor(self.n * v) for v in self.thetas)

    @property
    def boundaries(self) -> tuple[int, ...]:
        """Segment boundaries ``(0, m_1, ..., m_R, n)``."""
        return (0,) + self.indices + (self.n,)


@dataclass(frozen=True)
class PseudoObsBlock:
    """Pseudo-observations of one window, with their exact rank fractions.

    ``values[i, j] = numerators[i, j] / denominators[i]``; the integer pair
    is kept so that boundary quantities can be evaluated in exact rational
    arithmetic.  ``k > l`` yields an empty block.
    """

    k: int
    l: int
    values: np.ndarray
    numerators: np.ndarray
    denominators: np.ndarray
    has_ties: bool
    breaks: BreakSpec | None = None

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def _as_values(sample) -> np.ndarray:
    if isinstance(sample, MultivariateSample):
        return sample.values
    values = np.asarray(sample, dtype=float)
    if values.ndim != 2 or values.shape[1] < 2:
        raise DataError(f"sample must be (n, d) with d >= 2, got shape {values.shape}")
    return values


def _rank_window(window: np.ndarray) -> tuple[np.ndarray, bool]:
    """Counts ``#{j : X_j <= X_i}`` per column and a tie flag."""
    n, d = window.shape
    counts = np.empty((n, d), dtype=np.int64)
    ties = False
    for j in range(d):
        col = window[:, j]
        order = np.sort(col)
        counts[:, j] = np.searchsorted(order, col, side="right")
        ties = ties or (np.diff(order) == 0.0).any()
    return counts, ties


def _empty_block(d: int, k: int, l: int, breaks: BreakSpec | None) -> PseudoObsBlock:
    return PseudoObsBlock(
        k=k,
        l=l,
        values=np.empty((0, d)),
        numerators=np.empty((0, d), dtype=np.int64),
        denominators=np.empty(0, dtype=np.int64),
        has_ties=False,
        breaks=breaks,
    )


def pseudo_obs(sample, k: int = 1, l: int | None = None) -> PseudoObsBlock:
    """Pseudo-observations of the window ``k..l`` (1-based, inclusive).

    Parameters
    ----------
    sample : MultivariateSample or (n, d) array_like
    k, l : int
        Window bounds; ``l`` defaults to ``n``.  ``k > l`` gives an empty
        block (callers apply the ``S = 0`` convention themselves).

    Notes
    -----
    Ties are counted through the ``<=`` in the rank definition; a tie flag
    is set on the block and a warning is emitted, since the asymptotics
    assume continuous margins.
    """
    values = _as_values(sample)
    n = values.shape[0]
    if l is None:
        l = n
    if not (1 <= k <= n and 1 <= l <= n):
        raise DataError(f"window {k}..{l} out of range for n={n}")
    if k > l:
        return _empty_block(values.shape[1], k, l, None)
    counts, ties = _rank_window(values[k - 1 : l])
    if ties:
        warnings.warn("ties present in window; rank-based asymptotics assume none")
    m = l - k + 1
    denom = np.full(m, m + 1, dtype=np.int64)
    return PseudoObsBlock(
        k=k,
        l=l,
        values=counts / float(m + 1),
        numerators=counts,
        denominators=denom,
        has_ties=ties,
    )


def pseudo_obs_breaks(
    sample, breaks: BreakSpec, k: int = 1, l: int | None = None
) -> PseudoObsBlock:
    """Break-adapted pseudo-observations of the window ``k..l``.

    Each observation ``i`` is ranked only against rows of the window lying
    in the same segment of ``breaks``, i.e. rows
    ``max(k, m_below(i)+1) .. min(l, m_above(i))`` where ``m_below``/
    ``m_above`` are the nearest segment boundaries around ``i``.  Windows
    contained in a single segment therefore reduce to :func:`pseudo_obs`.
    """
    values = _as_values(sample)
    n = values.shape[0]
    if breaks.n != n:
        raise DataError(f"breaks built for n={breaks.n}, sample has n={n}")
    if l is None:
        l = n
    if not (1 <= k <= n and 1 <= l <= n):
        raise DataError(f"window {k}..{l} out of range for n={n}")
    if k > l:
        return _empty_block(values.shape[1], k, l, breaks)

    bounds = breaks.boundaries
    numerators = np.empty((l - k + 1, values.shape[1]), dtype=np.int64)
    denominators = np.empty(l - k + 1, dtype=np.int64)
    any_ties = False
    for lo, hi in zip(bounds, bounds[1:]):
        a = max(k, lo + 1)
        b = min(l, hi)
        if a > b:
            continue
        counts, ties = _rank_window(values[a - 1 : b])
        any_ties = any_ties or ties
        numerators[a - k : b - k + 1] = counts
        denominators[a - k : b - k + 1] = b - a + 2
    if any_ties:
        warnings.warn("ties present in window; rank-based asymptotics assume none")
    return PseudoObsBlock(
        k=k,
        l=l,
        values=numerators / denominators[:, None].astype(float),
        numerators=numerators,
        denominators=denominators,
        has_ties=any_ties,
        breaks=breaks,
    )


def empirical_copula(block: PseudoObsBlock, u) -> np.ndarray:
    """Empirical copula of a window at points ``u`` in ``[0, 1]^d``.

    ``C(u) = (1/N) sum_i 1{U_i <= u}`` over the block's pseudo-observations;
    an empty block returns 0 everywhere by convention.
    """
    u = np.asarray(u, dtype=float)
    d = block.values.shape[1]
    if u.shape[-1] != d:
        raise DataError(f"u has last dimension {u.shape[-1]}, block has d={d}")
    flat = u.reshape(-1, d)
    if block.n_obs == 0:
        return np.zeros(u.shape[:-1])
    hits = (block.values[None, :, :] <= flat[:, None, :]).all(axis=2)
    return hits.mean(axis=1).reshape(u.shape[:-1])
