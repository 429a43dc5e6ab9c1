"""CUSUM statistics built from window Pickands estimates.

The two-sided comparison at split ``k`` is

``D(k/n, t) = k (n-k) / n**1.5 * (A_{1..k}(t) - A_{k+1..n}(t))``

aggregated over a finite measure on the simplex:
``S = max_{1 <= k < n} sum_t w(t) D(k/n, t)**2``.  The break-adapted
variant uses the same field with break-adapted pseudo-observations.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DataError
from .pickands import _ahat_grid
from .ranks import BreakSpec, pseudo_obs, pseudo_obs_breaks, _as_values

__all__ = [
    "GridMeasure",
    "default_measure",
    "CusumField",
    "cusum_field",
    "statistic_max",
    "statistic_at",
    "field_table",
]


@dataclass(frozen=True)
class GridMeasure:
    """A finite measure on the simplex: support points plus weights.

    ``points`` holds trailing simplex coordinates, shape ``(T, d-1)``;
    ``weights`` are nonnegative with positive total mass.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        raw = np.asarray(self.points, dtype=float)
        # a 1-d input is a list of bivariate coordinates
        points = raw.reshape(-1, 1) if raw.ndim == 1 else raw
        if points.ndim != 2:
            raise DataError(f"points must be (T,) or (T, d-1), got shape {raw.shape}")
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (points.shape[0],):
            raise DataError("weights must have one entry per grid point")
        if (weights < 0.0).any() or not weights.sum() > 0.0:
            raise DataError("weights must be nonnegative with positive mass")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def d(self) -> int:
        return self.points.shape[1] + 1

    @property
    def size(self) -> int:
        return self.points.shape[0]


def default_measure(d: int = 2, step: float = 0.1) -> GridMeasure:
    """Uniform weights on the interior simplex lattice with the given step.

    For ``d = 2`` this is the nine-point grid ``{0.1, ..., 0.9}`` with mass
    ``1/9`` each; in general all lattice points whose full coordinates are
    at least ``step``.
    """
    if d < 2:
        raise DataError("d must be >= 2")
    levels = int(round(1.0 / step))
    pts = []
    for combo in product(range(1, levels), repeat=d - 1):
        if sum(combo) <= levels - 1:
            # divide rather than multiply by step: 3/10 is exactly 0.3
            pts.append([c / levels for c in combo])
    points = np.asarray(pts)
    return GridMeasure(points=points, weights=np.full(len(pts), 1.0 / len(pts)))


@dataclass(frozen=True)
class CusumField:
    """The CUSUM comparison on all splits and grid points.

    ``values[k-1, j] = D(k/n, t_j)`` for ``k = 1..n-1``; ``integrals`` are
    the weighted squared aggregations per split, ``statistic`` their
    maximum, attained at split ``k_hat`` (smallest maximiser).
    """

    n: int
    measure: GridMeasure
    values: np.ndarray
    integrals: np.ndarray
    statistic: float
    k_hat: int
    breaks: BreakSpec | None = None


def cusum_field(sample, measure: GridMeasure | None = None, breaks: BreakSpec | None = None) -> CusumField:
    """Evaluate the CUSUM field of a sample on a grid measure.

    Parameters
    ----------
    sample : MultivariateSample or (n, d) array_like
    measure : GridMeasure, optional
        Defaults to :func:`default_measure` for the sample's dimension.
    breaks : BreakSpec, optional
        Known marginal break locations; switches every window to
        break-adapted pseudo-observations.
    """
    values = _as_values(sample)
    n, d = values.shape
    if n < 2:
        raise DataError(f"need at least two rows, got n={n}")
    if measure is None:
        measure = default_measure(d)
    if measure.d != d:
        raise DataError(f"measure is for d={measure.d}, sample has d={d}")
    pts = measure.points

    def window(k: int, l: int):
        if breaks is None:
            return pseudo_obs(values, k, l)
        return pseudo_obs_breaks(values, breaks, k, l)

    scale = float(n) ** 1.5
    field = np.empty((n - 1, measure.size))
    for k in range(1, n):
        a_pre = _ahat_grid(window(1, k), pts)
        a_suf = _ahat_grid(window(k + 1, n), pts)
        field[k - 1] = (k * (n - k) / scale) * (a_pre - a_suf)
    integrals = (field * field) @ measure.weights
    k_hat = int(np.argmax(integrals)) + 1
    return CusumField(
        n=n,
        measure=measure,
        values=field,
        integrals=integrals,
        statistic=float(integrals[k_hat - 1]),
        k_hat=k_hat,
        breaks=breaks,
    )


def statistic_max(field: CusumField) -> tuple[float, int]:
    """Max-over-splits statistic and the smallest split attaining it."""
    return field.statistic, field.k_hat


def statistic_at(field: CusumField, k_star: int) -> float:
    """The aggregated statistic at one pre-specified split ``k_star``."""
    if not 1 <= k_star <= field.n - 1:
        raise DataError(f"k_star must lie in 1..{field.n - 1}, got {k_star}")
    return float(field.integrals[k_star - 1])


def field_table(field: CusumField) -> tuple[list[str], np.ndarray]:
    """Long-format export of the field: one row per (split, grid point)."""
    n, t = field.n, field.measure.size
    ks = np.repeat(np.arange(1, n), t)
    pts = np.tile(field.measure.points, (n - 1, 1))
    header = ["k", "s"] + [f"t{j}" for j in range(2, field.measure.d + 1)]
    if field.measure.d == 2:
        header = ["k", "s", "t"]
    rows = np.column_stack([ks, ks / n, pts, field.values.reshape(-1)])
    return header + ["value"], rows
