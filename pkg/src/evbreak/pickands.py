"""Rank-based Pickands dependence function estimation on sample windows.

The window estimator is ``A = S / (1 - S)`` with
``S(t) = mean_i max_j U_{ij} ** (1/t_j)`` over the window's
pseudo-observations, using the full simplex coordinates
``(1 - sum t_j, t_2, ..., t_d)`` and the convention ``u ** (1/0) = 0``.
At simplex vertices the mean is evaluated in exact rational arithmetic so
that the boundary identities ``A(0) = A(1) = 1`` hold exactly in floating
point.  All public entry points accept a scalar or vector ``t`` for the
bivariate case and an ``(T, d-1)`` array of trailing simplex coordinates in
general; there is a single d-variate code path underneath.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np

from .copulas import full_coordinates
from .errors import DataError, NumericError
from .ranks import BreakSpec, PseudoObsBlock, pseudo_obs, pseudo_obs_breaks, _as_values

__all__ = [
    "default_bandwidth",
    "simplex_points",
    "subsample_S",
    "subsample_A",
    "subsample_S_theta",
    "subsample_A_theta",
    "derivative_A",
    "PickandsEstimate",
    "estimate_pickands",
]

_SIMPLEX_TOL = 1e-9


def default_bandwidth(n: int) -> float:
    """Finite-difference bandwidth ``0.01 / sqrt(n)`` used throughout."""
    if n < 1:
        raise ValueError("n must be positive")
    return 0.01 / math.sqrt(n)


def simplex_points(t, d: int) -> tuple[np.ndarray, bool]:
    """Coerce ``t`` to an ``(T, d-1)`` array of trailing simplex coordinates.

    For ``d = 2`` scalars and 1-d arrays are vectors of bivariate
    coordinates; for ``d > 2`` a 1-d array is a single point.  Returns the
    array and whether the input was scalar.
    """
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0 or (d > 2 and arr.ndim == 1)
    if d == 2:
        if arr.ndim <= 1:
            arr = arr.reshape(-1, 1)
    elif arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != d - 1:
        raise ValueError(f"t must give {d - 1} trailing coordinates, got shape {arr.shape}")
    if (arr < -_SIMPLEX_TOL).any() or (arr.sum(axis=1) > 1.0 + _SIMPLEX_TOL).any():
        raise ValueError("t lies outside the unit simplex")
    return arr, scalar


def _vertex_mean(block: PseudoObsBlock, col: int) -> float:
    # exact rational mean of one pseudo-observation column
    total = Fraction(0)
    for num, den in zip(block.numerators[:, col], block.denominators):
        total += Fraction(int(num), int(den))
    return float(total / block.n_obs)


def _shat_grid(block: PseudoObsBlock, pts: np.ndarray) -> np.ndarray:
    """``S`` on an ``(T, d-1)`` grid; empty windows give 0 by convention."""
    n_pts = pts.shape[0]
    if block.n_obs == 0:
        return np.zeros(n_pts)
    coords = full_coordinates(pts)
    at_vertex = (coords == 1.0).any(axis=1)
    out = np.empty(n_pts)
    general = ~at_vertex
    if general.any():
        with np.errstate(divide="ignore"):
            inv = np.where(coords[general] > 0.0, 1.0 / coords[general], np.inf)
        z = np.log(block.values)[None, :, :] * inv[:, None, :]
        out[general] = np.exp(z.max(axis=2)).mean(axis=1)
    for row in np.nonzero(at_vertex)[0]:
        out[row] = _vertex_mean(block, int(np.argmax(coords[row])))
    return out


def _ahat_grid(block: PseudoObsBlock, pts: np.ndarray) -> np.ndarray:
    if block.n_obs == 0:
        raise DataError("Pickands estimate undefined on an empty window")
    s = _shat_grid(block, pts)
    return s / (1.0 - s)


def _aderiv_grid(block: PseudoObsBlock, pts: np.ndarray, h: float) -> np.ndarray:
    """Central-difference partials of ``A`` along each trailing coordinate.

    The stencil centre is clamped so both evaluation points stay inside the
    simplex (flat extension near the boundary); the quotient is clipped to
    ``[-1, 1]``, the range of a valid Pickands derivative.
    """
    if not h > 0.0:
        raise NumericError(f"bandwidth must be positive, got {h}")
    n_pts, trailing = pts.shape
    rowsum = pts.sum(axis=1)
    out = np.empty((n_pts, trailing))
    for jj in range(trailing):
        room = 1.0 - (rowsum - pts[:, jj])
        if (room < 2.0 * h).any():
            raise NumericError(f"bandwidth {h} leaves no room for the stencil")
        centre = np.clip(pts[:, jj], h, room - h)
        plus = pts.copy()
        plus[:, jj] = centre + h
        minus = pts.copy()
        minus[:, jj] = centre - h
        out[:, jj] = (_ahat_grid(block, plus) - _ahat_grid(block, minus)) / (2.0 * h)
    np.clip(out, -1.0, 1.0, out=out)
    return out


def subsample_S(block: PseudoObsBlock, t):
    """``S(t)`` of a window; empty windows return 0.

    Parameters
    ----------
    block : PseudoObsBlock
    t : float or array_like
        Bivariate coordinate(s) for ``d = 2``; otherwise an ``(T, d-1)``
        array of trailing simplex coordinates.
    """
    pts, scalar = simplex_points(t, block.d)
    out = _shat_grid(block, pts)
    return float(out[0]) if scalar else out


def subsample_A(block: PseudoObsBlock, t):
    """Pickands estimate ``A(t) = S(t) / (1 - S(t))`` of a window."""
    pts, scalar = simplex_points(t, block.d)
    out = _ahat_grid(block, pts)
    return float(out[0]) if scalar else out


def subsample_S_theta(sample, breaks: BreakSpec, k: int, l: int, t):
    """Break-adapted ``S`` as a convex combination of per-segment values.

    Splits the window at every break index it straddles and mixes the plain
    per-piece statistics with weights proportional to piece length.  Equals
    ``subsample_S`` on :func:`~evbreak.ranks.pseudo_obs_breaks` up to
    floating-point summation order.
    """
    values = _as_values(sample)
    n = values.shape[0]
    if breaks.n != n:
        raise DataError(f"breaks built for n={breaks.n}, sample has n={n}")
    d = values.shape[1]
    pts, scalar = simplex_points(t, d)
    if k > l:
        out = np.zeros(pts.shape[0])
        return float(out[0]) if scalar else out
    width = l - k + 1
    out = np.zeros(pts.shape[0])
    bounds = breaks.boundaries
    for lo, hi in zip(bounds, bounds[1:]):
        a, b = max(k, lo + 1), min(l, hi)
        if a > b:
            continue
        piece = _shat_grid(pseudo_obs(values, a, b), pts)
        out += ((b - a + 1) / width) * piece
    return float(out[0]) if scalar else out


def subsample_A_theta(sample, breaks: BreakSpec, k: int, l: int, t):
    """Break-adapted Pickands estimate via the convex-combination form."""
    if k > l:
        raise DataError("Pickands estimate undefined on an empty window")
    s = subsample_S_theta(sample, breaks, k, l, t)
    return s / (1.0 - s)


def derivative_A(block: PseudoObsBlock, t, h: float | None = None):
    """Finite-difference derivative of the window Pickands estimate.

    For ``d = 2`` this is the scalar derivative in ``t``; in general the
    ``(T, d-1)`` matrix of partials along the trailing coordinates.
    ``h`` defaults to :func:`default_bandwidth` of the window size.
    """
    if block.n_obs == 0:
        raise DataError("Pickands estimate undefined on an empty window")
    if h is None:
        h = default_bandwidth(block.n_obs)
    pts, scalar = simplex_points(t, block.d)
    out = _aderiv_grid(block, pts, h)
    if block.d == 2:
        out = out[:, 0]
        return float(out[0]) if scalar else out
    return out[0] if scalar else out


@dataclass(frozen=True)
class PickandsEstimate:
    """A fitted Pickands curve on a grid, with its window bounds."""

    t: np.ndarray
    values: np.ndarray
    k: int
    l: int
    adapted: bool = False


def estimate_pickands(
    sample, t, k: int = 1, l: int | None = None, breaks: BreakSpec | None = None
) -> PickandsEstimate:
    """Estimate the Pickands function of ``sample`` rows ``k..l`` on grid ``t``."""
    values = _as_values(sample)
    if l is None:
        l = values.shape[0]
    if breaks is None:
        block = pseudo_obs(values, k, l)
    else:
        block = pseudo_obs_breaks(values, breaks, k, l)
    pts, _ = simplex_points(t, values.shape[1])
    fitted = _ahat_grid(block, pts)
    grid = pts[:, 0] if values.shape[1] == 2 else pts
    return PickandsEstimate(t=grid, values=fitted, k=k, l=l, adapted=breaks is not None)
