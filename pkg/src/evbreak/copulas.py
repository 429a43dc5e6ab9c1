"""Data-generating laboratory for extreme-value dependence experiments.

Provides the Gumbel--Hougaard (logistic) family, its Khoudraji asymmetric
extension, GEV and normal margins, a piecewise-stationary scenario generator,
and a quadrature oracle for Kendall's tau that is independent of the samplers.

All samplers draw from :class:`numpy.random.Generator` streams passed in by
the caller, so replications can be keyed to reproducible seed sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import ndtri

from .errors import DataError, NumericError

__all__ = [
    "GumbelHougaardParams",
    "KhoudrajiParams",
    "GevParams",
    "NormalParams",
    "Segment",
    "DgpScenario",
    "MultivariateSample",
    "pickands_gumbel",
    "pickands_khoudraji",
    "copula_cdf",
    "evc_cdf",
    "sample_gumbel",
    "khoudraji_sample",
    "sample_copula",
    "gev_quantile",
    "gev_cdf",
    "margin_quantile",
    "generate_scenario",
    "kendall_tau_oracle",
    "gumbel_vartheta_for_tau",
    "vartheta_matching_tau",
]

_SIMPLEX_TOL = 1e-9


@dataclass(frozen=True)
class GumbelHougaardParams:
    """Logistic (Gumbel--Hougaard) copula parameter, ``vartheta >= 1``.

    ``vartheta = 1`` is independence; ``vartheta -> inf`` is comonotonicity.
    """

    vartheta: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.vartheta) or self.vartheta < 1.0:
            raise ValueError(f"vartheta must be finite and >= 1, got {self.vartheta}")


@dataclass(frozen=True)
class KhoudrajiParams:
    """Khoudraji asymmetrisation of a base extreme-value copula.

    ``C_a(u) = prod_j u_j**a_j * C_base(u_1**(1-a_1), ..., u_d**(1-a_d))``
    with shape vector ``a`` in ``[0, 1]^d``.  ``a = (0, ..., 0)`` recovers the
    base copula, ``a = (1, ..., 1)`` independence.
    """

    a: tuple[float, ...]
    base: GumbelHougaardParams

    def __post_init__(self) -> None:
        a = tuple(float(v) for v in self.a)
        object.__setattr__(self, "a", a)
        if len(a) < 2:
            raise ValueError("shape vector a needs at least two entries")
        if any(not 0.0 <= v <= 1.0 for v in a):
            raise ValueError(f"entries of a must lie in [0, 1], got {a}")


@dataclass(frozen=True)
class GevParams:
    """Generalised extreme-value margin (location, scale, shape)."""

    mu: float
    sigma: float
    gamma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class NormalParams:
    """Normal margin; defaults to the standard normal."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


MarginSpec = GevParams | NormalParams | None

CopulaParams = GumbelHougaardParams | KhoudrajiParams


@dataclass(frozen=True)
class Segment:
    """One stationary stretch of a scenario, as fractions of the sample.

    Rows ``floor(n*start)+1 .. floor(n*stop)`` (1-based) are drawn i.i.d. from
    ``copula`` with the given margins (``None`` entries keep uniform margins).
    """

    start: float
    stop: float
    copula: CopulaParams
    margins: tuple[MarginSpec, ...] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.start < self.stop <= 1.0:
            raise ValueError(f"need 0 <= start < stop <= 1, got [{self.start}, {self.stop}]")


@dataclass(frozen=True)
class DgpScenario:
    """A piecewise-stationary data-generating process of length ``n``."""

    n: int
    segments: tuple[Segment, ...]
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        if self.n < 1:
            raise ValueError("n must be positive")
        segs = self.segments
        if not segs:
            raise ValueError("scenario needs at least one segment")
        if segs[0].start != 0.0 or segs[-1].stop != 1.0:
            raise ValueError("segments must cover [0, 1]")
        for left, right in zip(segs, segs[1:]):
            if left.stop != right.start:
                raise ValueError("segments must be contiguous")


@dataclass(frozen=True)
class MultivariateSample:
    """An ``(n, d)`` block of observations plus optional row labels."""

    values: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] < 2:
            raise DataError(f"sample must be (n, d) with d >= 2, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (values.shape[0],):
                raise DataError("labels must have one entry per row")
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def _coerce_points(t) -> tuple[np.ndarray, bool]:
    """Normalise ``t`` to an array of simplex points, shape ``(T, d-1)``.

    Scalars and 1-d arrays are read as bivariate coordinates (``d = 2``);
    2-d arrays are read row-wise as the last ``d - 1`` coordinates of points
    on the unit simplex.  Returns the array and whether input was scalar.
    """
    arr = np.asarray(t, dtype=float)
    scalar = arr.ndim == 0
    if arr.ndim <= 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise ValueError(f"t must be scalar, 1-d, or (T, d-1), got ndim={arr.ndim}")
    rowsum = arr.sum(axis=1)
    if (arr < -_SIMPLEX_TOL).any() or (rowsum > 1.0 + _SIMPLEX_TOL).any():
        raise ValueError("t lies outside the unit simplex")
    return arr, scalar


def full_coordinates(points: np.ndarray) -> np.ndarray:
    """Prepend the implicit first coordinate ``t_1 = 1 - sum(t_2..t_d)``."""
    points = np.asarray(points, dtype=float)
    first = 1.0 - points.sum(axis=1)
    np.clip(first, 0.0, 1.0, out=first)
    return np.column_stack([first, points])


def pickands_gumbel(t, params: GumbelHougaardParams):
    """Pickands dependence function of the Gumbel--Hougaard copula.

    ``A(t) = (sum_j t_j**vartheta)**(1/vartheta)`` over the full coordinates
    ``(1 - sum t_j, t_2, ..., t_d)``.

    Parameters
    ----------
    t : float or array_like
        Scalar or 1-d input is the bivariate coordinate; an ``(T, d-1)``
        array holds the trailing coordinates of ``T`` simplex points.
    params : GumbelHougaardParams

    Returns
    -------
    float or ndarray of shape ``(T,)``
    """
    pts, scalar = _coerce_points(t)
    if params.vartheta == 1.0:
        out = np.ones(pts.shape[0])
    else:
        coords = full_coordinates(pts)
        out = np.power(np.power(coords, params.vartheta).sum(axis=1), 1.0 / params.vartheta)
    return float(out[0]) if scalar else out


def pickands_khoudraji(t, params: KhoudrajiParams):
    """Pickands dependence function of a Khoudraji-asymmetrised copula.

    ``A(t) = sum_j a_j t_j + r * A_base(w)`` with ``r = sum_j (1-a_j) t_j``
    and ``w_j = (1-a_j) t_j / r`` for ``j >= 2``; the second term is zero
    when ``r = 0``.
    """
    pts, scalar = _coerce_points(t)
    a = np.asarray(params.a, dtype=float)
    coords = full_coordinates(pts)
    if coords.shape[1] != a.size:
        raise ValueError(f"t implies d={coords.shape[1]} but len(a)={a.size}")
    scaled = (1.0 - a) * coords
    r = scaled.sum(axis=1)
    out = (a * coords).sum(axis=1)
    pos = r > 0.0
    if pos.any():
        inner = scaled[pos, 1:] / r[pos, None]
        out[pos] += r[pos] * pickands_gumbel(np.clip(inner, 0.0, 1.0), params.base)
    return float(out[0]) if scalar else out


def pickands_function(params: CopulaParams):
    """Return the Pickands function of ``params`` as a callable of ``t``."""
    if isinstance(params, GumbelHougaardParams):
        return lambda t: pickands_gumbel(t, params)
    if isinstance(params, KhoudrajiParams):
        return lambda t: pickands_khoudraji(t, params)
    raise TypeError(f"no Pickands function for {type(params).__name__}")


def copula_cdf(u, params: CopulaParams) -> np.ndarray:
    """Copula distribution function ``C(u)`` for the supported families.

    Parameters
    ----------
    u : array_like, shape ``(..., d)``
        Points in ``[0, 1]^d``.
    params : GumbelHougaardParams or KhoudrajiParams
    """
    u = np.asarray(u, dtype=float)
    if isinstance(params, GumbelHougaardParams):
        with np.errstate(divide="ignore"):
            neglog = -np.log(u)
        inner = np.power(neglog, params.vartheta).sum(axis=-1)
        out = np.exp(-np.power(inner, 1.0 / params.vartheta))
        return np.where((u <= 0.0).any(axis=-1), 0.0, out)
    if isinstance(params, KhoudrajiParams):
        a = np.asarray(params.a, dtype=float)
        if u.shape[-1] != a.size:
            raise ValueError(f"u has d={u.shape[-1]} but len(a)={a.size}")
        lead = np.prod(np.power(u, a), axis=-1)
        return lead * copula_cdf(np.power(u, 1.0 - a), params.base)
    raise TypeError(f"unsupported copula parameters {type(params).__name__}")


def evc_cdf(u, pickands) -> np.ndarray:
    """Extreme-value copula built from a Pickands function.

    ``C(u) = exp(sum_j log u_j * A(w))`` with ``w_j = log u_j / sum log u``.
    Used to cross-check parametric formulas and to evaluate fitted curves.
    """
    u = np.asarray(u, dtype=float)
    d = u.shape[-1]
    flat = u.reshape(-1, d)
    out = np.ones(flat.shape[0])
    zero = (flat <= 0.0).any(axis=1)
    interior = ~zero & (flat < 1.0).any(axis=1)
    if interior.any():
        lu = np.log(flat[interior])
        total = lu.sum(axis=1)
        w = lu[:, 1:] / total[:, None]
        out[interior] = np.exp(total * np.asarray(pickands(np.clip(w, 0.0, 1.0))))
    out[zero] = 0.0
    return out.reshape(u.shape[:-1])


def sample_gumbel(
    n: int, params: GumbelHougaardParams, rng: np.random.Generator, d: int = 2
) -> np.ndarray:
    """Draw ``n`` rows from the d-variate Gumbel--Hougaard copula.

    Uses the positive-stable frailty construction: ``U_j = psi(E_j / S)``
    with ``psi(x) = exp(-x**(1/vartheta))`` and ``S`` one-sided stable with
    index ``1/vartheta``, simulated by Kanter's method in log space so that
    values stay finite for ``vartheta`` near 1 or very large.
    """
    if d < 2:
        raise ValueError("d must be >= 2")
    vt = params.vartheta
    if vt == 1.0:
        return rng.random((n, d))
    alpha = 1.0 / vt
    theta = rng.uniform(0.0, np.pi, size=n)
    denom = rng.standard_exponential(n)
    ratio = alpha / (1.0 - alpha)
    log_a = (
        np.log(np.sin((1.0 - alpha) * theta))
        + ratio * np.log(np.sin(alpha * theta))
        - (1.0 + ratio) * np.log(np.sin(theta))
    )
    log_s = ((1.0 - alpha) / alpha) * (log_a - np.log(denom))
    e = rng.standard_exponential((n, d))
    return np.exp(-np.exp((np.log(e) - log_s[:, None]) / vt))


def khoudraji_sample(n: int, params: KhoudrajiParams, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` rows from the Khoudraji copula via the max-power device.

    With ``W`` i.i.d. uniform and ``U`` from the base copula,
    ``V_j = max(W_j**(1/a_j), U_j**(1/(1-a_j)))`` (``x**(1/0)`` read as 0).
    """
    a = np.asarray(params.a, dtype=float)
    d = a.size
    base = sample_gumbel(n, params.base, rng, d=d)
    w = rng.random((n, d))
    with np.errstate(divide="ignore"):
        exp_w = np.where(a > 0.0, 1.0 / a, np.inf)
        exp_u = np.where(a < 1.0, 1.0 / (1.0 - a), np.inf)
    return np.maximum(np.power(w, exp_w), np.power(base, exp_u))


def sample_copula(n: int, params: CopulaParams, rng: np.random.Generator, d: int = 2) -> np.ndarray:
    """Dispatch to the sampler matching ``params``."""
    if isinstance(params, GumbelHougaardParams):
        return sample_gumbel(n, params, rng, d=d)
    if isinstance(params, KhoudrajiParams):
        return khoudraji_sample(n, params, rng)
    raise TypeError(f"unsupported copula parameters {type(params).__name__}")


def gev_quantile(p, params: GevParams) -> np.ndarray:
    """GEV quantile function; the shape ``gamma = 0`` case is the Gumbel limit."""
    p = np.asarray(p, dtype=float)
    if ((p <= 0.0) | (p >= 1.0)).any():
        raise ValueError("p must lie strictly inside (0, 1)")
    neglog = -np.log(p)
    if params.gamma == 0.0:
        return params.mu - params.sigma * np.log(neglog)
    return params.mu + params.sigma * (np.power(neglog, -params.gamma) - 1.0) / params.gamma


def gev_cdf(x, params: GevParams) -> np.ndarray:
    """GEV distribution function with support handling for ``gamma != 0``."""
    x = np.asarray(x, dtype=float)
    z = (x - params.mu) / params.sigma
    if params.gamma == 0.0:
        return np.exp(-np.exp(-z))
    arg = 1.0 + params.gamma * z
    inside = arg > 0.0
    out = np.where(params.gamma > 0.0, 0.0, 1.0) * np.ones_like(z)
    safe = np.where(inside, arg, 1.0)
    out = np.where(inside, np.exp(-np.power(safe, -1.0 / params.gamma)), out)
    return out


def margin_quantile(p, margin: MarginSpec) -> np.ndarray:
    """Quantile transform for one margin; ``None`` keeps the uniform scale."""
    if margin is None:
        return np.asarray(p, dtype=float)
    if isinstance(margin, GevParams):
        return gev_quantile(p, margin)
    if isinstance(margin, NormalParams):
        return margin.mu + margin.sigma * ndtri(np.asarray(p, dtype=float))
    raise TypeError(f"unsupported margin {type(margin).__name__}")


def generate_scenario(
    scenario: DgpScenario, rng: np.random.Generator | None = None
) -> MultivariateSample:
    """Generate one sample path of a piecewise-stationary scenario.

    Segment boundaries are mapped to rows by flooring: segment ``[s, e)``
    produces rows ``floor(n*s)+1 .. floor(n*e)``.  Raises if flooring leaves
    a segment empty.
    """
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    n = scenario.n
    dims = set()
    for seg in scenario.segments:
        d = len(seg.copula.a) if isinstance(seg.copula, KhoudrajiParams) else None
        if seg.margins is not None:
            if d is not None and len(seg.margins) != d:
                raise DataError("margins length disagrees with copula dimension")
            d = len(seg.margins)
        dims.add(d)
    dims.discard(None)
    if len(dims) > 1:
        raise DataError(f"segments disagree on dimension: {sorted(dims)}")
    d = dims.pop() if dims else 2

    rows = np.empty((n, d))
    for seg in scenario.segments:
        lo = math.floor(n * seg.start)
        hi = math.floor(n * seg.stop)
        if hi <= lo:
            raise DataError(f"segment [{seg.start}, {seg.stop}] maps to no rows for n={n}")
        u = sample_copula(hi - lo, seg.copula, rng, d=d)
        if seg.margins is None:
            rows[lo:hi] = u
        else:
            for j, margin in enumerate(seg.margins):
                rows[lo:hi, j] = margin_quantile(u[:, j], margin)
    return MultivariateSample(rows)


def kendall_tau_oracle(
    params: CopulaParams, resolution: int = 256, fd_step: float = 1e-6
) -> tuple[float, float]:
    """Kendall's tau of a bivariate copula by quadrature, with an error bound.

    Evaluates ``tau = 1 - 4 * int int dC/du * dC/dv du dv`` on a tensor
    Gauss--Legendre grid with central finite differences of
    :func:`copula_cdf`.  Independent of the samplers, so it can vet them and
    the closed-form parameter maps.

    Returns
    -------
    (tau, err) : tuple of float
        Estimate and a resolution-halving error bound.
    """

    def estimate(res: int) -> float:
        nodes, weights = np.polynomial.legendre.leggauss(res)
        x = 0.5 * (nodes + 1.0)
        w = 0.5 * weights
        h = min(fd_step, 0.5 * x.min(), 0.5 * (1.0 - x.max()))
        uu, vv = np.meshgrid(x, x, indexing="ij")
        grid = np.stack([uu, vv], axis=-1)

        def shift(axis: int, delta: float) -> np.ndarray:
            g = grid.copy()
            g[..., axis] += delta
            return copula_cdf(g, params)

        c1 = (shift(0, h) - shift(0, -h)) / (2.0 * h)
        c2 = (shift(1, h) - shift(1, -h)) / (2.0 * h)
        integral = np.einsum("i,j,ij->", w, w, c1 * c2)
        return 1.0 - 4.0 * integral

    tau = estimate(resolution)
    tau_half = estimate(resolution // 2)
    return tau, abs(tau - tau_half)


def gumbel_vartheta_for_tau(tau: float) -> float:
    """Invert the Gumbel--Hougaard Kendall tau map ``tau = 1 - 1/vartheta``."""
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"tau must lie in [0, 1), got {tau}")
    return 1.0 / (1.0 - tau)


def vartheta_matching_tau(
    tau: float,
    a: tuple[float, ...] | None = None,
    bracket: tuple[float, float] = (1.0 + 1e-9, 64.0),
    resolution: int = 128,
) -> float:
    """Base parameter whose (possibly Khoudraji-distorted) copula has given tau.

    For ``a`` absent or all zero this is the closed form; otherwise the
    quadrature oracle is inverted with Brent's method.
    """
    if a is None or not any(a):
        return gumbel_vartheta_for_tau(tau)

    def gap(vt: float) -> float:
        params = KhoudrajiParams(a=tuple(a), base=GumbelHougaardParams(vt))
        return kendall_tau_oracle(params, resolution=resolution)[0] - tau

    lo, hi = bracket
    glo, ghi = gap(lo), gap(hi)
    if glo * ghi > 0:
        raise NumericError(f"tau={tau} not attainable for a={a} within vartheta in {bracket}")
    return float(brentq(gap, lo, hi, xtol=1e-10))
