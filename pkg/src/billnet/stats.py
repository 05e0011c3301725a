"""Two-sample Kolmogorov-Smirnov tests, ensemble comparisons and Pearson r.

KS p-values use the asymptotic Kolmogorov distribution evaluated at
sqrt(nx*ny/(nx+ny)) * D, with the alternating series truncated once terms
drop below 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import betainc


@dataclass(frozen=True)
class KSResult:
    d: float
    p_value: float
    n_x: int
    n_y: int


@dataclass(frozen=True)
class EnsembleComparison:
    results: tuple[KSResult, ...]
    d_min: float
    d_mean: float
    d_max: float
    p_threshold: float
    p_below_threshold: int


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution, Q(lam)."""
    if lam <= 0.0:
        return 1.0
    total = 0.0
    sign = 1.0
    j = 1
    while True:
        term = math.exp(-2.0 * j * j * lam * lam)
        total += sign * term
        if term < 1e-12 or j > 100_000:
            break
        sign = -sign
        j += 1
    return min(1.0, max(0.0, 2.0 * total))


def ks_two_sample(x: Sequence[float], y: Sequence[float]) -> KSResult:
    """Max ECDF gap over the pooled points plus its asymptotic p-value."""
    xs = np.sort(np.asarray(x, dtype=np.float64))
    ys = np.sort(np.asarray(y, dtype=np.float64))
    n_x, n_y = len(xs), len(ys)
    if n_x == 0 or n_y == 0:
        raise ValueError("samples must be non-empty")
    pooled = np.concatenate([xs, ys])
    cdf_x = np.searchsorted(xs, pooled, side="right") / n_x
    cdf_y = np.searchsorted(ys, pooled, side="right") / n_y
    d = float(np.abs(cdf_x - cdf_y).max())
    if d == 0.0:
        p = 1.0
    else:
        effective = n_x * n_y / (n_x + n_y)
        p = kolmogorov_sf(math.sqrt(effective) * d)
    return KSResult(d=d, p_value=p, n_x=n_x, n_y=n_y)


def compare_to_ensemble(
    observed: Sequence[float],
    ensemble: Sequence[Sequence[float]],
    p_threshold: float = 0.001,
) -> EnsembleComparison:
    """KS of the observed sample against each replicate sample."""
    if not len(ensemble):
        raise ValueError("ensemble must be non-empty")
    results = tuple(ks_two_sample(observed, sample) for sample in ensemble)
    ds = [r.d for r in results]
    return EnsembleComparison(
        results=results,
        d_min=min(ds),
        d_mean=sum(ds) / len(ds),
        d_max=max(ds),
        p_threshold=p_threshold,
        p_below_threshold=sum(1 for r in results if r.p_value < p_threshold),
    )


class PearsonResult(NamedTuple):
    r: float
    p_value: float


def pearson(x: Sequence[float], y: Sequence[float]) -> PearsonResult:
    """Sample Pearson correlation with a two-sided t-distribution p-value."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if len(xs) != len(ys):
        raise ValueError("samples must have equal length")
    n = len(xs)
    if n < 3:
        raise ValueError("need at least three paired observations")
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    sx = float(np.sqrt((xc * xc).sum()))
    sy = float(np.sqrt((yc * yc).sum()))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("zero variance sample")
    r = float((xc * yc).sum() / (sx * sy))
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        t2 = df * r * r / (1.0 - r * r)
        # two-sided tail of Student's t via the regularized incomplete beta
        p = float(betainc(df / 2.0, 0.5, df / (df + t2)))
    return PearsonResult(r=r, p_value=p)
