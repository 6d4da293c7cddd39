"""
Posterior summaries and the data behind trace, ACF and density plots.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from bayesdcc.errors import InvalidInputError, NumericalDomainError
from bayesdcc.model import ParamVector, as_returns, initial_state, run_recursions

__all__ = [
    "PosteriorSummary",
    "PosteriorPaths",
    "retained_draws",
    "effective_sample_size",
    "summarize",
    "autocorrelation",
    "density_estimate",
    "posterior_paths",
]


def retained_draws(draws: np.ndarray, burn_in: int = 0, thin: int = 1) -> np.ndarray:
    draws = np.asarray(draws, dtype=float)
    if burn_in < 0 or thin < 1:
        raise InvalidInputError("burn_in must be >= 0 and thin >= 1")
    if burn_in >= draws.shape[0]:
        raise InvalidInputError(f"burn_in={burn_in} leaves no draws out of {draws.shape[0]}")
    return draws[burn_in::thin]


def effective_sample_size(x) -> float:
    """Batch-means ESS with batch size floor(sqrt(m)).

    A constant series is reported as fully efficient (ESS = m). The result is
    clipped to (0, m].
    """
    x = np.asarray(x, dtype=float)
    m = x.size
    if m < 4:
        return float(m)
    var = np.var(x, ddof=1)
    if var <= 0:
        return float(m)
    size = int(np.sqrt(m))
    n_batches = m // size
    means = x[: n_batches * size].reshape(n_batches, size).mean(axis=1)
    var_bm = size * np.var(means, ddof=1)
    if not var_bm > 0:
        return float(m)
    return float(np.clip(m * var / var_bm, np.finfo(float).tiny, m))


@dataclass
class PosteriorSummary:
    """Per-parameter posterior statistics keyed by parameter name."""

    params: dict
    accept_rate: object
    n_sim: int
    burn_in: int
    thin: int
    n_retained: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        rate = self.accept_rate
        return {
            "params": self.params,
            "accept_rate": rate.tolist() if isinstance(rate, np.ndarray) else rate,
            "n_sim": self.n_sim,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "n_retained": self.n_retained,
            **self.extra,
        }


def summarize(chain, burn_in: int = 0, thin: int = 1) -> PosteriorSummary:
    """Mean, median, s.d., 2.5%/97.5% quantiles and ESS for each parameter."""
    kept = retained_draws(chain.draws, burn_in, thin)
    stats = {}
    for j, name in enumerate(chain.param_names):
        col = kept[:, j]
        lo, med, hi = np.quantile(col, [0.025, 0.5, 0.975])
        stats[name] = {
            "mean": float(np.mean(col)),
            "median": float(med),
            "sd": float(np.std(col, ddof=1)) if col.size > 1 else 0.0,
            "q025": float(lo),
            "q975": float(hi),
            "ess": effective_sample_size(col),
        }
    return PosteriorSummary(
        params=stats,
        accept_rate=chain.accept_rate,
        n_sim=chain.draws.shape[0],
        burn_in=burn_in,
        thin=thin,
        n_retained=kept.shape[0],
    )


def autocorrelation(series, max_lag: int) -> np.ndarray:
    """Sample ACF for lags 0..max_lag, normalised by the lag-0 autocovariance."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if not 0 <= max_lag < n:
        raise InvalidInputError(f"max_lag must be in [0, {n - 1}]")
    d = x - x.mean()
    c0 = np.dot(d, d)
    if c0 <= 0:
        raise NumericalDomainError("series has zero variance")
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(d, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1]
    acf = acov / c0
    acf[0] = 1.0
    return acf


def density_estimate(series, grid: int = 512):
    """
    Gaussian KDE with Silverman's bandwidth ``0.9 min(sd, IQR/1.34) n^-1/5``.

    Returns ``(points, densities)`` on ``grid`` points spanning
    ``[min - 3h, max + 3h]``.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 10:
        raise InvalidInputError("need at least 10 values for a density estimate")
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if not spread > 0:
        spread = sd
    if not spread > 0:
        raise NumericalDomainError("series has zero variance")
    h = 0.9 * spread * n ** (-0.2)
    points = np.linspace(x.min() - 3 * h, x.max() + 3 * h, grid)
    dens = np.empty(grid)
    norm = 1.0 / (n * h * np.sqrt(2 * np.pi))
    for start in range(0, grid, 64):
        z = (points[start:start + 64, None] - x[None, :]) / h
        dens[start:start + 64] = norm * np.exp(-0.5 * z * z).sum(axis=1)
    return points, dens


@dataclass
class PosteriorPaths:
    """Pointwise posterior means and 95% bands of variance and correlation paths."""

    h_mean: np.ndarray
    h_lower: np.ndarray
    h_upper: np.ndarray
    corr_mean: np.ndarray
    corr_lower: np.ndarray
    corr_upper: np.ndarray
    draw_indices: np.ndarray


def posterior_paths(
    chain,
    data,
    burn_in: int = 0,
    thin: int = 1,
    max_draws: int = 200,
    family: Optional[str] = None,
) -> PosteriorPaths:
    """
    Re-run the recursions for up to ``max_draws`` equally spaced retained draws
    and aggregate them pointwise.
    """
    rm = as_returns(data)
    family = family or chain.family
    if family is None:
        raise InvalidInputError("chain carries no family; pass family explicitly")
    kept = retained_draws(chain.draws, burn_in, thin)
    m = kept.shape[0]
    idx = np.unique(np.linspace(0, m - 1, min(max_draws, m)).round().astype(int))
    hs, cs = [], []
    for i in idx:
        params = ParamVector.from_array(kept[i], rm.k, family)
        try:
            path = run_recursions(params, rm, initial_state(params, rm))
        except NumericalDomainError as exc:
            raise NumericalDomainError(f"retained draw {i}: {exc}") from exc
        hs.append(path.h_path)
        cs.append(path.corr_path)
    hs, cs = np.stack(hs), np.stack(cs)
    h_lo, h_hi = np.percentile(hs, [2.5, 97.5], axis=0)
    c_lo, c_hi = np.percentile(cs, [2.5, 97.5], axis=0)
    return PosteriorPaths(hs.mean(axis=0), h_lo, h_hi, cs.mean(axis=0), c_lo, c_hi, idx)
