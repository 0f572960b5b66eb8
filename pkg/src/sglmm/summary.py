"""Posterior summarization: point estimates, intervals, MCSE, fitted surfaces.

Quantiles use linear interpolation between order statistics (numpy's
default, type 7). HPD intervals are contiguous, found by scanning the
shortest window of ceil(level * N) consecutive sorted draws, which keeps
them no wider than the equal-tailed interval. Monte Carlo standard errors
use the consistent batch-means estimator with batch size floor(sqrt(N)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import DesignMatrix
from .model import ModelSpec, inverse_link

__all__ = [
    "ParamSummary",
    "FitSummary",
    "CorrelationHistogram",
    "equal_tailed_interval",
    "hpd_interval",
    "mcse",
    "summarize_chain",
    "summarize_draws",
    "fitted_surface",
    "error_norm",
    "effect_correlations",
]


@dataclass(frozen=True)
class ParamSummary:
    mean: float
    eqt_lo: float
    eqt_hi: float
    hpd_lo: float
    hpd_hi: float
    mcse: float

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "eqt_lo": self.eqt_lo,
            "eqt_hi": self.eqt_hi,
            "hpd_lo": self.hpd_lo,
            "hpd_hi": self.hpd_hi,
            "mcse": self.mcse,
        }


@dataclass(frozen=True)
class FitSummary:
    level: float
    params: dict  # name -> ParamSummary

    def as_dict(self) -> dict:
        return {
            "level": self.level,
            "params": {k: v.as_dict() for k, v in self.params.items()},
        }


def equal_tailed_interval(draws: np.ndarray, level: float = 0.95):
    """Central interval from the level/2 tail quantiles (type-7)."""
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(draws, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def hpd_interval(draws: np.ndarray, level: float = 0.95):
    """Shortest contiguous window over the sorted draws.

    The window holds as many order statistics as the equal-tailed interval
    does, so the shortest such window can never be wider than the
    equal-tailed interval (that interval itself contains one candidate).
    """
    x = np.sort(np.asarray(draws, dtype=float))
    n = x.shape[0]
    alpha = (1.0 - level) / 2.0
    # type-7 quantile positions, 1-based
    h_lo = (n - 1) * alpha + 1
    h_hi = (n - 1) * (1.0 - alpha) + 1
    k = int(np.floor(h_hi)) - int(np.ceil(h_lo)) + 1
    k = min(max(k, 1), n)
    if k >= n:
        return float(x[0]), float(x[-1])
    widths = x[k - 1 :] - x[: n - k + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + k - 1])


def mcse(draws: np.ndarray) -> float:
    """Batch-means Monte Carlo standard error of the mean.

    Uses batch size b = floor(sqrt(N)) over the first a*b draws with
    a = floor(N/b); rejects chains shorter than 100.
    """
    x = np.asarray(draws, dtype=float)
    n = x.shape[0]
    if n < 100:
        raise ValueError(f"batch-means MCSE needs at least 100 draws, got {n}")
    b = int(np.floor(np.sqrt(n)))
    a = n // b
    used = x[: a * b]
    batch_means = used.reshape(a, b).mean(axis=1)
    center = batch_means.mean()
    asym_var = b * np.sum((batch_means - center) ** 2) / (a - 1)
    return float(np.sqrt(asym_var / (a * b)))


def summarize_draws(draws: np.ndarray, level: float = 0.95) -> ParamSummary:
    draws = np.asarray(draws, dtype=float)
    if draws.size == 0:
        raise ValueError("cannot summarize an empty draw sequence")
    eqt = equal_tailed_interval(draws, level)
    hpd = hpd_interval(draws, level)
    if draws.size >= 100:
        se = mcse(draws)
    else:
        se = float(np.std(draws, ddof=1) / np.sqrt(draws.size)) if draws.size > 1 else 0.0
    return ParamSummary(
        mean=float(draws.mean()),
        eqt_lo=eqt[0],
        eqt_hi=eqt[1],
        hpd_lo=hpd[0],
        hpd_hi=hpd[1],
        mcse=se,
    )


def summarize_chain(chain, level: float = 0.95, include_effects: bool = True) -> FitSummary:
    """Per-parameter posterior mean, equal-tailed and HPD intervals, MCSE.

    Depends only on the retained draws, so any thinning that preserves the
    retained set leaves the summary unchanged.
    """
    if chain.n_draws == 0:
        raise ValueError("cannot summarize an empty chain")
    mat = chain.matrix()
    params = {}
    for j, name in enumerate(chain.names):
        if not include_effects and name.startswith("effect."):
            continue
        params[name] = summarize_draws(mat[:, j], level)
    return FitSummary(level=level, params=params)


def fitted_surface(chain, spec: ModelSpec, X: DesignMatrix, basis) -> np.ndarray:
    """Posterior mean of g^{-1}(eta) over the retained draws."""
    betas = chain.draws["beta"]
    eta = X.X @ betas.T  # (n, d)
    if "effects" in chain.draws:
        effects = chain.draws["effects"]
        if spec.parameterization == "traditional":
            eta = eta + effects.T
        elif spec.parameterization == "rhz":
            eta = eta + basis.L @ effects.T
        elif spec.parameterization == "sparse":
            eta = eta + basis.M @ effects.T
    if spec.offset is not None:
        eta = eta + np.log(spec.offset)[:, None]
    return inverse_link(spec.family, eta).mean(axis=1)


def error_norm(fitted: np.ndarray, truth: np.ndarray) -> float:
    """Euclidean distance between the true and fitted surfaces."""
    fitted = np.asarray(fitted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if fitted.shape != truth.shape:
        raise ValueError(f"shape mismatch: fitted {fitted.shape}, truth {truth.shape}")
    return float(np.linalg.norm(truth - fitted))


@dataclass(frozen=True)
class CorrelationHistogram:
    """Binned pairwise posterior correlations among the random effects."""

    counts: np.ndarray
    bin_edges: np.ndarray
    correlations: np.ndarray
    n_pairs_total: int
    excluded: tuple

    @property
    def n_pairs_used(self) -> int:
        return self.correlations.shape[0]


def effect_correlations(
    chain,
    bins: int = 50,
    max_pairs: int = 100_000,
    subsample_size: int = 10_000,
    seed: int = 0,
) -> CorrelationHistogram:
    """Histogram of pairwise sample correlations of the effect draws.

    If the number of pairs exceeds ``max_pairs``, a seeded uniform subsample
    of ``subsample_size`` pairs is used. Zero-variance effects are excluded
    and reported.
    """
    if "effects" not in chain.draws:
        raise ValueError("chain has no random effects")
    effects = chain.draws["effects"]
    d, k = effects.shape
    if k < 2:
        raise ValueError("need at least 2 effects for pairwise correlations")
    if d < 100:
        raise ValueError(f"need at least 100 draws, got {d}")

    sd = effects.std(axis=0)
    keep = np.nonzero(sd > 0)[0]
    excluded = tuple(int(i) for i in np.nonzero(sd == 0)[0])
    k_eff = keep.shape[0]
    if k_eff < 2:
        raise ValueError("fewer than 2 effects have positive variance")

    n_pairs_total = k_eff * (k_eff - 1) // 2
    centered = effects[:, keep] - effects[:, keep].mean(axis=0)
    scaled = centered / centered.std(axis=0)

    if n_pairs_total <= max_pairs:
        corr = np.corrcoef(effects[:, keep].T)
        iu = np.triu_indices(k_eff, 1)
        correlations = corr[iu]
    else:
        rng = np.random.default_rng(seed)
        m = max(subsample_size, 10_000)
        ii = rng.integers(0, k_eff, size=2 * m)
        jj = rng.integers(0, k_eff, size=2 * m)
        ok = ii != jj
        ii, jj = ii[ok][:m], jj[ok][:m]
        correlations = (scaled[:, ii] * scaled[:, jj]).mean(axis=0)

    counts, bin_edges = np.histogram(correlations, bins=bins, range=(-1.0, 1.0))
    return CorrelationHistogram(
        counts=counts,
        bin_edges=bin_edges,
        correlations=correlations,
        n_pairs_total=n_pairs_total,
        excluded=excluded,
    )
