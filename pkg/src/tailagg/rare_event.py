"""Ground-truth tail probability estimation.

Three routes:
  * exact_comonotone_lognormal - closed form for the countermonotone pair
    X + exp(2 mu)/X with lognormal X,
  * plain_mc                   - indicator Monte Carlo on any joint model,
  * cond_mc_lognormal          - conditional Monte Carlo for sums of
    equicorrelated lognormal terms (the workhorse for deep tails).

Replications are partitioned into fixed-size substreams keyed by
(seed, chunk index); merging is an ordered reduction of (sum, sum-of-squares,
count) triples, so results are bit-identical for a fixed backend no matter
how many workers ran the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtri

from . import kernels
from .joint import JointModel, _uniforms
from .models import norm_sf

CHUNK = 1 << 19

EXACT = "exact"
PLAIN_MC = "plain_mc"
COND_MC = "cond_mc"


@dataclass(frozen=True)
class EstimateResult:
    """A tail probability estimate with its Monte Carlo error."""

    estimate: float
    n: int
    std_error: float
    half_width95: float
    method: str
    seed: Optional[int] = None

    @staticmethod
    def from_moments(total: float, total_sq: float, n: int, method: str, seed) -> "EstimateResult":
        mean = total / n
        if n > 1:
            var = max(total_sq - n * mean * mean, 0.0) / (n - 1)
            se = math.sqrt(var / n)
        else:
            se = float("nan")
        return EstimateResult(min(mean, 1.0), n, se, 1.96 * se, method, seed)


@dataclass(frozen=True)
class RatioVsAsymptotic:
    """Simulation-to-approximation ratio with the CI half-width on its scale."""

    ratio: float
    half_width: float


def exact_comonotone_lognormal(mu: float, x: float) -> EstimateResult:
    """P(X + exp(2 mu)/X > x) for X lognormal(mu, 1), exactly.

    The event splits at the roots of t^2 - x t + exp(2 mu) = 0, so the
    discriminant is sqrt(x^2 - 4 exp(2 mu)); by log-symmetry of the two roots
    around mu the probability collapses to 2 Phibar(log(root_plus) - mu).
    Below x = 2 exp(mu) the sum exceeds x with probability one.
    """
    lo = 2.0 * math.exp(mu)
    if x <= lo:
        return EstimateResult(1.0, 0, 0.0, 0.0, EXACT)
    root = (x + math.sqrt(x * x - lo * lo)) / 2.0
    p = 2.0 * float(norm_sf(math.log(root) - mu))
    return EstimateResult(p, 0, 0.0, 0.0, EXACT)


def exact_lognormal_single(mu: float, sigma: float, a: float, x: float) -> float:
    """P(a X > x) for X lognormal(mu, sigma); the degenerate one-asset case."""
    if a <= 0:
        return 0.0 if x > 0 else 1.0
    if x <= 0:
        return 1.0
    return float(norm_sf((math.log(x / a) - mu) / sigma))


def _chunk_ranges(n: int):
    k = 0
    done = 0
    while done < n:
        size = min(CHUNK, n - done)
        yield k, size
        done += size
        k += 1


def _seed_key(seed) -> tuple:
    return tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)


def plain_mc(
    model: JointModel,
    a: Sequence[float],
    x: float,
    n: int,
    seed,
    workers: int = 1,
) -> EstimateResult:
    """Fraction of sampled rows with sum_i a_i X_i > x.

    std_error is the binomial sqrt(p(1-p)/n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = np.asarray(a, dtype=float)
    if len(a) != model.dim:
        raise ValueError(f"need {model.dim} coefficients, got {len(a)}")
    key = _seed_key(seed)

    def run(item):
        k, size = item
        rows = model.sample(size, key[0], stream=_substream(key, k))
        return float(np.sum(rows @ a > x))

    counts = _map_chunks(run, n, workers)
    hits = sum(counts)
    p = hits / n
    se = math.sqrt(p * (1.0 - p) / n)
    root = seed if isinstance(seed, int) else None
    return EstimateResult(p, n, se, 1.96 * se, PLAIN_MC, root)


def _substream(key: tuple, k: int) -> int:
    # fold extra key words into the stream id so (seed, point, chunk) streams
    # never collide for the magnitudes used here
    s = k
    for w in key[1:]:
        s = s * 1_000_003 + int(w)
    return s


def _map_chunks(fn, n: int, workers: int) -> list:
    items = list(_chunk_ranges(n))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def cond_mc_terms(
    nu: Sequence[float],
    sig: Sequence[float],
    rho: float,
    x: float,
    n: int,
    seed,
    workers: int = 1,
    backend: Optional[str] = None,
) -> EstimateResult:
    """Conditional MC for P(sum_i exp(nu_i + sig_i Z_i) > x), Z equicorrelated.

    This is the general engine behind `cond_mc_lognormal`; `nu` absorbs both
    per-term coefficients and location shifts, `sig` the per-term volatilities
    (so power transforms of a common base fit the same mold).
    """
    nu = np.asarray(nu, dtype=float)
    sig = np.asarray(sig, dtype=float)
    d = len(nu)
    if d < 2 or len(sig) != d:
        raise ValueError("need at least two terms with matching volatilities")
    if np.any(sig <= 0):
        raise ValueError("volatilities must be positive")
    lo = -1.0 / (d - 1)
    if not lo < rho < 1.0:
        raise ValueError(f"rho must lie in ({lo:.4g}, 1) for {d} terms")
    if n < 1:
        raise ValueError("n must be >= 1")
    root = seed if isinstance(seed, int) else None
    if x <= 0.0:
        return EstimateResult(1.0, n, 0.0, 0.0, COND_MC, root)
    key = _seed_key(seed)

    def run(item):
        k, size = item
        u = _uniforms(key[0], _substream(key, k), (size, d))
        z = ndtri(u)
        if d == 2:
            return kernels.pair_chunk(
                np.ascontiguousarray(z[:, 0]),
                np.ascontiguousarray(z[:, 1]),
                nu[0], nu[1], sig[0], sig[1], rho, x,
                force=backend,
            )
        return kernels.equicorr_chunk(z, nu, sig, rho, x)

    parts = _map_chunks(run, n, workers)
    total = 0.0
    total_sq = 0.0
    for t, tsq in parts:
        total += t
        total_sq += tsq
    return EstimateResult.from_moments(total, total_sq, n, COND_MC, root)


def cond_mc_lognormal(
    mu: float,
    sigma: float,
    rho: float,
    a: Sequence[float],
    x: float,
    n: int,
    seed,
    workers: int = 1,
    backend: Optional[str] = None,
) -> EstimateResult:
    """Unbiased conditional-MC estimate of P(sum_i a_i exp(Z_i) > x).

    Z is d-variate normal with common mean mu, volatility sigma and pairwise
    correlation rho in (-1, 1); rho = -1 has the closed form
    `exact_comonotone_lognormal` and rho = 1 is degenerate.  Zero coefficients
    are dropped up front (they cannot move the sum); if only one positive term
    remains the probability is computed exactly.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    a = np.asarray(a, dtype=float)
    if len(a) < 2:
        raise ValueError("need at least two coefficients")
    if np.any(a < 0):
        raise ValueError("coefficients must be nonnegative")
    if not -1.0 < rho < 1.0:
        raise ValueError("rho must be in (-1, 1); the endpoints have exact/degenerate forms")
    keep = a > 0
    root = seed if isinstance(seed, int) else None
    if keep.sum() == 0:
        return EstimateResult(0.0 if x > 0 else 1.0, 0, 0.0, 0.0, EXACT, root)
    if keep.sum() == 1:
        p = exact_lognormal_single(mu, sigma, float(a[keep][0]), x)
        return EstimateResult(p, 0, 0.0, 0.0, EXACT, root)
    nu = mu + np.log(a[keep])
    sig = np.full(int(keep.sum()), float(sigma))
    return cond_mc_terms(nu, sig, rho, x, n, seed, workers=workers, backend=backend)


def ratio_vs_asymptotic(est: EstimateResult, approx) -> RatioVsAsymptotic:
    """Estimate / approximation, with the half-width mapped to the ratio scale.

    The denominator is deterministic, so the CI scales straight through.
    """
    value = float(approx.value) if hasattr(approx, "value") else float(approx)
    if not value > 0:
        raise ValueError("approximation value must be positive")
    return RatioVsAsymptotic(est.estimate / value, est.half_width95 / value)
