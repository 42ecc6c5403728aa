"""Statistics of spatially multiplexed transmission with adaptive grouping.

Every party sends ``M`` photons per slot; each arrives independently with
probability ``eta``. The relay can form as many complete groups as the
worst-served party has arrivals, so the number of groups is the minimum of
``n`` independent Binomial(M, eta) counts. Each group then passes the GHZ
projection with probability ``q_ghz``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import stats

from .device_model import DeviceParams, arrival_probability
from .errors import DomainError

# beyond this many channels the tail sum is restricted to mean +/- _WINDOW_SD sd
_FULL_SUM_LIMIT = 1_000_000
_WINDOW_SD = 60.0
PRNG_ALGORITHM = "numpy Philox4x64-10, per-worker streams from SeedSequence(seed).spawn(workers)"


@dataclass(frozen=True)
class MultiplexConfig:
    m_channels: int
    n_parties: int
    eta: float
    q_ghz: float

    def __post_init__(self):
        if int(self.m_channels) != self.m_channels or self.m_channels < 1:
            raise DomainError(f"m_channels must be an integer >= 1, got {self.m_channels}")
        if int(self.n_parties) != self.n_parties or self.n_parties < 1:
            raise DomainError(f"n_parties must be a positive integer, got {self.n_parties}")
        for name in ("eta", "q_ghz"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")


def _log_survival(levels: np.ndarray, m: int, eta: float) -> np.ndarray:
    """log P(X >= level) for X ~ Binomial(m, eta)."""
    levels = np.asarray(levels)
    if eta == 0.0:
        return np.where(levels <= 0, 0.0, -np.inf)
    if eta == 1.0:
        return np.where(levels <= m, 0.0, -np.inf)
    out = stats.binom.logsf(levels - 1, m, eta)
    return np.where(levels <= 0, 0.0, out)


def min_arrival_pmf(cfg: MultiplexConfig, l: int) -> float:
    """P(min of the parties' arrival counts equals ``l``)."""
    if int(l) != l or not 0 <= l <= cfg.m_channels:
        raise DomainError(f"l must lie in [0, {cfg.m_channels}], got {l}")
    log_s = _log_survival(np.array([l, l + 1]), cfg.m_channels, cfg.eta)
    upper = cfg.n_parties * log_s[0]
    lower = cfg.n_parties * log_s[1]
    if upper == -np.inf:
        return 0.0
    # S_l^n - S_{l+1}^n without cancelling two numbers close to 1
    return float(np.exp(upper) * -np.expm1(lower - upper))


def expected_min_arrivals(cfg: MultiplexConfig) -> float:
    """E[min] via the tail sum  sum_{l>=1} P(X >= l)^n."""
    m, eta, n = cfg.m_channels, cfg.eta, cfg.n_parties
    if m <= _FULL_SUM_LIMIT:
        levels = np.arange(1, m + 1)
        return float(np.exp(n * _log_survival(levels, m, eta)).sum())
    mean, sd = m * eta, math.sqrt(m * eta * (1.0 - eta))
    lo = max(1, int(math.floor(mean - _WINDOW_SD * sd)))
    hi = min(m, int(math.ceil(mean + _WINDOW_SD * sd)))
    levels = np.arange(lo, hi + 1)
    # every level below the window has P(X >= l)^n == 1 to double precision
    return float(lo - 1 + np.exp(n * _log_survival(levels, m, eta)).sum())


def expected_groups(cfg: MultiplexConfig) -> float:
    """Mean number of successfully projected groups per slot."""
    if cfg.q_ghz == 0.0:
        return 0.0
    return cfg.q_ghz * expected_min_arrivals(cfg)


def finite_gain(cfg: MultiplexConfig) -> float:
    """Gain per channel use at finite multiplexing, ``N-bar / M``."""
    return expected_groups(cfg) / cfg.m_channels


def asymptotic_gain(params: DeviceParams, q_ghz: float) -> float:
    """Large-M gain: projection success times single-photon arrival probability."""
    if not 0.0 <= q_ghz <= 1.0:
        raise DomainError(f"q_ghz must lie in [0, 1], got {q_ghz}")
    return q_ghz * arrival_probability(params)


@dataclass(frozen=True)
class MonteCarloEstimate:
    estimate: float
    standard_error: float
    trials: int
    seed: int
    workers: int
    algorithm: str = PRNG_ALGORITHM

    def __iter__(self):
        return iter((self.estimate, self.standard_error))


def _simulate_chunk(cfg: MultiplexConfig, trials: int, seed_seq: np.random.SeedSequence):
    rng = np.random.Generator(np.random.Philox(seed_seq))
    arrivals = rng.binomial(cfg.m_channels, cfg.eta, size=(trials, cfg.n_parties))
    groups = arrivals.min(axis=1)
    successes = rng.binomial(groups, cfg.q_ghz)
    per_channel = successes / cfg.m_channels
    return per_channel.sum(), np.square(per_channel).sum()


def monte_carlo_gain(cfg: MultiplexConfig, trials: int, seed: int, workers: int = 1) -> MonteCarloEstimate:
    """Sampled successful groups per channel, with its standard error.

    Trials are split into ``workers`` contiguous chunks, each with its own
    spawned stream, so the result depends only on ``(seed, workers)``.
    """
    if int(trials) != trials or trials < 1:
        raise DomainError(f"trials must be a positive integer, got {trials}")
    if workers < 1:
        raise DomainError("workers must be >= 1")
    workers = min(workers, trials)
    children = np.random.SeedSequence(seed).spawn(workers)
    sizes = [trials // workers + (1 if i < trials % workers else 0) for i in range(workers)]
    if workers == 1:
        results = [_simulate_chunk(cfg, sizes[0], children[0])]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _simulate_chunk(cfg, *a), zip(sizes, children)))
    total = sum(r[0] for r in results)
    total_sq = sum(r[1] for r in results)
    mean = total / trials
    if trials > 1:
        var = max(total_sq - trials * mean * mean, 0.0) / (trials - 1)
        se = math.sqrt(var / trials)
    else:
        se = 0.0
    return MonteCarloEstimate(float(mean), float(se), int(trials), int(seed), int(workers))


def write_convergence_csv(
    path: str | Path, n_parties: int, eta: float, q_ghz: float, m_values: Iterable[int]
) -> None:
    """Dump ``(M, N-bar, N-bar / (M q eta))`` rows for a range of multiplexing sizes."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["m_channels", "expected_groups", "ratio_to_asymptote"])
        for m in m_values:
            cfg = MultiplexConfig(int(m), n_parties, eta, q_ghz)
            groups = expected_groups(cfg)
            limit = m * q_ghz * eta
            ratio = groups / limit if limit > 0 else 0.0
            writer.writerow([int(m), f"{groups:.9g}", f"{ratio:.9g}"])
