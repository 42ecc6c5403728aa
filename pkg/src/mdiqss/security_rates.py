"""Asymptotic key rate and composable finite-size key length."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .device_model import DeviceParams, arrival_probability, build_click_model
from .errors import DomainError
from .ghz_combinatorics import ghz_projection_stats
from .multiplexing import MultiplexConfig, asymptotic_gain, finite_gain

DEFAULT_EPS_C = 1e-15
DEFAULT_EPS_S = 1e-10
DEFAULT_BASIS_BIAS = 0.5


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def asymptotic_rate(q_x: float, e_z: float, e_x: float, f_ec: float) -> float:
    """Key bits per pulse: X-basis gain minus privacy-amplification and EC costs."""
    return max(0.0, q_x * (1.0 - binary_entropy(e_z) - f_ec * binary_entropy(e_x)))


def mu_correction(lam: float, eps: float, m: int, k_j: int) -> float:
    """Statistical deviation allowed between key-round and test-round error rates.

    ``lam`` must lie strictly inside (0, 1); callers floor an observed zero
    (see :func:`floored_error_rate`).
    """
    if m < 1 or k_j < 1:
        raise DomainError(f"mu needs m, k_j >= 1, got m={m}, k_j={k_j}")
    if not 0.0 < lam < 1.0:
        raise DomainError(f"mu needs lambda in (0, 1), got {lam}")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"mu needs eps in (0, 1), got {eps}")
    m, k_j = float(m), float(k_j)
    total = m + k_j
    a = max(m, k_j)
    var = lam * (1.0 - lam)
    g = total / (m * k_j) * math.log(total / (2.0 * math.pi * m * k_j * var * eps**2))
    if g <= 0.0:
        # the logarithm only goes negative for absurdly loose eps; no penalty is then owed
        return 0.0
    ag = a * g / total
    numerator = (1.0 - 2.0 * lam) * ag + math.sqrt(ag**2 + 4.0 * var * g)
    denominator = 2.0 + 2.0 * a * a * g / total**2
    return numerator / denominator


def floored_error_rate(lam: float, k_j: int) -> float:
    """Keep ``lam`` at least half a test-round error away from 0 and 1."""
    floor = 1.0 / (2.0 * k_j)
    return min(max(lam, floor), 1.0 - floor)


# test-round counts up to this are scanned one by one when minimizing mu
_SCAN_LIMIT = 64


def _floored_mu(lam: float, eps: float, m: int, k: int) -> float:
    return mu_correction(floored_error_rate(lam, k), eps, m, k)


def _argmin_unimodal(fn, lo: int, hi: int) -> int:
    """Integer argmin of a function that falls then rises on [lo, hi]."""
    while hi - lo > 2:
        a = lo + (hi - lo) // 3
        b = hi - (hi - lo) // 3
        if fn(a) <= fn(b):
            hi = b
        else:
            lo = a
    return min(range(lo, hi + 1), key=fn)


def optimal_mu(lam: float, eps: float, m: int, k_j: int) -> tuple[float, int]:
    """Smallest floored mu over using ``k' <= k_j`` of the test rounds.

    With a (near) zero observed error the floor ``1/(2k')`` moves with the
    test-round count, and the log term makes mu grow again for large ``k'``.
    Using fewer rounds for parameter estimation is a data-independent protocol
    choice, so the bound may take the best ``k'``; this keeps the key length
    nondecreasing in ``k_j``. Returns ``(mu, k_used)``.
    """
    if m < 1 or k_j < 1:
        raise DomainError(f"mu needs m, k_j >= 1, got m={m}, k_j={k_j}")
    # beyond k_free the floor no longer binds and mu falls with k'
    k_free = k_j + 1 if lam * 2.0 * (k_j + 1) <= 1.0 else math.ceil(1.0 / (2.0 * lam))
    candidates = []
    if k_j >= k_free:
        candidates.append((_floored_mu(lam, eps, m, k_j), k_j))
    top = min(k_j, k_free - 1)
    for k in range(1, min(top, _SCAN_LIMIT) + 1):
        candidates.append((_floored_mu(lam, eps, m, k), k))
    if top > _SCAN_LIMIT:
        fn = lambda k: _floored_mu(lam, eps, m, k)  # noqa: E731
        best = _argmin_unimodal(fn, _SCAN_LIMIT + 1, top)
        candidates.append((fn(best), best))
    return min(candidates, key=lambda c: (c[0], -c[1]))


def sifting_counts(
    n_total: int, n_parties: int, q_x_gain: float, q_z_gain: float, basis_bias: float = DEFAULT_BASIS_BIAS
) -> tuple[int, list[int]]:
    """Key rounds ``m`` and per-subset test rounds ``k_j`` from a signal budget.

    Key rounds need every party in X (probability ``bias**n``). A test round
    for untrusted subset ``j`` needs only the dealer and the complementary
    player in Z (probability ``(1 - bias)**2``).
    """
    if not 0.0 < basis_bias < 1.0:
        raise DomainError(f"basis_bias must lie in (0, 1), got {basis_bias}")
    if n_total < 1:
        raise DomainError("n_total must be >= 1")
    m = math.floor(n_total * q_x_gain * basis_bias**n_parties)
    k = math.floor(n_total * q_z_gain * (1.0 - basis_bias) ** 2)
    return int(m), [int(k)] * (n_parties - 1)


@dataclass(frozen=True)
class FiniteKeyBudget:
    n_total: int
    m: int
    k_j: tuple[int, ...]
    eps_c: float = DEFAULT_EPS_C
    eps_s: float = DEFAULT_EPS_S
    eps_bar: float | None = None
    eps_prime: float | None = None
    q_prep: float = 1.0
    leak_ec: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "k_j", tuple(int(k) for k in self.k_j))
        if self.eps_bar is None:
            object.__setattr__(self, "eps_bar", self.eps_s / 4.0)
        if self.eps_prime is None:
            object.__setattr__(self, "eps_prime", self.eps_s / 4.0)
        for name in ("eps_c", "eps_s", "eps_bar", "eps_prime"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise DomainError(f"{name} must lie in (0, 1), got {value}")
        if self.m < 0 or any(k < 0 for k in self.k_j):
            raise DomainError("round counts must be >= 0")
        if not 0.0 <= self.q_prep <= 1.0:
            raise DomainError(f"q_prep must lie in [0, 1], got {self.q_prep}")
        if self.leak_ec < 0:
            raise DomainError("leak_ec must be >= 0")


@dataclass(frozen=True)
class KeyLengthBreakdown:
    key_length: int
    raw_length: float
    worst_subset: int | None
    mu: tuple[float, ...]
    lambda_floor: tuple[float, ...]
    k_used: tuple[int, ...]
    correctness_penalty: float


def key_length_breakdown(budget: FiniteKeyBudget, e_z_marginals: Sequence[float]) -> KeyLengthBreakdown:
    if len(e_z_marginals) == 0:
        raise DomainError("need one marginal Z error per untrusted subset")
    if len(e_z_marginals) != len(budget.k_j):
        raise DomainError(f"{len(e_z_marginals)} marginals for {len(budget.k_j)} subsets")
    penalty = math.log2(4.0 / (budget.eps_c * budget.eps_bar**2))
    if budget.m == 0 or any(k == 0 for k in budget.k_j):
        # without key rounds or test rounds nothing can be certified
        return KeyLengthBreakdown(0, -penalty, None, (), (), (), penalty)
    mus, floors, entropies, used = [], [], [], []
    for e_z, k in zip(e_z_marginals, budget.k_j):
        mu, k_used = optimal_mu(e_z, budget.eps_prime, budget.m, k)
        floors.append(floored_error_rate(e_z, k_used))
        mus.append(mu)
        used.append(k_used)
        # h is capped at its maximum once the corrected rate passes 1/2
        entropies.append(binary_entropy(min(e_z + mu, 0.5)))
    worst = max(range(len(entropies)), key=entropies.__getitem__)
    raw = budget.m * (budget.q_prep - entropies[worst]) - budget.leak_ec - penalty
    length = max(0, math.floor(raw))
    return KeyLengthBreakdown(length, raw, worst, tuple(mus), tuple(floors), tuple(used), penalty)


def finite_key_length(budget: FiniteKeyBudget, e_z_marginals: Sequence[float]) -> int:
    """Extractable key bits; floored to an integer and clamped at zero."""
    return key_length_breakdown(budget, e_z_marginals).key_length


@dataclass(frozen=True)
class RatePoint:
    q_x_gain: float
    e_x: float
    e_z: float
    rate_asymptotic: float
    key_length: int | None = None
    rate_finite: float | None = None
    metadata: dict = field(default_factory=dict, compare=False)


def _gains(params: DeviceParams, multiplexing: int | None):
    stats = ghz_projection_stats(params.n_parties, build_click_model(params))
    if multiplexing is None:
        q_x = asymptotic_gain(params, stats.q_ghz_x)
        q_z = asymptotic_gain(params, stats.q_ghz_z)
    else:
        eta = arrival_probability(params)
        q_x = finite_gain(MultiplexConfig(multiplexing, params.n_parties, eta, stats.q_ghz_x))
        q_z = finite_gain(MultiplexConfig(multiplexing, params.n_parties, eta, stats.q_ghz_z))
    return stats, q_x, q_z


def asymptotic_point(params: DeviceParams, multiplexing: int | None = None) -> RatePoint:
    """Gain, error rates and asymptotic key rate; ``multiplexing=None`` means M -> infinity."""
    stats, q_x, _ = _gains(params, multiplexing)
    rate = asymptotic_rate(q_x, stats.e_z, stats.e_x, params.f_ec)
    return RatePoint(q_x, stats.e_x, stats.e_z, rate)


def finite_rate(
    params: DeviceParams,
    n_total: int,
    eps_c: float = DEFAULT_EPS_C,
    eps_s: float = DEFAULT_EPS_S,
    *,
    basis_bias: float = DEFAULT_BASIS_BIAS,
    q_prep: float = 1.0,
    multiplexing: int | None = None,
) -> RatePoint:
    """Full chain from device parameters to finite-size key bits per signal slot."""
    stats, q_x, q_z = _gains(params, multiplexing)
    m, k_j = sifting_counts(n_total, params.n_parties, q_x, q_z, basis_bias)
    budget = FiniteKeyBudget(
        n_total=n_total,
        m=m,
        k_j=k_j,
        eps_c=eps_c,
        eps_s=eps_s,
        q_prep=q_prep,
        leak_ec=params.f_ec * binary_entropy(stats.e_x) * m,
    )
    marginals = [stats.e_z] * (params.n_parties - 1)
    detail = key_length_breakdown(budget, marginals)
    metadata = {
        "m": m,
        "k_j": k_j[0] if k_j else 0,
        "eps_c": eps_c,
        "eps_s": eps_s,
        "eps_bar": budget.eps_bar,
        "eps_prime": budget.eps_prime,
        "basis_bias": basis_bias,
        "q_prep": q_prep,
        "lambda_floor": detail.lambda_floor[0] if detail.lambda_floor else None,
        "k_pe_used": detail.k_used[0] if detail.k_used else 0,
    }
    return RatePoint(
        q_x_gain=q_x,
        e_x=stats.e_x,
        e_z=stats.e_z,
        rate_asymptotic=asymptotic_rate(q_x, stats.e_z, stats.e_x, params.f_ec),
        key_length=detail.key_length,
        rate_finite=detail.key_length / n_total,
        metadata=metadata,
    )


def sifted_asymptotic_rate(point: RatePoint, n_parties: int, f_ec: float,
                           basis_bias: float = DEFAULT_BASIS_BIAS, q_prep: float = 1.0) -> float:
    """Asymptotic rate with the key-round sifting factor applied, the N -> infinity target."""
    per_round = q_prep - binary_entropy(point.e_z) - f_ec * binary_entropy(point.e_x)
    return max(0.0, point.q_x_gain * basis_bias**n_parties * per_round)
