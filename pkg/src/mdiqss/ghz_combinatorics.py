"""Closed-form gain and error rates of the linear-optical GHZ analyzer.

The analyzer is a cyclic ring of polarizing beam splitters followed by a
half-wave plate and an H/V detector pair on every output mode. For Z-basis
inputs H photons stay in their mode and V photons move one mode on, so an
input with ``k`` V photons arranged in ``l`` cyclic runs leaves ``l`` modes
empty, ``l`` modes doubly occupied and ``n - 2l`` singly occupied.

All quantities average uniformly over the ``2**n`` equiprobable input
patterns of a basis, so every gain returned here is a probability.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .device_model import ClickModel
from .errors import DomainError

# above this many parties sums are evaluated in log space
LOG_SPACE_THRESHOLD = 20


class Projection(enum.Enum):
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"


@dataclass(frozen=True)
class GhzProjectionStats:
    n_parties: int
    q_ghz_z: float
    q_ghz_x: float
    e_z: float
    e_x: float


@dataclass(frozen=True)
class ParityCases:
    """Per-input projection probabilities in the X basis.

    ``even_plus`` is the probability that an input with an even number of
    ``|->`` photons is projected onto Phi+, and so on. Inputs with an even
    (odd) count should land on Phi+ (Phi-).
    """

    even_plus: float
    even_minus: float
    odd_plus: float
    odd_minus: float


def _check_n(n: int) -> None:
    if int(n) != n or n < 3:
        raise DomainError(f"the analyzer needs n >= 3 parties, got {n}")


def arrangement_count(n: int, k: int, l: int) -> int:
    """Number of V-placements with ``k`` V photons forming ``l`` cyclic runs.

    Equivalently the number of inputs with ``l`` empty (and ``l`` doubly
    occupied) analyzer modes. Counted over labelled positions on the ring.
    """
    if not (n >= 2 and 1 <= k <= n - 1):
        raise DomainError(f"need 1 <= k <= n-1, got n={n}, k={k}")
    if not 1 <= l <= min(k, n - k):
        raise DomainError(f"need 1 <= l <= min(k, n-k), got l={l}")
    numerator = n * math.comb(k - 1, l - 1) * math.comb(n - k - 1, l - 1)
    count, remainder = divmod(numerator, l)
    assert remainder == 0
    return count


def printed_arrangement_count(n: int, k: int, l: int) -> Fraction:
    """Literal published expression for the arrangement count.

    Kept for comparison: it matches :func:`arrangement_count` for ``l = 1``,
    the ``l = k = n/2`` critical case and every ``n <= 4``, but undercounts
    or overcounts elsewhere (e.g. ``(6, 2, 2)`` gives 15/2 against 9).
    """
    if not (1 <= k <= n - 1 and 1 <= l <= min(k, n - k)):
        raise DomainError(f"indices out of range: n={n}, k={k}, l={l}")
    if l == 1:
        return Fraction(n)
    fact = math.factorial

    def comb(a, b):
        return math.comb(a, b) if 0 <= b <= a else 0

    if n % 2 == 0 and l == k == n // 2:
        return Fraction(2 * fact(n - k - 1), fact(l - 1) * fact(n - 2 * k))
    bracket = Fraction(comb(k + 1, l) - comb(k - 1, l - 2), fact(l - 1)) + Fraction(
        comb(k - 1, l - 1), fact(l)
    )
    return bracket * Fraction(fact(n - k - 1), fact(n - k - l))


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _exp(x: float) -> float:
    return math.exp(x) if x > -math.inf else 0.0


def coincidence_probability(n: int, l: int, clicks: ClickModel) -> float:
    """n-fold coincidence probability for an input leaving ``l`` modes empty."""
    if int(l) != l or l < 0 or 2 * l > n:
        raise DomainError(f"need 0 <= 2l <= n, got n={n}, l={l}")
    if n > LOG_SPACE_THRESHOLD:
        log_f = (
            l * math.log(2.0)
            + l * _log(clicks.x2)
            + l * _log(clicks.x0)
            + (n - 2 * l) * _log(clicks.x1)
        )
        return _exp(log_f)
    return 2.0**l * clicks.x2**l * clicks.x0**l * clicks.x1 ** (n - 2 * l)


def mixed_pattern_gain(n: int, k: int, clicks: ClickModel) -> float:
    """Summed gain of all inputs with ``k`` V photons, already weighted by 2**-n."""
    _check_n(n)
    if not 1 <= k <= n - 1:
        raise DomainError(f"need 1 <= k <= n-1, got {k}")
    if k > n / 2:
        k = n - k
    total = 0.0
    for l in range(1, min(k, n - k) + 1):
        f = coincidence_probability(n, l, clicks)
        if f == 0.0:
            continue
        g = arrangement_count(n, k, l)
        if n > LOG_SPACE_THRESHOLD:
            total += _exp(math.log(g) + math.log(f) - n * math.log(2.0))
        else:
            total += g * f / 2.0**n
    return total


def _uniform_gain(n: int, clicks: ClickModel) -> float:
    """Gain of the two uniform inputs (all H, all V) weighted by 2**-n."""
    if n > LOG_SPACE_THRESHOLD:
        return _exp((1 - n) * math.log(2.0) + n * _log(clicks.x1))
    return 2.0 ** (1 - n) * clicks.x1**n


def _all_mixed_gain(n: int, clicks: ClickModel) -> float:
    return sum(mixed_pattern_gain(n, k, clicks) for k in range(1, n))


def z_basis_stats(n: int, clicks: ClickModel) -> tuple[float, float]:
    """``(Q_Z^GHZ, E_Z)``: any success on a non-uniform input is an error."""
    _check_n(n)
    mixed = _all_mixed_gain(n, clicks)
    gain = _uniform_gain(n, clicks) + mixed
    error = mixed / gain if gain > 0 else 0.0
    return gain, error


def _error_parity_sums(n: int, clicks: ClickModel) -> tuple[float, float]:
    """Probabilities of an even / odd number of erroneous clicks over n photons."""
    even = odd = 0.0
    log_space = n > LOG_SPACE_THRESHOLD
    for j in range(n + 1):
        if log_space:
            term = _exp(
                math.log(math.comb(n, j)) + j * _log(clicks.x1E) + (n - j) * _log(clicks.x1C)
            )
        else:
            term = math.comb(n, j) * clicks.x1E**j * clicks.x1C ** (n - j)
        if j % 2:
            odd += term
        else:
            even += term
    return even, odd


def parity_case_probabilities(n: int, clicks: ClickModel) -> ParityCases:
    """Projection probabilities for one X-basis input, by parity of its ``|->`` count.

    The uniform (all-H plus all-V) branch reaches the analyzer as a GHZ state
    of the right sign and is read out correctly unless an odd number of modes
    give an erroneous click. Non-uniform branches leave a vacuum mode whose
    dark click is equally likely on H or V, so their successes split evenly.
    """
    _check_n(n)
    even_err, odd_err = _error_parity_sums(n, clicks)
    ghz_weight = 2.0 ** (1 - n) if n <= LOG_SPACE_THRESHOLD else _exp((1 - n) * math.log(2.0))
    half_mixed = 0.5 * _all_mixed_gain(n, clicks)
    right = ghz_weight * even_err + half_mixed
    wrong = ghz_weight * odd_err + half_mixed
    return ParityCases(even_plus=right, even_minus=wrong, odd_plus=wrong, odd_minus=right)


def x_basis_stats(n: int, clicks: ClickModel) -> tuple[float, float]:
    """``(Q_X^GHZ, E_X)``; the gain equals the Z-basis gain."""
    _check_n(n)
    gain, _ = z_basis_stats(n, clicks)
    cases = parity_case_probabilities(n, clicks)
    n_even = sum(math.comb(n, j) for j in range(0, n + 1, 2))
    n_odd = sum(math.comb(n, j) for j in range(1, n + 1, 2))
    # integer true division keeps the weights exact for any n
    errors = (n_even / 2**n) * cases.even_minus + (n_odd / 2**n) * cases.odd_plus
    error = errors / gain if gain > 0 else 0.0
    return gain, error


@lru_cache(maxsize=4096)
def ghz_projection_stats(n: int, clicks: ClickModel) -> GhzProjectionStats:
    q_z, e_z = z_basis_stats(n, clicks)
    q_x, e_x = x_basis_stats(n, clicks)
    return GhzProjectionStats(n_parties=n, q_ghz_z=q_z, q_ghz_x=q_x, e_z=e_z, e_x=e_x)


def classify_parity(n: int, v_click_count: int) -> Projection:
    """Read the projection off the number of V-detector clicks.

    Odd ``n``: an even count means Phi+. Even ``n``: the assignment swaps.
    """
    if not 0 <= v_click_count <= n:
        raise DomainError(f"v_click_count must lie in [0, {n}], got {v_click_count}")
    even_clicks = v_click_count % 2 == 0
    if n % 2 == 1:
        return Projection.PHI_PLUS if even_clicks else Projection.PHI_MINUS
    return Projection.PHI_MINUS if even_clicks else Projection.PHI_PLUS
