"""Repeaterless benchmark bounds, bound crossings and QDS signature rates."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device_model import DeviceParams, channel_leg_transmittance
from .errors import DomainError
from .security_rates import (
    DEFAULT_BASIS_BIAS,
    DEFAULT_EPS_C,
    DEFAULT_EPS_S,
    asymptotic_point,
    finite_rate,
)

# total dealer-to-player distance in km -> signatures per second
TABLE1_REFERENCE = {20.0: 162.0, 50.0: 93.0}
QDS_CLOCK_HZ = 1e6
# key bits per signature: three times the order-128 irreducible polynomial
QDS_CONSUMPTION_BITS = 384


@dataclass(frozen=True)
class BoundPoint:
    eta_end_to_end: float
    plob: float
    direct_bound: float


def plob_bound(eta: float) -> float:
    """Secret-key capacity ``-log2(1 - eta)`` of a pure-loss channel."""
    if not 0.0 <= eta <= 1.0:
        raise DomainError(f"eta must lie in [0, 1), got {eta}")
    if eta == 1.0:
        raise DomainError("a lossless channel has unbounded capacity")
    return -math.log1p(-eta) / math.log(2.0)


def direct_transmission_bound(eta: float, n_parties: int) -> float:
    """Star-network bound: the dealer runs ``n - 1`` point-to-point links."""
    if int(n_parties) != n_parties or n_parties < 3:
        raise DomainError(f"secret sharing needs n_parties >= 3, got {n_parties}")
    return plob_bound(eta) / (n_parties - 1)


def end_to_end_transmittance(params: DeviceParams) -> float:
    """User-relay-user transmittance; each leg contributes its square root."""
    return channel_leg_transmittance(params) ** 2


def bound_point(params: DeviceParams) -> BoundPoint:
    eta = end_to_end_transmittance(params)
    return BoundPoint(eta, plob_bound(eta), direct_transmission_bound(eta, params.n_parties))


def rate_bound_gap(params: DeviceParams, leg_km: float) -> float:
    leg = params.at_leg(leg_km)
    eta = end_to_end_transmittance(leg)
    if eta >= 1.0:
        return -math.inf
    return asymptotic_point(leg).rate_asymptotic - direct_transmission_bound(eta, leg.n_parties)


def crossing_distance(
    params: DeviceParams,
    search_range: tuple[float, float] = (0.0, 500.0),
    coarse_step: float = 1.0,
    resolution: float = 0.01,
) -> float | None:
    """Smallest leg distance where the asymptotic rate overtakes the direct bound.

    A coarse scan brackets the first sign change of (rate - bound), then
    bisection narrows it to ``resolution`` km. Returns None without a crossing.
    """
    lo, hi = search_range
    if not 0 <= lo < hi:
        raise DomainError(f"bad search range {search_range}")
    grid = np.arange(lo, hi + coarse_step / 2, coarse_step)
    grid = grid[grid > 0]
    prev_x = None
    for x in grid:
        gap = rate_bound_gap(params, float(x))
        if gap > 0:
            if prev_x is None:
                return float(x)
            a, b = prev_x, float(x)
            while b - a > resolution:
                mid = 0.5 * (a + b)
                if rate_bound_gap(params, mid) > 0:
                    b = mid
                else:
                    a = mid
            return b
        prev_x = float(x)
    return None


def log_slope(fn, x0: float, x1: float) -> float:
    """d ln(fn) / dx estimated from the two window endpoints."""
    y0, y1 = fn(x0), fn(x1)
    if y0 <= 0 or y1 <= 0:
        raise DomainError("log slope needs positive values at both ends")
    return (math.log(y1) - math.log(y0)) / (x1 - x0)


def rate_to_bound_slope_ratio(params: DeviceParams, window: tuple[float, float]) -> float:
    """Ratio of the key-rate log-slope to the direct-bound log-slope over ``window`` (km)."""
    rate_slope = log_slope(lambda x: asymptotic_point(params.at_leg(x)).rate_asymptotic, *window)
    bound_slope = log_slope(lambda x: bound_point(params.at_leg(x)).direct_bound, *window)
    return rate_slope / bound_slope


def qds_signature_rate(rate_per_pulse: float, clock_hz: float, sig_consumption_bits: int) -> float:
    """Signatures per second when each signature consumes a fixed number of key bits."""
    if sig_consumption_bits <= 0:
        raise DomainError("signature key consumption must be at least one bit")
    if rate_per_pulse < 0 or clock_hz < 0:
        raise DomainError("rate and clock must be non-negative")
    return rate_per_pulse * clock_hz / sig_consumption_bits


@dataclass(frozen=True)
class SignatureRow:
    total_distance_km: float
    leg_distance_km: float
    rate_per_pulse: float
    signature_rate_tps: float
    reference_tps: float | None


def table1_rows(
    params: DeviceParams | None = None,
    clock_hz: float = QDS_CLOCK_HZ,
    sig_consumption_bits: int = QDS_CONSUMPTION_BITS,
    total_distances: tuple[float, ...] = (20.0, 50.0),
) -> list[SignatureRow]:
    """Signature rates for three-party QDS keys, relay at the midpoint."""
    params = params or DeviceParams(n_parties=3)
    rows = []
    for total in total_distances:
        leg = total / 2.0
        rate = asymptotic_point(params.at_leg(leg)).rate_asymptotic
        rows.append(
            SignatureRow(
                total_distance_km=total,
                leg_distance_km=leg,
                rate_per_pulse=rate,
                signature_rate_tps=qds_signature_rate(rate, clock_hz, sig_consumption_bits),
                reference_tps=TABLE1_REFERENCE.get(float(total)),
            )
        )
    return rows


def finite_cutoff_distance(
    params: DeviceParams,
    n_total: int,
    eps_c: float = DEFAULT_EPS_C,
    eps_s: float = DEFAULT_EPS_S,
    *,
    basis_bias: float = DEFAULT_BASIS_BIAS,
    q_prep: float = 1.0,
    multiplexing: int | None = None,
    search_max: float = 2000.0,
    coarse_step: float = 10.0,
    resolution: float = 0.01,
) -> float | None:
    """Smallest leg distance at which the finite-size key length drops to zero.

    The key length only shrinks with distance, so a coarse forward scan finds
    the first zero and bisection refines it. Returns None if the key survives
    up to ``search_max`` km.
    """
    if search_max <= 0 or coarse_step <= 0:
        raise DomainError("search_max and coarse_step must be positive")

    def has_key(leg: float) -> bool:
        point = finite_rate(
            params.at_leg(leg), n_total, eps_c, eps_s,
            basis_bias=basis_bias, q_prep=q_prep, multiplexing=multiplexing,
        )
        return point.key_length > 0

    if not has_key(resolution):
        return 0.0
    a = resolution
    b = a
    while True:
        b = min(b + coarse_step, search_max)
        if not has_key(b):
            break
        if b >= search_max:
            return None
        a = b
    while b - a > resolution:
        mid = 0.5 * (a + b)
        if has_key(mid):
            a = mid
        else:
            b = mid
    return b
