import math

import pytest

from mdiqss.device_model import DeviceParams
from mdiqss.errors import DomainError
from mdiqss.security_rates import (
    FiniteKeyBudget,
    asymptotic_point,
    asymptotic_rate,
    binary_entropy,
    finite_key_length,
    finite_rate,
    floored_error_rate,
    key_length_breakdown,
    mu_correction,
    sifted_asymptotic_rate,
    sifting_counts,
)


@pytest.mark.parametrize("x, expected", [(0.5, 1.0), (0.0, 0.0), (1.0, 0.0), (0.25, 0.811278)])
def test_binary_entropy(x, expected):
    assert binary_entropy(x) == pytest.approx(expected, abs=1e-6)


@pytest.mark.parametrize("x", [-0.1, 1.1])
def test_binary_entropy_domain(x):
    with pytest.raises(DomainError):
        binary_entropy(x)


def test_asymptotic_rate_examples():
    assert asymptotic_rate(1.0, 0.0, 0.0, 1.1) == 1.0
    assert asymptotic_rate(0.3, 0.5, 0.0, 1.1) == 0.0
    chain = asymptotic_point(DeviceParams(leg_distance=10)).rate_asymptotic
    assert chain == pytest.approx(0.0626, abs=5e-5)
    assert chain == pytest.approx(0.0625700830393214, rel=1e-12)


def test_mu_examples():
    assert mu_correction(0.01, 1e-10, 10**6, 10**6) == pytest.approx(8.585e-4, rel=1e-3)
    values = [mu_correction(0.01, 1e-10, 10**k, 10**k) for k in (4, 6, 8)]
    assert values[0] > values[1] > values[2] > 0
    assert mu_correction(0.01, 2e-10, 10**6, 10**6) < mu_correction(0.01, 1e-10, 10**6, 10**6)


@pytest.mark.parametrize(
    "args", [(0.01, 1e-10, 0, 10), (0.01, 1e-10, 10, 0), (0.0, 1e-10, 10, 10), (0.01, 1.0, 10, 10)]
)
def test_mu_domain(args):
    with pytest.raises(DomainError):
        mu_correction(*args)


def test_lambda_floor():
    assert floored_error_rate(0.0, 100) == 0.005
    assert floored_error_rate(1.0, 100) == 0.995
    assert floored_error_rate(0.2, 100) == 0.2


def test_sifting_examples():
    assert sifting_counts(8, 3, 1.0, 1.0, 0.5)[0] == 1
    m, ks = sifting_counts(10**6, 3, 1.0, 1.0, 0.5)
    assert ks == [250000, 250000]
    assert sifting_counts(10**6, 4, 0.0, 0.0) == (0, [0, 0, 0])
    with pytest.raises(DomainError):
        sifting_counts(10, 3, 1.0, 1.0, 1.0)


def _budget(m=10**8, k=10**8, subsets=2, **kw):
    return FiniteKeyBudget(n_total=10**12, m=m, k_j=(k,) * subsets, **kw)


def test_key_length_zero_cases():
    assert finite_key_length(_budget(m=0), [0.01, 0.01]) == 0
    assert finite_key_length(_budget(k=0), [0.01, 0.01]) == 0
    # h(E_Z + mu) >= q
    assert finite_key_length(_budget(q_prep=0.5), [0.2, 0.2]) == 0
    with pytest.raises(DomainError):
        finite_key_length(_budget(), [])
    with pytest.raises(DomainError):
        finite_key_length(_budget(), [0.01])


def test_large_block_ratio():
    h = binary_entropy(0.01)
    budget = _budget(leak_ec=1.1 * h * 10**8)
    length = finite_key_length(budget, [0.01, 0.01])
    ratio = length / 10**8 / (1 - h - 1.1 * h)
    assert abs(ratio - 1) < 0.03
    assert length == 82978965


def test_worst_subset_dominates():
    detail = key_length_breakdown(_budget(m=10**6, k=10**6, subsets=3), [0.01, 0.05, 0.02])
    assert detail.worst_subset == 1
    assert detail.key_length <= 10**6


def test_budget_validation():
    with pytest.raises(DomainError):
        _budget(eps_c=0.0)
    with pytest.raises(DomainError):
        _budget(q_prep=1.5)
    with pytest.raises(DomainError):
        _budget(m=-1)
    b = _budget(eps_s=4e-8)
    assert b.eps_bar == pytest.approx(1e-8) and b.eps_prime == pytest.approx(1e-8)


def test_finite_rate_eps_monotone():
    p = DeviceParams(n_parties=4, leg_distance=50)
    loose = finite_rate(p, 10**12, eps_s=1e-6).key_length
    tight = finite_rate(p, 10**12, eps_s=1e-12).key_length
    assert tight <= loose


def test_finite_rate_metadata():
    point = finite_rate(DeviceParams(n_parties=4, leg_distance=50), 10**12)
    for key in ("m", "k_j", "eps_c", "eps_s", "eps_bar", "eps_prime", "basis_bias", "q_prep", "lambda_floor"):
        assert key in point.metadata
    assert point.rate_finite == point.key_length / 10**12
    assert point.rate_asymptotic <= point.q_x_gain


def test_finite_rate_at_300km_is_positive():
    # the key at 300 km survives under this sifting model (see README, known deviations)
    assert finite_rate(DeviceParams(n_parties=4, leg_distance=300), 10**12).key_length == 40931


@pytest.mark.parametrize("n_total", [10**12, 10**16])
def test_large_n_converges_to_sifted_rate(n_total):
    p = DeviceParams(n_parties=4, leg_distance=50)
    target = sifted_asymptotic_rate(asymptotic_point(p), 4, p.f_ec)
    assert finite_rate(p, n_total).rate_finite / target == pytest.approx(1.0, abs=0.05)


def test_multiplexed_point_below_asymptote():
    p = DeviceParams(leg_distance=20)
    assert asymptotic_point(p, multiplexing=100).q_x_gain < asymptotic_point(p).q_x_gain


def test_rates_nonincreasing_in_distance():
    base = DeviceParams(n_parties=6)
    legs = [1, 10, 50, 100, 200, 300, 400]
    asym = [asymptotic_point(base.at_leg(x)).rate_asymptotic for x in legs]
    fin = [finite_rate(base.at_leg(x), 10**12).key_length for x in legs]
    assert asym == sorted(asym, reverse=True)
    assert fin == sorted(fin, reverse=True)


@pytest.mark.parametrize("lam", [0.0, 1e-9, 1e-4, 0.05])
@pytest.mark.parametrize("m", [50, 10**4, 10**7])
def test_optimal_mu_is_prefix_minimum(lam, m):
    from mdiqss.security_rates import optimal_mu

    eps = 2.5e-11
    best = math.inf
    for k in range(1, 1200):
        best = min(best, mu_correction(floored_error_rate(lam, k), eps, m, k))
        if k in (1, 7, 64, 65, 300, 1199):
            mu, used = optimal_mu(lam, eps, m, k)
            assert mu == best
            assert 1 <= used <= k


def test_zero_error_key_nondecreasing_in_k():
    # regression: the 1/(2k) floor alone made the key shrink as k grew
    lengths = [finite_key_length(_budget(m=369, k=k), [0.0, 0.0]) for k in (3092, 5829, 10**5)]
    assert lengths == sorted(lengths)
    lengths = [finite_key_length(_budget(m=10**6, k=k), [1e-8, 1e-8]) for k in (10**6, 4 * 10**6, 10**8)]
    assert lengths == sorted(lengths)
