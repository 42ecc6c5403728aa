import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdiqss import _kernels


def brute_permanent(a):
    import itertools

    n = a.shape[0]
    return sum(np.prod([a[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n)))


def random_batch(rng, batch, n):
    return rng.normal(size=(batch, n, n)) + 1j * rng.normal(size=(batch, n, n))


@pytest.mark.parametrize("n", range(1, 7))
def test_numpy_permanent_matches_brute_force(n):
    mats = random_batch(np.random.default_rng(n), 4, n)
    got = _kernels.permanents_numpy(mats)
    for m, g in zip(mats, got):
        assert g == pytest.approx(brute_permanent(m), rel=1e-10, abs=1e-10)


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
@pytest.mark.parametrize("n", range(1, 7))
def test_numba_permanent_matches_numpy(n):
    mats = random_batch(np.random.default_rng(100 + n), 16, n)
    np.testing.assert_allclose(
        _kernels.permanents_numba(mats), _kernels.permanents_numpy(mats), rtol=1e-11, atol=1e-11
    )


def test_identity_permanent():
    assert _kernels.batch_permanents(np.eye(5)[None].astype(complex))[0] == pytest.approx(1.0)


@st.composite
def click_inputs(draw):
    k = draw(st.integers(1, 4))
    d = draw(st.integers(1, 6))
    probs = draw(st.lists(st.floats(0, 1), min_size=k * d, max_size=k * d))
    weights = draw(st.lists(st.floats(0, 1), min_size=k, max_size=k))
    return np.array(probs).reshape(k, d), np.array(weights)


@given(click_inputs())
@settings(max_examples=60, deadline=None)
def test_click_joint_paths_agree(data):
    probs, weights = data
    ref = _kernels.click_joint_numpy(probs, weights)
    assert ref.sum() == pytest.approx(weights.sum(), abs=1e-12)
    if _kernels.HAVE_NUMBA:
        np.testing.assert_allclose(_kernels.click_joint_numba(probs, weights), ref, atol=1e-14)


def test_click_joint_single_detector():
    out = _kernels.click_joint(np.array([[0.3]]), np.array([1.0]))
    assert out == pytest.approx([0.7, 0.3])


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("true", "numpy"), ("0", None), ("", None)])
def test_env_flag_selects_backend(flag, expected):
    env = dict(os.environ, MDIQSS_DISABLE_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from mdiqss._kernels import backend_name; print(backend_name())"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    ).stdout.strip()
    if expected is None:
        expected = "numba" if _kernels.HAVE_NUMBA else "numpy"
    assert out == expected


def test_oracle_identical_under_both_backends():
    code = (
        "from mdiqss.optical_oracle import oracle_stats;"
        "print(repr(tuple(oracle_stats(4, 'X', 0.5, 1e-3))))"
    )
    results = set()
    for flag in ("1", "0"):
        env = dict(os.environ, MDIQSS_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        results.add(tuple(float(x) for x in out.stdout.strip("()\n").split(",")))
    a, b = results if len(results) == 2 else (results.pop(),) * 2
    assert a == pytest.approx(b, abs=1e-14)
