"""Inner-loop kernels for the optical oracle.

Each kernel exists twice: a numba ``@njit`` version and a vectorised numpy
version. The numba path is used when numba imports and the environment
variable ``MDIQSS_DISABLE_NUMBA`` is unset (or ``0``/``false``). Both paths
return the same numbers to rounding; ``bench/bench_kernels.py`` times them.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _numba_disabled() -> bool:
    flag = os.environ.get("MDIQSS_DISABLE_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no", "off")


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _numba_disabled()


# --- batch permanents -------------------------------------------------------

def permanents_numpy(mats: np.ndarray) -> np.ndarray:
    """Ryser's formula, vectorised over the leading batch axis."""
    mats = np.asarray(mats, dtype=np.complex128)
    batch, n, n2 = mats.shape
    if n != n2:
        raise ValueError("permanent needs square matrices")
    if n == 0:
        return np.ones(batch, dtype=np.complex128)
    subsets = ((np.arange(1, 1 << n)[:, None] >> np.arange(n)) & 1).astype(np.float64)
    sizes = subsets.sum(axis=1)
    signs = np.where((n - sizes) % 2 == 0, 1.0, -1.0)
    # row sums restricted to each column subset: (batch, n, n_subsets)
    row_sums = mats @ subsets.T
    return np.prod(row_sums, axis=1) @ signs


def _permanents_numba_impl(mats):
    batch = mats.shape[0]
    n = mats.shape[1]
    out = np.empty(batch, dtype=np.complex128)
    if n == 0:
        out[:] = 1.0
        return out
    # Glynn's formula with Gray-code ordering of the sign vectors
    n_gray = 1 << (n - 1)
    row_comb = np.empty(n, dtype=np.complex128)
    for b in range(batch):
        a = mats[b]
        for j in range(n):
            s = 0.0 + 0.0j
            for i in range(n):
                s += a[i, j]
            row_comb[j] = s
        total = 0.0 + 0.0j
        sign = 1.0
        delta = np.ones(n, dtype=np.float64)
        prev_gray = 0
        for k in range(n_gray):
            prod = 1.0 + 0.0j
            for j in range(n):
                prod *= row_comb[j]
            total += sign * prod
            if k + 1 == n_gray:
                break
            gray = (k + 1) ^ ((k + 1) >> 1)
            changed = gray ^ prev_gray
            i = 0
            while (changed >> i) & 1 == 0:
                i += 1
            # rows 1..n-1 carry flippable signs; row 0 stays +1
            row = i + 1
            delta[row] = -delta[row]
            for j in range(n):
                row_comb[j] += 2.0 * delta[row] * a[row, j]
            sign = -sign
            prev_gray = gray
        out[b] = total / n_gray
    return out


# --- threshold-detector joint click distribution ----------------------------

def click_joint_numpy(click_probs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted mixture of independent-detector click distributions.

    ``click_probs[k, d]`` is the click probability of detector ``d`` for
    occupation configuration ``k``. Returns a dense vector indexed by click
    bitmask (bit ``d`` set when detector ``d`` fired).
    """
    click_probs = np.asarray(click_probs, dtype=np.float64)
    joint = np.asarray(weights, dtype=np.float64)[:, None]
    for d in range(click_probs.shape[1]):
        c = click_probs[:, d : d + 1]
        joint = np.concatenate((joint * (1.0 - c), joint * c), axis=1)
    return joint.sum(axis=0)


def _click_joint_numba_impl(click_probs, weights):
    n_cfg, n_det = click_probs.shape
    size = 1 << n_det
    out = np.zeros(size, dtype=np.float64)
    work = np.empty(size, dtype=np.float64)
    for k in range(n_cfg):
        w = weights[k]
        if w == 0.0:
            continue
        work[0] = w
        # detector d doubles the populated prefix: bit d clear / set
        for d in range(n_det):
            c = click_probs[k, d]
            half = 1 << d
            for mask in range(half):
                p = work[mask]
                work[mask + half] = p * c
                work[mask] = p * (1.0 - c)
        for mask in range(size):
            out[mask] += work[mask]
    return out


if HAVE_NUMBA:
    permanents_numba = numba.njit(cache=True)(_permanents_numba_impl)
    click_joint_numba = numba.njit(cache=True)(_click_joint_numba_impl)
else:  # pragma: no cover
    permanents_numba = _permanents_numba_impl
    click_joint_numba = _click_joint_numba_impl


def batch_permanents(mats: np.ndarray) -> np.ndarray:
    mats = np.ascontiguousarray(mats, dtype=np.complex128)
    if USE_NUMBA:
        return permanents_numba(mats)
    return permanents_numpy(mats)


def click_joint(click_probs: np.ndarray, weights: np.ndarray) -> np.ndarray:
    click_probs = np.ascontiguousarray(click_probs, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if USE_NUMBA:
        return click_joint_numba(click_probs, weights)
    return click_joint_numpy(click_probs, weights)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
