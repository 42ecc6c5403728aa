"""Time the numba and numpy paths of the oracle kernels side by side.

    python3 bench/bench_kernels.py --repeat 5

Inputs mirror what the oracle feeds the kernels: every n-photon output
configuration of the 2n-mode analyzer for permanents, and the matching
occupation-weighted detector mixtures for the click distribution.
"""
import argparse
import time

import numpy as np

from mdiqss import _kernels
from mdiqss.optical_oracle import (
    _input_columns,
    _output_configurations,
    build_analyzer_transform,
    detector_click_probabilities,
)


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def permanent_inputs(n):
    transform = build_analyzer_transform(n)
    per_photon = transform.matrix @ _input_columns(n, "+-" * (n // 2) + "+" * (n % 2))
    rows, occupations, _ = _output_configurations(2 * n, n)
    return np.ascontiguousarray(per_photon[rows]), occupations


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n", type=int, nargs="+", default=[3, 4, 5, 6])
    args = parser.parse_args()

    if not _kernels.HAVE_NUMBA:
        print("numba not importable; only the numpy path can be timed")

    print(f"{'kernel':<14}{'n':>3}{'batch':>8}{'numpy [ms]':>13}{'numba [ms]':>13}{'speedup':>9}{'max |diff|':>12}")
    for n in args.n:
        mats, occupations = permanent_inputs(n)
        weights = np.full(len(occupations), 1.0 / len(occupations))
        clicks = np.ascontiguousarray(detector_click_probabilities(occupations, 0.93, 1e-3))
        cases = [
            ("permanents", mats.shape[0], lambda: _kernels.permanents_numpy(mats),
             lambda: _kernels.permanents_numba(mats)),
            ("click_joint", clicks.shape[0], lambda: _kernels.click_joint_numpy(clicks, weights),
             lambda: _kernels.click_joint_numba(clicks, weights)),
        ]
        for name, batch, np_fn, nb_fn in cases:
            t_np = best_time(np_fn, args.repeat)
            if _kernels.HAVE_NUMBA:
                nb_fn()  # compile outside the timed region
                t_nb = best_time(nb_fn, args.repeat)
                diff = float(np.max(np.abs(np_fn() - nb_fn())))
                print(f"{name:<14}{n:>3}{batch:>8}{t_np * 1e3:>13.3f}{t_nb * 1e3:>13.3f}"
                      f"{t_np / t_nb:>9.2f}{diff:>12.1e}")
            else:
                print(f"{name:<14}{n:>3}{batch:>8}{t_np * 1e3:>13.3f}{'-':>13}{'-':>9}{'-':>12}")


if __name__ == "__main__":
    main()
