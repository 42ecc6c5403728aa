"""First-principles simulation of the PBS-ring GHZ analyzer for small n.

Optical modes are indexed ``2 * spatial + polarization`` with H = 0, V = 1.
Input photons are propagated through the analyzer unitary, multi-photon
amplitudes come from permanents, and a threshold-detector model with dark
counts turns Fock configurations into click-pattern distributions.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from ._kernels import batch_permanents, click_joint
from .errors import DomainError
from .ghz_combinatorics import Projection, classify_parity

H, V = 0, 1
MIN_PARTIES, MAX_TRANSFORM_PARTIES, MAX_STATS_PARTIES = 3, 6, 5

_SQRT_HALF = 1.0 / math.sqrt(2.0)
POLARIZATIONS = {
    "H": (1.0, 0.0),
    "V": (0.0, 1.0),
    "+": (_SQRT_HALF, _SQRT_HALF),
    "-": (_SQRT_HALF, -_SQRT_HALF),
}
# configurations below this probability are numerical zeros from cancelling amplitudes
_PROBABILITY_FLOOR = 1e-24


def mode_index(spatial: int, polarization: int) -> int:
    return 2 * spatial + polarization


@dataclass(frozen=True)
class ModeTransform:
    n_parties: int
    matrix: np.ndarray

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def unitarity_defect(self) -> float:
        eye = np.eye(self.dimension)
        return float(np.abs(self.matrix.conj().T @ self.matrix - eye).max())


@dataclass(frozen=True)
class ClickPatternDistribution:
    """Joint click distribution of ``n_detectors`` threshold detectors.

    ``probabilities[mask]`` is the probability of the click pattern whose bit
    ``d`` is set when detector ``d`` (mode index ``d``) fired.
    """

    n_detectors: int
    probabilities: np.ndarray

    @property
    def entries(self) -> dict[int, float]:
        return {int(m): float(p) for m, p in enumerate(self.probabilities) if p > 0}

    def total(self) -> float:
        return float(self.probabilities.sum())

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["detector_bitmask", "probability"])
            width = self.n_detectors
            for mask, p in enumerate(self.probabilities):
                writer.writerow([format(mask, f"0{width}b"), f"{p:.17g}"])


def pbs_ring_matrix(n: int) -> np.ndarray:
    """Mode map of the PBS chain, with outputs relabelled into a ring.

    A chain of ``n - 1`` beam splitters, each reflecting V with phase ``i``:
    party 1 and party n reflect once, inner parties twice. After relabelling
    so every H photon keeps its own output mode, each V photon lands in the
    next mode cyclically and the all-V branch carries phase ``(-1)**(n-1)``.
    """
    dim = 2 * n
    pbs = np.zeros((dim, dim), dtype=np.complex128)
    for party in range(n):
        pbs[mode_index(party, H), mode_index(party, H)] = 1.0
        reflections = 1 if party in (0, n - 1) else 2
        pbs[mode_index((party + 1) % n, V), mode_index(party, V)] = 1j**reflections
    return pbs


def half_wave_plate_matrix(n: int) -> np.ndarray:
    """45-degree rotation on every spatial mode: H -> (H+V)/sqrt2, V -> (H-V)/sqrt2."""
    block = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) * _SQRT_HALF
    return np.kron(np.eye(n), block)


def build_analyzer_transform(n: int) -> ModeTransform:
    if int(n) != n or not MIN_PARTIES <= n <= MAX_TRANSFORM_PARTIES:
        raise DomainError(f"oracle transform supports {MIN_PARTIES} <= n <= {MAX_TRANSFORM_PARTIES}, got {n}")
    matrix = half_wave_plate_matrix(n) @ pbs_ring_matrix(n)
    return ModeTransform(n_parties=n, matrix=matrix)


@lru_cache(maxsize=None)
def _output_configurations(n_modes: int, n_photons: int):
    """All multisets of output modes as sorted row-index arrays plus occupations."""
    rows = np.array(
        list(itertools.combinations_with_replacement(range(n_modes), n_photons)), dtype=np.int64
    )
    occupations = np.zeros((len(rows), n_modes), dtype=np.int64)
    for col in range(n_photons):
        np.add.at(occupations, (np.arange(len(rows)), rows[:, col]), 1)
    norms = np.prod([[math.factorial(int(c)) for c in occ] for occ in occupations], axis=1)
    return rows, occupations, norms.astype(np.float64)


def _input_columns(n: int, input_pattern: Sequence[str]) -> np.ndarray:
    if len(input_pattern) != n:
        raise DomainError(f"need one polarization per party ({n}), got {len(input_pattern)}")
    columns = np.zeros((2 * n, n), dtype=np.complex128)
    for party, symbol in enumerate(input_pattern):
        if symbol not in POLARIZATIONS:
            raise DomainError(f"unsupported polarization symbol {symbol!r}")
        h, v = POLARIZATIONS[symbol]
        columns[mode_index(party, H), party] = h
        columns[mode_index(party, V), party] = v
    return columns


def output_distribution(
    n: int, input_pattern: Sequence[str], transform: ModeTransform
) -> dict[tuple[int, ...], float]:
    """Exact output Fock-configuration probabilities for one photon per party."""
    if transform.n_parties != n:
        raise DomainError("transform built for a different number of parties")
    # each photon's creation operator maps to a column of U @ C
    amplitudes_per_photon = transform.matrix @ _input_columns(n, input_pattern)
    rows, occupations, norms = _output_configurations(2 * n, n)
    perms = batch_permanents(amplitudes_per_photon[rows])
    probs = np.abs(perms) ** 2 / norms
    keep = probs > _PROBABILITY_FLOOR
    return {tuple(int(c) for c in occ): float(p) for occ, p in zip(occupations[keep], probs[keep])}


def detector_click_probabilities(occupations: np.ndarray, eta_d: float, p_d: float) -> np.ndarray:
    occupations = np.asarray(occupations)
    return 1.0 - (1.0 - eta_d) ** occupations * (1.0 - p_d)


def detector_response(config: Sequence[int], eta_d: float, p_d: float) -> ClickPatternDistribution:
    """Independent threshold detectors: efficiency per photon, then dark-count OR."""
    occ = np.asarray(config, dtype=np.int64)
    clicks = detector_click_probabilities(occ[None, :], eta_d, p_d)
    joint = click_joint(clicks, np.ones(1))
    return ClickPatternDistribution(n_detectors=len(occ), probabilities=joint)


@lru_cache(maxsize=None)
def _mask_tables(n: int):
    """Per click mask: n-fold coincidence flag and analyzer verdict."""
    masks = np.arange(1 << (2 * n))
    bits = (masks[:, None] >> np.arange(2 * n)) & 1
    h_bits, v_bits = bits[:, 0::2], bits[:, 1::2]
    success = np.all(h_bits + v_bits == 1, axis=1)
    v_counts = v_bits.sum(axis=1)
    plus = np.array(
        [classify_parity(n, int(c)) is Projection.PHI_PLUS for c in v_counts], dtype=bool
    )
    return success, plus


def _expected_projection(pattern: Sequence[str]) -> Projection:
    minus = sum(1 for s in pattern if s == "-")
    return Projection.PHI_PLUS if minus % 2 == 0 else Projection.PHI_MINUS


@lru_cache(maxsize=None)
def _basis_classes(n: int, basis: str):
    """Fock-configuration weights, averaged over the basis, split by input class.

    Z basis: class 0 = uniform inputs, class 1 = non-uniform (error) inputs.
    X basis: class 0 = inputs expecting Phi+, class 1 = inputs expecting Phi-.
    """
    transform = build_analyzer_transform(n)
    symbols = ("H", "V") if basis == "Z" else ("+", "-")
    classes: list[dict[tuple[int, ...], float]] = [{}, {}]
    weight = 2.0**-n
    for pattern in itertools.product(symbols, repeat=n):
        if basis == "Z":
            cls = 0 if len(set(pattern)) == 1 else 1
        else:
            cls = 0 if _expected_projection(pattern) is Projection.PHI_PLUS else 1
        for config, p in output_distribution(n, pattern, transform).items():
            classes[cls][config] = classes[cls].get(config, 0.0) + weight * p
    out = []
    for table in classes:
        configs = sorted(table)
        out.append((np.array(configs, dtype=np.int64).reshape(-1, 2 * n), np.array([table[c] for c in configs])))
    return tuple(out)


def _class_click_distribution(occupations, weights, eta_d, p_d) -> np.ndarray:
    if len(weights) == 0:
        return np.zeros(1 << occupations.shape[1])
    return click_joint(detector_click_probabilities(occupations, eta_d, p_d), weights)


@dataclass(frozen=True)
class OracleStats:
    gain: float
    error_rate: float

    def __iter__(self):
        return iter((self.gain, self.error_rate))


def oracle_stats(n: int, basis: str, eta_d: float, p_d: float) -> OracleStats:
    """Gain and error rate by full enumeration of the ``2**n`` basis inputs.

    Success means exactly one click in every spatial mode. In Z an error is a
    success on a non-uniform input; in X it is a parity verdict that
    disagrees with the sign fixed by the input's number of ``|->`` photons.
    """
    if int(n) != n or not MIN_PARTIES <= n <= MAX_STATS_PARTIES:
        raise DomainError(f"oracle statistics support {MIN_PARTIES} <= n <= {MAX_STATS_PARTIES}, got {n}")
    if basis not in ("Z", "X"):
        raise DomainError(f"basis must be 'Z' or 'X', got {basis!r}")
    success, plus = _mask_tables(n)
    (occ0, w0), (occ1, w1) = _basis_classes(n, basis)
    dist0 = _class_click_distribution(occ0, w0, eta_d, p_d)
    dist1 = _class_click_distribution(occ1, w1, eta_d, p_d)
    gain = float(dist0[success].sum() + dist1[success].sum())
    if basis == "Z":
        errors = float(dist1[success].sum())
    else:
        errors = float(dist0[success & ~plus].sum() + dist1[success & plus].sum())
    return OracleStats(gain=gain, error_rate=errors / gain if gain > 0 else 0.0)


def pattern_projection_probabilities(
    n: int, input_pattern: Sequence[str], eta_d: float, p_d: float
) -> dict[Projection, float]:
    """Probability that one specific input is announced as Phi+ or Phi-."""
    transform = build_analyzer_transform(n)
    dist = output_distribution(n, input_pattern, transform)
    occupations = np.array(list(dist), dtype=np.int64).reshape(-1, 2 * n)
    clicks = _class_click_distribution(occupations, np.array(list(dist.values())), eta_d, p_d)
    success, plus = _mask_tables(n)
    return {
        Projection.PHI_PLUS: float(clicks[success & plus].sum()),
        Projection.PHI_MINUS: float(clicks[success & ~plus].sum()),
    }


def click_pattern_distribution(
    n: int, input_pattern: Sequence[str], eta_d: float, p_d: float
) -> ClickPatternDistribution:
    """Full click-pattern distribution for one input, e.g. for CSV dumps."""
    transform = build_analyzer_transform(n)
    dist = output_distribution(n, input_pattern, transform)
    occupations = np.array(list(dist), dtype=np.int64).reshape(-1, 2 * n)
    joint = _class_click_distribution(occupations, np.array(list(dist.values())), eta_d, p_d)
    return ClickPatternDistribution(n_detectors=2 * n, probabilities=joint)
