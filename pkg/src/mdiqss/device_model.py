"""Physical device parameters and the per-mode detector click model.

Lengths are kilometres and times seconds throughout; the one metre-valued
product (feedforward delay times fibre light speed) is converted here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .config import as_float, as_int, read_key_values
from .errors import ConfigError, DomainError

_PROBABILITY_FIELDS = ("eta_sps", "p_qnd", "eta_d", "p_d")


@dataclass(frozen=True)
class DeviceParams:
    """Source, channel, relay and detector constants for one network."""

    eta_sps: float = 0.9
    l_att: float = 27.14
    leg_distance: float = 0.0
    p_qnd: float = 0.5
    tau_a: float = 67e-9
    c_fiber: float = 2.0e8
    eta_d: float = 0.93
    p_d: float = 1e-9
    n_parties: int = 3
    f_ec: float = 1.1

    def __post_init__(self):
        for name in _PROBABILITY_FIELDS:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")
        if not self.l_att > 0:
            raise DomainError(f"l_att must be positive, got {self.l_att}")
        if not self.leg_distance >= 0:
            raise DomainError(f"leg_distance must be >= 0, got {self.leg_distance}")
        if self.tau_a < 0 or self.c_fiber <= 0:
            raise DomainError("tau_a must be >= 0 and c_fiber > 0")
        if int(self.n_parties) != self.n_parties or self.n_parties < 3:
            raise DomainError(f"n_parties must be an integer >= 3, got {self.n_parties}")
        if not self.f_ec >= 1.0:
            raise DomainError(f"f_ec must be >= 1, got {self.f_ec}")

    def at_leg(self, leg_distance: float) -> "DeviceParams":
        return replace(self, leg_distance=leg_distance)


@dataclass(frozen=True)
class ClickModel:
    """Exactly-one-click probabilities for a single analyzer output mode.

    ``x0`` is per detector (a vacuum mode clicks on H or V with ``x0`` each);
    the one- and two-photon entries already cover both detectors of the mode.
    """

    x0: float
    x1C: float
    x1E: float
    x2C: float
    x2E: float

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not -1e-15 <= value <= 1.0 + 1e-15:
                raise DomainError(f"{f.name} must lie in [0, 1], got {value}")
        if self.x1C + self.x1E > 1.0 + 1e-12 or self.x2C + self.x2E > 1.0 + 1e-12:
            raise DomainError("correct + erroneous click probability exceeds 1")

    @property
    def x1(self) -> float:
        return self.x1C + self.x1E

    @property
    def x2(self) -> float:
        return self.x2C + self.x2E


def channel_leg_transmittance(params: DeviceParams) -> float:
    """Single user-to-relay fibre transmittance ``exp(-l / l_att)``."""
    return math.exp(-params.leg_distance / params.l_att)


def feedforward_transmittance(params: DeviceParams) -> float:
    """Loss equivalent of the feedforward delay, as extra fibre length."""
    delay_km = params.tau_a * params.c_fiber / 1000.0
    return math.exp(-delay_km / params.l_att)


def arrival_probability(params: DeviceParams) -> float:
    """Probability that one emitted photon is heralded at the analyzer."""
    return (
        params.p_qnd
        * channel_leg_transmittance(params)
        * params.eta_sps
        * feedforward_transmittance(params)
    )


def build_click_model(params: DeviceParams) -> ClickModel:
    return click_model(params.eta_d, params.p_d)


def click_model(eta_d: float, p_d: float) -> ClickModel:
    """Threshold-detector click model for efficiency ``eta_d`` and dark count ``p_d``.

    Each spatial mode has an H and a V detector. A mode "clicks" when exactly
    one of them fires. Two photons in one mode have bunched onto a single
    detector after the half-wave plate.
    """
    if not (0.0 <= eta_d <= 1.0 and 0.0 <= p_d <= 1.0):
        raise DomainError("eta_d and p_d must lie in [0, 1]")
    miss = 1.0 - eta_d
    quiet = 1.0 - p_d
    x0 = p_d * quiet
    x1C = (eta_d + miss * p_d) * quiet
    x1E = miss * p_d * quiet
    two_photon = (1.0 - miss**2) * quiet + miss**2 * 2.0 * p_d * quiet
    return ClickModel(x0=x0, x1C=x1C, x1E=x1E, x2C=0.5 * two_photon, x2E=0.5 * two_photon)


DEVICE_KEYS = tuple(f.name for f in fields(DeviceParams))


def device_params_from_entries(entries: dict, source: str = "<config>", **overrides) -> DeviceParams:
    """Build ``DeviceParams`` from parsed config entries; absent keys keep defaults."""
    kwargs = {}
    for key in DEVICE_KEYS:
        if key not in entries:
            continue
        if key == "n_parties":
            kwargs[key] = as_int(entries[key], key, source)
        else:
            kwargs[key] = as_float(entries[key], key, source)
    kwargs.update(overrides)
    try:
        return DeviceParams(**kwargs)
    except DomainError as exc:
        line = next((entries[k][1] for k in entries if str(exc).startswith(k)), None)
        raise ConfigError(str(exc), line, source) from exc


def load_device_params(path: str | Path) -> DeviceParams:
    """Read a device-only config file; unknown keys are rejected."""
    entries = read_key_values(path, DEVICE_KEYS)
    return device_params_from_entries(entries, source=str(path))
