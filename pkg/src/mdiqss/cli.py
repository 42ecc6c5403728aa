"""Command-line front end: rate sweeps, oracle cross-checks and signature rates.

Usage::

    mdiqss sweep --config fig2 --out fig2.csv
    mdiqss oracle-check --n 3 4 5 --out oracle.csv
    mdiqss table1 --out table1.csv

``--config`` accepts a file path or the name of a bundled preset
(fig2, fig3, fig4, table1, oracle).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import __version__
from .benchmarks import (
    QDS_CLOCK_HZ,
    QDS_CONSUMPTION_BITS,
    bound_point,
    finite_cutoff_distance,
    table1_rows,
)
from .config import as_float, as_float_list, as_int, parse_key_values
from .device_model import DEVICE_KEYS, arrival_probability, build_click_model, device_params_from_entries
from .errors import ConfigError, DomainError
from .ghz_combinatorics import ghz_projection_stats
from .multiplexing import PRNG_ALGORITHM, MultiplexConfig, monte_carlo_gain
from .optical_oracle import MAX_STATS_PARTIES, MIN_PARTIES, oracle_stats
from .security_rates import (
    DEFAULT_BASIS_BIAS,
    DEFAULT_EPS_C,
    DEFAULT_EPS_S,
    finite_rate,
)

PRESETS = ("fig2", "fig3", "fig4", "table1", "oracle")
ORACLE_TOLERANCE = 1e-9
DEFAULT_ETA_D_GRID = (1.0, 0.93, 0.5)
DEFAULT_P_D_GRID = (0.0, 1e-9, 1e-3)

SWEEP_KEYS = tuple(DEVICE_KEYS) + (
    "distances",
    "mode",
    "n_total",
    "eps_c",
    "eps_s",
    "basis_bias",
    "q_prep",
    "multiplexing",
    "mc_trials",
    "cutoff_search_max_km",
)
TABLE1_KEYS = tuple(DEVICE_KEYS) + ("clock_hz", "sig_consumption_bits", "total_distances")
ORACLE_KEYS = ("eta_d_values", "p_d_values")

# design choices written to every sweep's sidecar file
MODEL_FLAGS = {
    "pattern_averaging": "uniform 2^-n over basis inputs",
    "arrangement_count": "exact n*C(k-1,l-1)*C(n-k-1,l-1)/l",
    "pbs_phase": "chain of n-1 PBS, phase i per reflection",
    "two_photon_click": "bunched pair, exactly-one-click split equally into x2C/x2E",
    "click_convention": "exactly one of the mode's two detectors fires",
    "bound_transmittance": "end-to-end eta = leg transmittance squared",
    "sifting": "m = N*Q_X*bias^n, k_j = N*Q_Z*(1-bias)^2",
    "eps_split": "eps_bar = eps_prime = eps_s/4",
    "lambda_floor": "1/(2*k_pe), k_pe <= k_j chosen to minimise the correction",
    "error_correction_leak": "f_ec*h(E_X)*m",
}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def resolve_config(name: str) -> tuple[str, str]:
    """Return ``(text, source)`` for a config path or bundled preset name."""
    path = Path(name)
    if path.is_file():
        try:
            return path.read_text(encoding="utf-8"), str(path)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror or exc}", None, str(path)) from exc
    preset = name[:-5] if name.endswith(".conf") else name
    if preset in PRESETS:
        text = resources.files("mdiqss").joinpath("presets", f"{preset}.conf").read_text(encoding="utf-8")
        return text, f"<preset {preset}>"
    raise ConfigError("no such config file or preset", None, name)


@dataclass(frozen=True)
class SweepPoint:
    leg_distance_km: float
    n_parties: int
    q_x_gain: float
    e_x: float
    e_z: float
    rate_asymptotic: float
    rate_finite: float
    bound_direct: float
    bound_plob: float
    key_length_bits: int
    metadata: str


SWEEP_COLUMNS = tuple(f.name for f in fields(SweepPoint))


@dataclass(frozen=True)
class SweepConfig:
    base: object
    n_values: tuple[int, ...]
    distances: tuple[float, ...]
    mode: str = "asymptotic"
    n_total: int = 10**12
    eps_c: float = DEFAULT_EPS_C
    eps_s: float = DEFAULT_EPS_S
    basis_bias: float = DEFAULT_BASIS_BIAS
    q_prep: float = 1.0
    multiplexing: int | None = None
    mc_trials: int = 0
    cutoff_search_max_km: float = 2000.0


def parse_sweep_config(text: str, source: str = "<config>") -> SweepConfig:
    entries = parse_key_values(text, SWEEP_KEYS, source)
    n_values = (3,)
    if "n_parties" in entries:
        raw = as_float_list(entries["n_parties"], "n_parties", source)
        if not raw or any(not v.is_integer() or v < 3 for v in raw):
            raise ConfigError("n_parties: expected integers >= 3", entries["n_parties"][1], source)
        n_values = tuple(sorted({int(v) for v in raw}))
    device_entries = {k: v for k, v in entries.items() if k in DEVICE_KEYS and k != "n_parties"}
    base = device_params_from_entries(device_entries, source, n_parties=n_values[0])

    distances: tuple[float, ...] = ()
    if "distances" in entries:
        values = as_float_list(entries["distances"], "distances", source)
        if any(not math.isfinite(d) or d <= 0 for d in values):
            raise ConfigError("distances: leg distances must be finite and > 0 km", entries["distances"][1], source)
        distances = tuple(sorted(set(values)))

    kwargs = {}
    if "mode" in entries:
        mode, line = entries["mode"]
        if mode not in ("asymptotic", "finite"):
            raise ConfigError(f"mode: expected 'asymptotic' or 'finite', got {mode!r}", line, source)
        kwargs["mode"] = mode
    for key in ("n_total", "multiplexing", "mc_trials"):
        if key in entries:
            value = as_int(entries[key], key, source)
            if value < (0 if key == "mc_trials" else 1):
                raise ConfigError(f"{key}: out of range ({value})", entries[key][1], source)
            kwargs[key] = value
    for key, lo, hi in (
        ("eps_c", 0.0, 1.0),
        ("eps_s", 0.0, 1.0),
        ("basis_bias", 0.0, 1.0),
        ("q_prep", 0.0, 1.0 + 1e-15),
        ("cutoff_search_max_km", 0.0, math.inf),
    ):
        if key in entries:
            value = as_float(entries[key], key, source)
            if not lo < value < hi:
                raise ConfigError(f"{key}: out of range ({value})", entries[key][1], source)
            kwargs[key] = value
    if kwargs.get("mc_trials") and "multiplexing" not in kwargs:
        raise ConfigError("mc_trials needs a finite multiplexing size", entries["mc_trials"][1], source)
    return SweepConfig(base=base, n_values=n_values, distances=distances, **kwargs)


def _metadata(items: dict) -> str:
    return ";".join(f"{k}={_format(v)}" for k, v in items.items())


def _point_seed(seed: int, n: int, leg: float) -> int:
    return (seed * 1_000_003 + n * 100_003 + round(leg * 1000)) & 0x7FFFFFFFFFFF


def evaluate_point(cfg: SweepConfig, n: int, leg: float, seed: int) -> SweepPoint:
    params = replace(cfg.base, n_parties=n).at_leg(leg)
    point = finite_rate(
        params,
        cfg.n_total,
        cfg.eps_c,
        cfg.eps_s,
        basis_bias=cfg.basis_bias,
        q_prep=cfg.q_prep,
        multiplexing=cfg.multiplexing,
    )
    bounds = bound_point(params)
    meta = {"mode": cfg.mode, "seed": seed, "multiplexing": cfg.multiplexing or "inf", "n_total": cfg.n_total}
    meta.update(point.metadata)
    if cfg.mc_trials:
        stats = ghz_projection_stats(n, build_click_model(params))
        mux = MultiplexConfig(cfg.multiplexing, n, arrival_probability(params), stats.q_ghz_x)
        # one stream per grid point keeps rows independent of thread scheduling
        mc = monte_carlo_gain(mux, cfg.mc_trials, seed=_point_seed(seed, n, leg), workers=1)
        meta["mc_q_x_gain"] = mc.estimate
        meta["mc_standard_error"] = mc.standard_error
    return SweepPoint(
        leg_distance_km=leg,
        n_parties=n,
        q_x_gain=point.q_x_gain,
        e_x=point.e_x,
        e_z=point.e_z,
        rate_asymptotic=point.rate_asymptotic,
        rate_finite=point.rate_finite,
        bound_direct=bounds.direct_bound,
        bound_plob=bounds.plob,
        key_length_bits=point.key_length,
        metadata=_metadata(meta),
    )


def run_sweep_points(cfg: SweepConfig, seed: int = 0, threads: int = 1) -> list[SweepPoint]:
    grid = [(n, leg) for n in cfg.n_values for leg in cfg.distances]
    if threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(lambda g: evaluate_point(cfg, g[0], g[1], seed), grid))
    else:
        points = [evaluate_point(cfg, n, leg, seed) for n, leg in grid]
    return sorted(points, key=lambda p: (p.n_parties, p.leg_distance_km))


def sweep_cutoffs(cfg: SweepConfig) -> list[tuple[int, float | None]]:
    out = []
    for n in cfg.n_values:
        cutoff = finite_cutoff_distance(
            replace(cfg.base, n_parties=n),
            cfg.n_total,
            cfg.eps_c,
            cfg.eps_s,
            basis_bias=cfg.basis_bias,
            q_prep=cfg.q_prep,
            multiplexing=cfg.multiplexing,
            search_max=cfg.cutoff_search_max_km,
        )
        out.append((n, cutoff))
    return out


def _rows_to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format(v) for v in row])
    return buf.getvalue()


def sweep_csv(points: Sequence[SweepPoint]) -> str:
    return _rows_to_csv(SWEEP_COLUMNS, [[getattr(p, c) for c in SWEEP_COLUMNS] for p in points])


def _sidecar(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def sweep_metadata(cfg: SweepConfig, seed: int) -> dict:
    return {
        "version": __version__,
        "seed": seed,
        "mode": cfg.mode,
        "n_parties": list(cfg.n_values),
        "grid_points": len(cfg.n_values) * len(cfg.distances),
        "device": asdict(replace(cfg.base, leg_distance=0.0)),
        "n_total": cfg.n_total,
        "eps_c": cfg.eps_c,
        "eps_s": cfg.eps_s,
        "basis_bias": cfg.basis_bias,
        "q_prep": cfg.q_prep,
        "multiplexing": cfg.multiplexing,
        "mc_trials": cfg.mc_trials,
        "prng": PRNG_ALGORITHM,
        "model_flags": MODEL_FLAGS,
    }


def cmd_sweep(args) -> int:
    if args.config is None:
        raise ConfigError("sweep needs --config (a file or a preset name)", None, "<cli>")
    text, source = resolve_config(args.config)
    cfg = parse_sweep_config(text, source)
    points = run_sweep_points(cfg, seed=args.seed, threads=args.threads)
    _emit(sweep_csv(points), args.out)
    if args.out and args.out != "-":
        out = Path(args.out)
        meta = json.dumps(sweep_metadata(cfg, args.seed), indent=2, sort_keys=True) + "\n"
        _sidecar(out, ".meta.json").write_text(meta, encoding="utf-8")
        if cfg.mode == "finite":
            rows = [(n, c) for n, c in sweep_cutoffs(cfg)]
            _sidecar(out, ".cutoffs.csv").write_text(
                _rows_to_csv(("n_parties", "zero_rate_leg_km"), rows), encoding="utf-8"
            )
    return 0


def oracle_deviation_rows(n_values: Sequence[int], eta_d_values, p_d_values) -> list[tuple]:
    from .device_model import click_model

    rows = []
    for n in n_values:
        for eta_d in eta_d_values:
            for p_d in p_d_values:
                stats = ghz_projection_stats(n, click_model(eta_d, p_d))
                q_z, e_z = oracle_stats(n, "Z", eta_d, p_d)
                q_x, e_x = oracle_stats(n, "X", eta_d, p_d)
                devs = (
                    abs(stats.q_ghz_z - q_z),
                    abs(stats.e_z - e_z),
                    abs(stats.q_ghz_x - q_x),
                    abs(stats.e_x - e_x),
                )
                rows.append((n, float(eta_d), float(p_d), *devs, max(devs)))
    return rows


ORACLE_COLUMNS = ("n_parties", "eta_d", "p_d", "dev_q_z", "dev_e_z", "dev_q_x", "dev_e_x", "max_deviation")


def cmd_oracle_check(args) -> int:
    bad = [n for n in args.n if not MIN_PARTIES <= n <= MAX_STATS_PARTIES]
    if bad:
        print(
            f"oracle-check: refusing n={bad[0]}; the oracle enumerates {MIN_PARTIES} <= n <= {MAX_STATS_PARTIES}",
            file=sys.stderr,
        )
        return 2
    eta_grid, pd_grid = DEFAULT_ETA_D_GRID, DEFAULT_P_D_GRID
    if args.config is not None:
        text, source = resolve_config(args.config)
        entries = parse_key_values(text, ORACLE_KEYS, source)
        if "eta_d_values" in entries:
            eta_grid = tuple(as_float_list(entries["eta_d_values"], "eta_d_values", source))
        if "p_d_values" in entries:
            pd_grid = tuple(as_float_list(entries["p_d_values"], "p_d_values", source))
        for key, grid in (("eta_d_values", eta_grid), ("p_d_values", pd_grid)):
            if any(not 0.0 <= v <= 1.0 for v in grid):
                raise ConfigError(f"{key}: probabilities must lie in [0, 1]", entries[key][1], source)
    rows = oracle_deviation_rows(args.n, eta_grid, pd_grid)
    _emit(_rows_to_csv(ORACLE_COLUMNS, rows), args.out)
    worst = max((r[-1] for r in rows), default=0.0)
    verdict = "ok" if worst <= ORACLE_TOLERANCE else "FAILED"
    print(f"oracle-check: {len(rows)} points, max deviation {worst:.3g} ({verdict})", file=sys.stderr)
    return 0 if worst <= ORACLE_TOLERANCE else 1


TABLE1_COLUMNS = (
    "total_distance_km",
    "leg_distance_km",
    "rate_per_pulse",
    "signature_rate_tps",
    "reference_tps",
    "relative_deviation",
)


def cmd_table1(args) -> int:
    text, source = resolve_config(args.config or "table1")
    entries = parse_key_values(text, TABLE1_KEYS, source)
    device_entries = {k: v for k, v in entries.items() if k in DEVICE_KEYS}
    params = device_params_from_entries(device_entries, source)
    clock = as_float(entries["clock_hz"], "clock_hz", source) if "clock_hz" in entries else QDS_CLOCK_HZ
    bits = QDS_CONSUMPTION_BITS
    if "sig_consumption_bits" in entries:
        bits = as_int(entries["sig_consumption_bits"], "sig_consumption_bits", source)
    totals = (20.0, 50.0)
    if "total_distances" in entries:
        totals = tuple(as_float_list(entries["total_distances"], "total_distances", source))
    try:
        rows = table1_rows(params, clock, bits, totals)
    except DomainError as exc:
        raise ConfigError(str(exc), None, source) from exc
    out_rows = []
    for r in rows:
        deviation = None if r.reference_tps is None else r.signature_rate_tps / r.reference_tps - 1.0
        out_rows.append(
            (r.total_distance_km, r.leg_distance_km, r.rate_per_pulse, r.signature_rate_tps, r.reference_tps, deviation)
        )
    _emit(_rows_to_csv(TABLE1_COLUMNS, out_rows), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdiqss", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", help="config file or bundled preset name")
        p.add_argument("--out", metavar="PATH", help="output CSV (default: stdout)")
        p.add_argument("--seed", type=int, default=0, help="seed for Monte Carlo columns (default 0)")
        p.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluation")

    p_sweep = sub.add_parser("sweep", help="key rate and bound sweep over n and leg distance")
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_oracle = sub.add_parser("oracle-check", help="closed forms versus the linear-optics oracle")
    common(p_oracle)
    p_oracle.add_argument("--n", type=int, nargs="+", default=[3], help="party counts to check (3..5)")
    p_oracle.set_defaults(func=cmd_oracle_check)

    p_table = sub.add_parser("table1", help="QDS signature rates at 20 and 50 km")
    common(p_table)
    p_table.set_defaults(func=cmd_table1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
