"""Command-line front end: config files, sweeps, CSV output, debugging.

The config file is line-oriented ``key = value`` text; unknown keys are
errors and missing keys fall back to the built-in defaults. Every sweep
writes a JSON manifest next to its CSV with the fully resolved settings,
so any result file can be regenerated exactly.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (
    ConfigurationError,
    PathLossModel,
    SystemConfig,
    generate_drop,
)
from .montecarlo import ResultTable, SweepCell, SweepSpec, run_sweep
from .strategies import (
    ctdd_link_rates,
    evaluate_strategy,
    zdd_link_rates,
    zddir_link_rates,
)

__all__ = [
    "ConfigFileError",
    "parse_config",
    "parse_config_text",
    "csv_text",
    "write_csv",
    "read_csv",
    "build_manifest",
    "write_manifest",
    "read_manifest",
    "run",
    "main",
]

CSV_HEADER = "distance_m,strategy,direction,rsi_db,mode,mean_bps_per_hz,std_error,n_drops"
THREADS_ENV = "BACKHAUL_SIM_THREADS"


class ConfigFileError(ValueError):
    """A config file failed to parse or violated an invariant."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_float_list(text: str) -> tuple:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _parse_str_list(text: str) -> tuple:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def parse_distances(text: str) -> tuple:
    """Distances as ``start:step:stop`` (inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"bad distance range {text!r}")
        count = int(round((stop - start) / step)) + 1
        return tuple(start + i * step for i in range(count) if start + i * step <= stop + 1e-9)
    return _parse_float_list(text)


def _parse_directions(text: str) -> tuple:
    lowered = text.strip().lower()
    if lowered == "both":
        return ("dl", "ul")
    return _parse_str_list(lowered)


# key -> (section, field, parser); sections: "system", "sweep", "pl:<link>"
_CONFIG_KEYS = {
    "bandwidth_hz": ("system", "bandwidth_hz", float),
    "num_cells": ("system", "num_cells", int),
    "n_bs": ("system", "n_bs", int),
    "n_sc": ("system", "n_sc", int),
    "n_ue": ("system", "n_ue", int),
    "n_sct": ("system", "n_sct", int),
    "n_scr": ("system", "n_scr", int),
    "p_bs_w": ("system", "p_bs_w", float),
    "p_sc_w": ("system", "p_sc_w", float),
    "p_ue_w": ("system", "p_ue_w", float),
    "noise_psd_dbm_hz": ("system", "noise_psd_dbm_hz", float),
    "nf_bs_db": ("system", "nf_bs_db", float),
    "nf_sc_db": ("system", "nf_sc_db", float),
    "nf_ue_db": ("system", "nf_ue_db", float),
    "gain_bs_dbi": ("system", "gain_bs_dbi", float),
    "gain_sc_dbi": ("system", "gain_sc_dbi", float),
    "gain_ue_dbi": ("system", "gain_ue_dbi", float),
    "frac_dl": ("system", "frac_dl", float),
    "frac_ul": ("system", "frac_ul", float),
    "rsi_db": ("system", "rsi_db", float),
    "sc_ring_distance_m": ("system", "sc_ring_distance_m", float),
    "sc_coverage_radius_m": ("system", "sc_coverage_radius_m", float),
    "ue_min_dist_m": ("system", "ue_min_dist_m", float),
    "f_c_ghz": ("system", "f_c_ghz", float),
    "split_ue_interference_power": ("system", "split_ue_interference_power", _parse_bool),
    "freeze_geometry": ("system", "freeze_geometry", _parse_bool),
    "pl_b2u_intercept_db": ("pl:pl_b2u", "intercept_db", float),
    "pl_b2u_slope_db_per_decade": ("pl:pl_b2u", "slope_db_per_decade", float),
    "pl_b2u_shadowing_db": ("pl:pl_b2u", "shadowing_sigma_db", float),
    "pl_b2s_intercept_db": ("pl:pl_b2s", "intercept_db", float),
    "pl_b2s_slope_db_per_decade": ("pl:pl_b2s", "slope_db_per_decade", float),
    "pl_b2s_shadowing_db": ("pl:pl_b2s", "shadowing_sigma_db", float),
    "pl_s2u_intercept_db": ("pl:pl_s2u", "intercept_db", float),
    "pl_s2u_slope_db_per_decade": ("pl:pl_s2u", "slope_db_per_decade", float),
    "pl_s2u_shadowing_db": ("pl:pl_s2u", "shadowing_sigma_db", float),
    "drops": ("sweep", "drops", int),
    "seed": ("sweep", "master_seed", int),
    "distances": ("sweep", "distances_m", parse_distances),
    "strategies": ("sweep", "strategies", _parse_str_list),
    "directions": ("sweep", "directions", _parse_directions),
    "rsi_points_db": ("sweep", "rsi_points_db", _parse_float_list),
    "modes": ("sweep", "modes", _parse_str_list),
}


def parse_config_text(text: str, source: str = "<config>"):
    """Parse ``key = value`` lines into a (SystemConfig, SweepSpec) pair."""
    system: dict = {}
    sweep: dict = {}
    pathloss: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigFileError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigFileError(f"{source}:{lineno}: unknown key {key!r}")
        section, field, parser = _CONFIG_KEYS[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            raise ConfigFileError(f"{source}:{lineno}: {exc}") from exc
        if section == "system":
            system[field] = parsed
        elif section == "sweep":
            sweep[field] = parsed
        else:
            pathloss.setdefault(section.split(":")[1], {})[field] = parsed

    defaults = SystemConfig()
    for link, fields in pathloss.items():
        system[link] = replace(getattr(defaults, link), **fields)
    try:
        config = SystemConfig(**system)
        spec = SweepSpec(**sweep)
        spec.validate()
        # keep the informational copies on the system side in step
        config = replace(config, drops=spec.drops, seed=spec.master_seed).validate()
        if "zdd_ir" in spec.strategies:
            for mode in spec.modes:
                config.check_rejection_dims(mode)
    except ConfigurationError as exc:
        raise ConfigFileError(f"{source}: {exc}") from exc
    return config, spec


def parse_config(path) -> tuple:
    path = Path(path)
    if not path.exists():
        raise ConfigFileError(f"config file not found: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"), source=str(path))


def _fmt(value: float) -> str:
    return format(value, ".6g")


def csv_text(table: ResultTable) -> str:
    """Render the result table with 6 significant digits per value."""
    lines = [CSV_HEADER]
    for row in table.rows:
        lines.append(
            f"{_fmt(row.distance_m)},{row.strategy},{row.direction},"
            f"{_fmt(row.rsi_db)},{row.mode},{_fmt(row.mean_bps_per_hz)},"
            f"{_fmt(row.std_error)},{row.n_drops}"
        )
    return "\n".join(lines) + "\n"


def write_csv(table: ResultTable, path) -> None:
    Path(path).write_text(csv_text(table), encoding="utf-8")


def read_csv(path) -> ResultTable:
    """Parse a CSV written by write_csv back into a ResultTable."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: not a sweep result file")
    cells = []
    for line in lines[1:]:
        if not line:
            continue
        d, strat, direc, rsi, mode, mean, se, n = line.split(",")
        cells.append(
            SweepCell(
                distance_m=float(d),
                strategy=strat,
                direction=direc,
                rsi_db=float(rsi),
                mode=mode,
                mean_bps_per_hz=float(mean),
                std_error=float(se),
                n_drops=int(n),
            )
        )
    return ResultTable.from_cells(cells)


def _pathloss_to_dict(model: PathLossModel) -> dict:
    return {
        "intercept_db": model.intercept_db,
        "slope_db_per_decade": model.slope_db_per_decade,
        "shadowing_sigma_db": model.shadowing_sigma_db,
    }


def system_config_to_dict(config: SystemConfig) -> dict:
    out = {}
    for field in SystemConfig.__dataclass_fields__:
        value = getattr(config, field)
        out[field] = _pathloss_to_dict(value) if isinstance(value, PathLossModel) else value
    return out


def system_config_from_dict(data: dict) -> SystemConfig:
    kwargs = dict(data)
    for link in ("pl_b2u", "pl_b2s", "pl_s2u"):
        if link in kwargs and isinstance(kwargs[link], dict):
            kwargs[link] = PathLossModel(**kwargs[link])
    return SystemConfig(**kwargs)


def sweep_spec_to_dict(spec: SweepSpec) -> dict:
    return {
        "distances_m": list(spec.distances_m),
        "strategies": list(spec.strategies),
        "directions": list(spec.directions),
        "rsi_points_db": list(spec.rsi_points_db),
        "modes": list(spec.modes),
        "drops": spec.drops,
        "master_seed": spec.master_seed,
    }


def sweep_spec_from_dict(data: dict) -> SweepSpec:
    return SweepSpec(
        distances_m=tuple(data["distances_m"]),
        strategies=tuple(data["strategies"]),
        directions=tuple(data["directions"]),
        rsi_points_db=tuple(data["rsi_points_db"]),
        modes=tuple(data["modes"]),
        drops=int(data["drops"]),
        master_seed=int(data["master_seed"]),
    )


def build_manifest(config: SystemConfig, spec: SweepSpec, out_path) -> dict:
    return {
        "tool": "backhaul-sim",
        "version": __version__,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "master_seed": spec.master_seed,
        "output_csv": str(out_path),
        "system_config": system_config_to_dict(config),
        "sweep_spec": sweep_spec_to_dict(spec),
    }


def manifest_path_for(out_path) -> Path:
    return Path(str(out_path) + ".manifest.json")


def write_manifest(config: SystemConfig, spec: SweepSpec, out_path) -> Path:
    path = manifest_path_for(out_path)
    path.write_text(
        json.dumps(build_manifest(config, spec, out_path), indent=2) + "\n",
        encoding="utf-8",
    )
    return path


def read_manifest(path) -> tuple:
    """Recover the (SystemConfig, SweepSpec) a result file was made with."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return system_config_from_dict(data["system_config"]), sweep_spec_from_dict(
        data["sweep_spec"]
    )


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        requested = int(raw)
    except ValueError:
        raise ConfigFileError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ConfigFileError(f"{THREADS_ENV} must be >= 0")
    return requested if requested > 0 else (os.cpu_count() or 1)


def _apply_flag_overrides(args, config: SystemConfig, spec: SweepSpec):
    sweep_updates = {}
    if args.seed is not None:
        sweep_updates["master_seed"] = args.seed
    if args.drops is not None:
        sweep_updates["drops"] = args.drops
    if args.strategies is not None:
        sweep_updates["strategies"] = _parse_str_list(args.strategies)
    if args.direction is not None:
        sweep_updates["directions"] = _parse_directions(args.direction)
    if args.rsi is not None:
        sweep_updates["rsi_points_db"] = _parse_float_list(args.rsi)
    if args.mode is not None:
        sweep_updates["modes"] = _parse_str_list(args.mode)
    if args.distances is not None:
        sweep_updates["distances_m"] = parse_distances(args.distances)
    spec = replace(spec, **sweep_updates)
    spec.validate()
    config = replace(config, drops=spec.drops, seed=spec.master_seed)
    if "zdd_ir" in spec.strategies:
        for mode in spec.modes:
            config.check_rejection_dims(mode)
    return config, spec


def _load_config(args):
    if args.config is not None:
        return parse_config(args.config)
    config = SystemConfig().validate()
    return config, SweepSpec(master_seed=config.seed)


def _cmd_sweep(args) -> int:
    config, spec = _load_config(args)
    config, spec = _apply_flag_overrides(args, config, spec)
    workers = _worker_count()
    n_cells = (
        len(spec.distances_m) * len(spec.strategies) * len(spec.directions)
        * len(spec.rsi_points_db) * len(spec.modes)
    )
    print(
        f"sweep: {n_cells} cells x {spec.drops} drops, {workers} worker(s)",
        file=sys.stderr,
    )

    def progress(done, total, row):
        sys.stderr.write(f"\r[{done}/{total}] {row.strategy} {row.direction} d={row.distance_m:g}")
        sys.stderr.flush()

    table = run_sweep(spec, config, workers=workers, progress=progress)
    sys.stderr.write("\n")
    out = Path(args.out)
    write_csv(table, out)
    write_manifest(config, spec, out)
    errors = [row for row in table.rows if row.error]
    for row in errors:
        print(f"error in cell {row.key()}: {row.error}", file=sys.stderr)
    print(f"wrote {len(table.rows)} rows to {out}")
    return 1 if errors else 0


def _format_link_rates(tag: str, rates, bandwidth_hz: float) -> list:
    lines = [f"link rates [{tag}] (bit/s/Hz, full time):"]
    for name in ("c_b2s", "c_s2u", "c_s2b", "c_u2s"):
        values = getattr(rates, name) / bandwidth_hz
        lines.append("  %-6s " % name + " ".join(_fmt(v) for v in values))
    return lines


def _cmd_drop(args) -> int:
    config, spec = _load_config(args)
    config, spec = _apply_flag_overrides(args, config, spec)
    distance = args.distance if args.distance is not None else config.sc_ring_distance_m
    rsi = spec.rsi_points_db[0]
    mode = spec.modes[0]
    config = replace(config, sc_ring_distance_m=float(distance), rsi_db=float(rsi)).validate()
    seed = spec.master_seed
    b = config.bandwidth_hz

    lines = [
        f"drop: seed={seed} distance={distance:g} m mode={mode} rsi={rsi:g} dB",
    ]
    half_duplex = generate_drop(config, "ctdd", np.random.default_rng(seed))
    lines += _format_link_rates("ctdd", ctdd_link_rates(half_duplex, config), b)
    full_duplex = generate_drop(config, mode, np.random.default_rng(seed))
    lines += _format_link_rates("zdd", zdd_link_rates(full_duplex, config), b)
    try:
        lines += _format_link_rates("zdd_ir", zddir_link_rates(full_duplex, config), b)
    except ConfigurationError as exc:
        lines.append(f"link rates [zdd_ir]: unavailable ({exc})")

    lines.append("strategy results (sum rate, bit/s/Hz):")
    for name in spec.strategies:
        drop = half_duplex if name in ("direct_zf", "ctdd_exh", "ctdd_sub") else full_duplex
        try:
            res = evaluate_strategy(name, drop, config)
        except ConfigurationError as exc:
            lines.append(f"  {name:<10} error: {exc}")
            continue
        lines.append(
            f"  {name:<10} dl={_fmt(res.dl_sum_rate_bps / b)} "
            f"ul={_fmt(res.ul_sum_rate_bps / b)}"
        )
        if res.time_plan is not None:
            plan = res.time_plan
            lines.append(
                f"             time plan: b2s={_fmt(plan.frac_b2s)} s2u={_fmt(plan.frac_s2u)}"
                f" s2b={_fmt(plan.frac_s2b)} u2s={_fmt(plan.frac_u2s)}"
            )
    print("\n".join(lines))
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(trend_drops=args.trend_drops)
    return 0 if ok else 1


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="backhaul-sim",
        description="Monte Carlo sum-rate simulator for small-cell in-band "
        "wireless backhaul under a massive-MIMO base station.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--drops", type=int, help="drops per sweep cell")
    common.add_argument("--strategies", help="comma list of strategies")
    common.add_argument("--direction", help="dl, ul, or both")
    common.add_argument("--rsi", help="comma list of RSI values in dB")
    common.add_argument("--mode", help="conservative, complete, or a comma list")
    common.add_argument("--distances", help="start:step:stop or comma list (m)")

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a sweep, write CSV + manifest")
    p_sweep.add_argument("--out", default="results.csv", help="output CSV path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_drop = sub.add_parser("drop", parents=[common], help="print one drop's rates for debugging")
    p_drop.add_argument("--distance", type=float, help="BS-SC distance in m")
    p_drop.set_defaults(func=_cmd_drop)

    p_self = sub.add_parser("selftest", parents=[common], help="run the invariant suite")
    p_self.add_argument(
        "--trend-drops", type=int, default=0,
        help="drops per point for the trend smoke check (0 skips it)",
    )
    p_self.set_defaults(func=_cmd_selftest)
    return parser


def run(argv=None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigFileError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())
