"""Built-in invariant suite behind the ``selftest`` subcommand.

A fast, self-contained subset of the acceptance properties: linear
algebra contracts at production shapes, water-filling against a brute
force power grid, the interference-rejection identities, the degenerate
equivalences between strategy variants, and sweep determinism. The full
suite, including the independently written toy oracle and the trend
reproduction runs, lives in the pytest tree.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .channel import Drop, SystemConfig, generate_drop
from .link_rates import apply_rsi, waterfilling
from .matrix_ops import null_space_basis, pseudo_inverse, svd
from .montecarlo import SweepSpec, run_sweep
from .strategies import (
    ctdd_link_rates,
    zdd_link_rates,
    zddir_link_rates,
)
from . import cli

__all__ = ["run_selftest", "grid_search_capacity", "reduced_drop"]


def grid_search_capacity(gammas, step: float = 1e-3) -> float:
    """Brute-force water-filling reference: best capacity over a power
    grid of the given step on the simplex (up to three streams)."""
    g = np.asarray(gammas, dtype=float)
    if g.size == 1:
        return float(np.log2(1.0 + g[0]))
    fracs = np.arange(0.0, 1.0 + step / 2, step)
    if g.size == 2:
        caps = np.log2(1.0 + g[0] * fracs) + np.log2(1.0 + g[1] * (1.0 - fracs))
        return float(np.max(caps))
    if g.size == 3:
        p1, p2 = np.meshgrid(fracs, fracs, indexing="ij")
        keep = p1 + p2 <= 1.0 + step / 2
        p1, p2 = p1[keep], p2[keep]
        p3 = np.clip(1.0 - p1 - p2, 0.0, 1.0)
        caps = (
            np.log2(1.0 + g[0] * p1)
            + np.log2(1.0 + g[1] * p2)
            + np.log2(1.0 + g[2] * p3)
        )
        return float(np.max(caps))
    raise ValueError("grid search supports at most 3 streams")


def reduced_drop(drop: Drop, antennas) -> Drop:
    """Half-duplex drop restricted to a subset of each cell's antennas."""
    sel = np.asarray(antennas, dtype=int)
    n_new = sel.size
    k = drop.num_cells
    h_b2s = np.concatenate(
        [drop.h_b2s_full[i * drop.n_sc + sel] for i in range(k)], axis=0
    )
    return dataclasses.replace(
        drop,
        h_b2s_full=h_b2s,
        h_s2u_full=drop.h_s2u_full[:, :, sel],
        n_sc=n_new,
        n_sct=n_new,
        n_scr=n_new,
    )


def _crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _check_linear_algebra(n_instances: int = 60):
    rng = np.random.default_rng(20240801)
    worst_orth = worst_recon = worst_null = worst_gram = 0.0
    for _ in range(n_instances):
        for shape in ((8, 256), (32, 256)):
            h = _crandn(rng, shape)
            hd = pseudo_inverse(h)
            worst_orth = max(worst_orth, np.max(np.abs(h @ hd - np.eye(shape[0]))))
            f = svd(h)
            recon = (f.u * f.singular_values) @ f.v.conj().T
            worst_recon = max(
                worst_recon, np.linalg.norm(recon - h) / np.linalg.norm(h)
            )
        h = _crandn(rng, (8, 256))
        basis = null_space_basis(h)
        if basis.shape != (256, 248):
            return False, f"null basis shape {basis.shape} != (256, 248)"
        worst_null = max(
            worst_null, np.linalg.norm(h @ basis) / np.linalg.norm(h)
        )
        worst_gram = max(
            worst_gram,
            np.max(np.abs(basis.conj().T @ basis - np.eye(basis.shape[1]))),
        )
    ok = worst_orth <= 1e-8 and worst_recon <= 1e-10 and worst_null <= 1e-8 and worst_gram <= 1e-10
    return ok, (
        f"orth {worst_orth:.2e} recon {worst_recon:.2e} "
        f"null {worst_null:.2e} gram {worst_gram:.2e}"
    )


def _check_waterfilling(n_grid: int = 200, n_kkt: int = 2000):
    rng = np.random.default_rng(20240802)
    worst_gap = 0.0
    for _ in range(n_grid):
        n = int(rng.integers(1, 4))
        gammas = 10.0 ** rng.uniform(-1.5, 3.0, size=n)
        gap = abs(
            waterfilling(gammas).capacity_bits_per_sec - grid_search_capacity(gammas)
        )
        worst_gap = max(worst_gap, gap)
    if worst_gap > 1e-3:
        return False, f"grid-search gap {worst_gap:.2e} > 1e-3"

    for _ in range(n_kkt):
        n = int(rng.integers(1, 9))
        gammas = 10.0 ** rng.uniform(-2.0, 3.0, size=n)
        gammas[rng.random(n) < 0.2] = 0.0
        res = waterfilling(gammas)
        active = res.power_fractions > 0
        if res.active_streams > 0:
            if abs(res.power_fractions.sum() - 1.0) > 1e-9:
                return False, "power fractions do not sum to 1"
            if np.any(gammas[active] < res.cutoff * (1 - 1e-12)):
                return False, "active stream below cutoff"
        inactive = (res.power_fractions == 0) & (gammas < res.cutoff)
        if not np.all(inactive | active):
            return False, "inactive stream at or above cutoff"
        if res.capacity_bits_per_sec < 0:
            return False, "negative capacity"
    return True, f"grid gap {worst_gap:.2e}, {n_kkt} KKT lists clean"


def _check_ir_identities(n_drops: int = 20):
    config = SystemConfig().validate()
    worst_null = worst_identity = 0.0
    for i in range(n_drops):
        drop = generate_drop(config, "conservative", np.random.default_rng(3000 + i))
        compound_b2u = drop.compound_b2u()
        basis = null_space_basis(compound_b2u)
        for compound_sc in (drop.compound_b2s_rx(), drop.compound_b2s_tx()):
            g = basis @ pseudo_inverse(compound_sc @ basis)
            worst_null = max(worst_null, np.max(np.abs(compound_b2u @ g)))
            worst_identity = max(
                worst_identity,
                np.max(np.abs(compound_sc @ g - np.eye(compound_sc.shape[0]))),
            )
    ok = worst_null <= 1e-7 and worst_identity <= 1e-7
    return ok, f"user leak {worst_null:.2e}, right-inverse gap {worst_identity:.2e}"


def _check_degenerate_equivalences(n_drops: int = 5):
    config = dataclasses.replace(SystemConfig(), rsi_db=0.0).validate()
    for i in range(n_drops):
        drop = generate_drop(config, "conservative", np.random.default_rng(4000 + i))
        rx_sel = range(drop.n_sc - drop.n_scr, drop.n_sc)
        tx_sel = range(0, drop.n_sct)
        on_rx = ctdd_link_rates(reduced_drop(drop, rx_sel), config)
        on_tx = ctdd_link_rates(reduced_drop(drop, tx_sel), config)
        duplex = zdd_link_rates(drop, config)
        rejected = zddir_link_rates(drop, config)

        if not np.array_equal(duplex.c_b2s, on_rx.c_b2s):
            return False, "full-duplex backhaul dl != half-duplex on receive antennas"
        if not np.array_equal(duplex.c_u2s, on_rx.c_u2s):
            return False, "full-duplex access ul != half-duplex on receive antennas"
        if not np.array_equal(rejected.c_s2u, on_tx.c_s2u):
            return False, "rejected access dl != half-duplex on transmit antennas"
        if not np.array_equal(rejected.c_u2s, duplex.c_u2s):
            return False, "rejected access ul != full-duplex access ul"

        silent = dataclasses.replace(drop, a_b2u=np.zeros(drop.num_cells))
        quiet = zdd_link_rates(silent, config)
        if not np.array_equal(quiet.c_s2u, on_tx.c_s2u):
            return False, "zero user path gain does not remove dl interference"
        if not np.array_equal(quiet.c_s2b, on_tx.c_s2b):
            return False, "zero user path gain does not remove ul interference"

        x = drop.noise_sc_w_hz
        if apply_rsi(x, 0.0) != x:
            return False, "zero-dB self-interference changes the noise floor"
    return True, f"{n_drops} drops, all variant identities exact"


def _check_determinism():
    config = dataclasses.replace(SystemConfig(), n_bs=32, num_cells=2).validate()
    spec = SweepSpec(
        distances_m=(200.0, 800.0),
        strategies=("direct_zf", "ctdd_sub", "zdd"),
        directions=("dl",),
        drops=10,
        master_seed=7,
    )
    first = run_sweep(spec, config, workers=1)
    second = run_sweep(spec, config, workers=1)
    parallel = run_sweep(spec, config, workers=2)
    text = cli.csv_text(first)
    if text != cli.csv_text(second):
        return False, "two serial runs differ"
    if text != cli.csv_text(parallel):
        return False, "serial and parallel runs differ"
    return True, f"{len(first.rows)} cells bit-identical across runs and workers"


def _check_trend_smoke(drops: int):
    config = SystemConfig().validate()
    spec = SweepSpec(
        distances_m=(200.0, 700.0, 1500.0),
        strategies=("direct_zf",),
        directions=("dl",),
        drops=drops,
        master_seed=11,
    )
    table = run_sweep(spec, config, workers=1)
    means = [row.mean_bps_per_hz for row in table.rows]
    if not (means[0] > means[1] > means[2]):
        return False, f"direct_zf dl means not decreasing: {means}"
    return True, f"direct_zf dl decreasing over {spec.distances_m}"


def run_selftest(trend_drops: int = 0, out=None) -> bool:
    """Run every check, print one PASS/FAIL line each, return overall truth."""
    import sys

    out = out if out is not None else sys.stdout
    checks = [
        ("linear-algebra contracts", _check_linear_algebra),
        ("water-filling vs grid search + KKT", _check_waterfilling),
        ("interference-rejection identities", _check_ir_identities),
        ("degenerate variant equivalences", _check_degenerate_equivalences),
        ("sweep determinism", _check_determinism),
    ]
    if trend_drops > 0:
        checks.append(("trend smoke", lambda: _check_trend_smoke(trend_drops)))
    all_ok = True
    for name, func in checks:
        ok, detail = func()
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=out)
    print("selftest " + ("passed" if all_ok else "FAILED"), file=out)
    return all_ok
