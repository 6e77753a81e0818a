"""Per-drop sum rates for the five backhaul strategies.

direct_zf serves users straight from the base station; ctdd_exh and
ctdd_sub time-share backhaul and access phases; zdd runs both at once on
full-duplex small cells; zdd_ir additionally confines the base station's
beams to the null space of the user channel so the cross links carry no
interference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ConfigurationError, Drop, SystemConfig
from .link_rates import (
    LinkRates,
    apply_rsi,
    p2p_svd_rate,
    zdd_dl_interference,
    zdd_s2b_rate,
    zdd_ul_interference,
    zddir_b2s_rate,
    zddir_beamformer,
    zddir_s2b_rate,
    zf_dl_rate,
    zf_dl_scalar,
    zf_ul_rates,
    zf_ul_stream_sinrs,
)
from .matrix_ops import null_space_basis, pseudo_inverse

__all__ = [
    "STRATEGY_NAMES",
    "TimePlan",
    "StrategyResult",
    "direct_zf",
    "ctdd_link_rates",
    "zdd_link_rates",
    "zddir_link_rates",
    "ctdd_time_candidates",
    "ctdd_sub_plan",
    "ctdd_exh",
    "ctdd_sub",
    "ctdd_exh_from_rates",
    "ctdd_sub_from_rates",
    "zdd",
    "zdd_ir",
    "evaluate_strategy",
    "drop_mode_for",
]

STRATEGY_NAMES = ("direct_zf", "ctdd_exh", "ctdd_sub", "zdd", "zdd_ir")


@dataclass(frozen=True)
class TimePlan:
    """Fractions of the coherence slot given to each sub-phase.

    frac_b2s + frac_s2u spans the downlink share, frac_s2b + frac_u2s
    the uplink share.
    """

    frac_b2s: float
    frac_s2u: float
    frac_s2b: float
    frac_u2s: float


@dataclass(frozen=True)
class StrategyResult:
    """Downlink/uplink sum rates of one strategy on one drop (bit/s)."""

    strategy: str
    dl_sum_rate_bps: float
    ul_sum_rate_bps: float
    dl_per_sc_bps: np.ndarray
    ul_per_sc_bps: np.ndarray
    time_plan: TimePlan | None = None


def _equalizing_split(c_first: float, c_second: float, total: float):
    """Split ``total`` time so both phases move the same number of bits.

    Time goes to a phase in proportion to the other phase's rate. A
    dead link gets no time, and neither does an infinitely fast one.
    """
    first_needs_none = c_first == 0 or np.isinf(c_first)
    second_needs_none = c_second == 0 or np.isinf(c_second)
    if first_needs_none and second_needs_none:
        return 0.5 * total, 0.5 * total
    if first_needs_none:
        return 0.0, total
    if second_needs_none:
        return total, 0.0
    share = c_second / (c_first + c_second)
    return share * total, (1.0 - share) * total


def _phase_throughput(frac: float, rates: np.ndarray) -> np.ndarray:
    """Throughput of a phase; an infinite-rate link is never the bottleneck."""
    rates = np.asarray(rates, dtype=float)
    finite = np.isfinite(rates)
    out = np.full(rates.shape, np.inf)
    out[finite] = frac * rates[finite]
    return out


def _ctdd_per_sc(rates: LinkRates, plan: TimePlan):
    dl = np.minimum(
        _phase_throughput(plan.frac_b2s, rates.c_b2s),
        _phase_throughput(plan.frac_s2u, rates.c_s2u),
    )
    ul = np.minimum(
        _phase_throughput(plan.frac_u2s, rates.c_u2s),
        _phase_throughput(plan.frac_s2b, rates.c_s2b),
    )
    return dl, ul


def direct_zf(drop: Drop, config: SystemConfig) -> StrategyResult:
    """Zero-forcing directly between the base station and the users."""
    b = config.bandwidth_hz
    h_dagger = pseudo_inverse(drop.compound_b2u())
    phi = zf_dl_scalar(h_dagger, config.p_bs_w, config.n_bs)
    c_dl = zf_dl_rate(phi, b, drop.noise_ue_w_hz, drop.n_ue)
    dl_per_sc = config.frac_dl * np.full(drop.num_cells, c_dl)

    sinr = zf_ul_stream_sinrs(h_dagger, config.p_ue_w, drop.n_ue, b, drop.noise_bs_w_hz)
    ul_per_sc = config.frac_ul * zf_ul_rates(sinr, b)
    return StrategyResult(
        strategy="direct_zf",
        dl_sum_rate_bps=float(np.sum(dl_per_sc)),
        ul_sum_rate_bps=float(np.sum(ul_per_sc)),
        dl_per_sc_bps=dl_per_sc,
        ul_per_sc_bps=ul_per_sc,
    )


def ctdd_link_rates(drop: Drop, config: SystemConfig) -> LinkRates:
    """Full-time link rates when backhaul and access are time separated.

    All n_sc antennas of each small cell serve both directions; no
    cross-link interference and no self-interference penalty exist.
    """
    b = config.bandwidth_hz
    k = drop.num_cells
    h_dagger = pseudo_inverse(drop.compound_b2s_full())
    phi = zf_dl_scalar(h_dagger, config.p_bs_w, config.n_bs)
    c_b2s = np.full(k, zf_dl_rate(phi, b, drop.noise_sc_w_hz, drop.n_sc))
    sinr = zf_ul_stream_sinrs(h_dagger, config.p_sc_w, drop.n_sc, b, drop.noise_bs_w_hz)
    c_s2b = zf_ul_rates(sinr, b)

    c_s2u = np.empty(k)
    c_u2s = np.empty(k)
    for i in range(k):
        h = drop.h_s2u_full[i]
        c_s2u[i] = p2p_svd_rate(
            h, drop.a_s2u[i], config.p_sc_w, b, drop.noise_ue_w_hz
        )
        c_u2s[i] = p2p_svd_rate(
            h.T, drop.a_s2u[i], config.p_ue_w, b, drop.noise_sc_w_hz
        )
    return LinkRates(c_b2s=c_b2s, c_s2b=c_s2b, c_s2u=c_s2u, c_u2s=c_u2s, variant="ctdd")


def zdd_link_rates(drop: Drop, config: SystemConfig) -> LinkRates:
    """Full-time link rates with full-duplex small cells.

    Backhaul and access share the slot: the downlink backhaul beam leaks
    into users and the user uplink leaks into the decoded backhaul
    streams. Residual self-interference raises the small cells' noise
    floor on both links they receive.
    """
    b = config.bandwidth_hz
    k = drop.num_cells
    noise_sc = apply_rsi(drop.noise_sc_w_hz, config.rsi_db)

    h_dagger_rx = pseudo_inverse(drop.compound_b2s_rx())
    phi_rx = zf_dl_scalar(h_dagger_rx, config.p_bs_w, config.n_bs)
    c_b2s = np.full(k, zf_dl_rate(phi_rx, b, noise_sc, drop.n_scr))

    c_s2u = np.empty(k)
    c_u2s = np.empty(k)
    for i in range(k):
        h_b2u_i = drop.h_b2u[i * drop.n_ue : (i + 1) * drop.n_ue]
        leak = zdd_dl_interference(h_b2u_i, h_dagger_rx, drop.a_b2u[i], phi_rx**2)
        c_s2u[i] = p2p_svd_rate(
            drop.h_s2u_tx(i), drop.a_s2u[i], config.p_sc_w, b,
            drop.noise_ue_w_hz, interference_w=leak,
        )
        c_u2s[i] = p2p_svd_rate(
            drop.h_s2u_rx(i).T, drop.a_s2u[i], config.p_ue_w, b, noise_sc
        )

    if drop.n_sct == drop.n_scr == drop.n_sc:
        h_dagger_tx = h_dagger_rx
    else:
        h_dagger_tx = pseudo_inverse(drop.compound_b2s_tx())
    p_itf = config.p_ue_w / drop.n_ue if config.split_ue_interference_power else config.p_ue_w
    leak_ul = zdd_ul_interference(drop.compound_b2u(), h_dagger_tx, p_itf)
    c_s2b = zdd_s2b_rate(
        h_dagger_tx, config.p_sc_w, drop.n_sct, b, drop.noise_bs_w_hz, leak_ul
    )
    return LinkRates(c_b2s=c_b2s, c_s2b=c_s2b, c_s2u=c_s2u, c_u2s=c_u2s, variant="zdd")


def zddir_link_rates(drop: Drop, config: SystemConfig) -> LinkRates:
    """Full-time link rates with full-duplex cells and interference
    rejection at the base station.

    The base station beamforms and decodes inside the null space of the
    compound user channel, so both cross-link leaks vanish; the price is
    a slightly less efficient backhaul beamformer.
    """
    b = config.bandwidth_hz
    k = drop.num_cells
    for n_side, tag in ((drop.n_scr, "n_scr"), (drop.n_sct, "n_sct")):
        needed = k * (drop.n_ue + n_side)
        if config.n_bs < needed:
            raise ConfigurationError(
                f"interference rejection requires n_bs >= num_cells*(n_ue+{tag}): "
                f"n_bs={config.n_bs} < {k}*({drop.n_ue}+{n_side})={needed}"
            )
    noise_sc = apply_rsi(drop.noise_sc_w_hz, config.rsi_db)

    compound_b2u = drop.compound_b2u()
    basis = null_space_basis(compound_b2u)
    g_dl = zddir_beamformer(compound_b2u, drop.compound_b2s_rx(), rejection_basis=basis)
    c_b2s = np.full(
        k, zddir_b2s_rate(g_dl, config.p_bs_w, config.n_bs, drop.n_scr, b, noise_sc)
    )

    c_s2u = np.empty(k)
    c_u2s = np.empty(k)
    for i in range(k):
        c_s2u[i] = p2p_svd_rate(
            drop.h_s2u_tx(i), drop.a_s2u[i], config.p_sc_w, b, drop.noise_ue_w_hz
        )
        c_u2s[i] = p2p_svd_rate(
            drop.h_s2u_rx(i).T, drop.a_s2u[i], config.p_ue_w, b, noise_sc
        )

    if drop.n_sct == drop.n_scr == drop.n_sc:
        g_ul = g_dl  # transmit and receive sides are the same antennas
    else:
        g_ul = zddir_beamformer(compound_b2u, drop.compound_b2s_tx(), rejection_basis=basis)
    c_s2b = zddir_s2b_rate(g_ul, config.p_sc_w, drop.n_sct, b, drop.noise_bs_w_hz)
    return LinkRates(c_b2s=c_b2s, c_s2b=c_s2b, c_s2u=c_s2u, c_u2s=c_u2s, variant="zdd_ir")


def ctdd_time_candidates(rates: LinkRates, config: SystemConfig) -> list[TimePlan]:
    """One candidate plan per cell, each equalizing that cell's phases."""
    plans = []
    for k in range(rates.c_b2s.shape[0]):
        fb, fs = _equalizing_split(rates.c_b2s[k], rates.c_s2u[k], config.frac_dl)
        fsb, fu = _equalizing_split(rates.c_s2b[k], rates.c_u2s[k], config.frac_ul)
        plans.append(TimePlan(frac_b2s=fb, frac_s2u=fs, frac_s2b=fsb, frac_u2s=fu))
    return plans


def ctdd_sub_plan(rates: LinkRates, config: SystemConfig) -> TimePlan:
    """Global plan treating all backhaul links as one and all access
    links as one."""
    fb, fs = _equalizing_split(
        float(np.sum(rates.c_b2s)), float(np.sum(rates.c_s2u)), config.frac_dl
    )
    fsb, fu = _equalizing_split(
        float(np.sum(rates.c_s2b)), float(np.sum(rates.c_u2s)), config.frac_ul
    )
    return TimePlan(frac_b2s=fb, frac_s2u=fs, frac_s2b=fsb, frac_u2s=fu)


def ctdd_exh_from_rates(rates: LinkRates, config: SystemConfig) -> StrategyResult:
    """Best global plan among the per-cell candidates plus the summed-rate
    plan, downlink and uplink chosen independently."""
    candidates = ctdd_time_candidates(rates, config)
    candidates.append(ctdd_sub_plan(rates, config))
    per_plan = [_ctdd_per_sc(rates, plan) for plan in candidates]
    dl_sums = np.array([float(np.sum(dl)) for dl, _ in per_plan])
    ul_sums = np.array([float(np.sum(ul)) for _, ul in per_plan])
    best_dl = int(np.argmax(dl_sums))
    best_ul = int(np.argmax(ul_sums))
    plan = TimePlan(
        frac_b2s=candidates[best_dl].frac_b2s,
        frac_s2u=candidates[best_dl].frac_s2u,
        frac_s2b=candidates[best_ul].frac_s2b,
        frac_u2s=candidates[best_ul].frac_u2s,
    )
    return StrategyResult(
        strategy="ctdd_exh",
        dl_sum_rate_bps=float(dl_sums[best_dl]),
        ul_sum_rate_bps=float(ul_sums[best_ul]),
        dl_per_sc_bps=per_plan[best_dl][0],
        ul_per_sc_bps=per_plan[best_ul][1],
        time_plan=plan,
    )


def ctdd_sub_from_rates(rates: LinkRates, config: SystemConfig) -> StrategyResult:
    plan = ctdd_sub_plan(rates, config)
    dl, ul = _ctdd_per_sc(rates, plan)
    return StrategyResult(
        strategy="ctdd_sub",
        dl_sum_rate_bps=float(np.sum(dl)),
        ul_sum_rate_bps=float(np.sum(ul)),
        dl_per_sc_bps=dl,
        ul_per_sc_bps=ul,
        time_plan=plan,
    )


def ctdd_exh(drop: Drop, config: SystemConfig) -> StrategyResult:
    return ctdd_exh_from_rates(ctdd_link_rates(drop, config), config)


def ctdd_sub(drop: Drop, config: SystemConfig) -> StrategyResult:
    return ctdd_sub_from_rates(ctdd_link_rates(drop, config), config)


def zdd(drop: Drop, config: SystemConfig) -> StrategyResult:
    """Full-duplex small cells: each direction is limited by the weaker
    of its simultaneous backhaul and access parts."""
    rates = zdd_link_rates(drop, config)
    dl = config.frac_dl * np.minimum(rates.c_b2s, rates.c_s2u)
    ul = config.frac_ul * np.minimum(rates.c_u2s, rates.c_s2b)
    return StrategyResult(
        strategy="zdd",
        dl_sum_rate_bps=float(np.sum(dl)),
        ul_sum_rate_bps=float(np.sum(ul)),
        dl_per_sc_bps=dl,
        ul_per_sc_bps=ul,
    )


def zdd_ir(drop: Drop, config: SystemConfig) -> StrategyResult:
    """Full duplex plus base-station interference rejection."""
    rates = zddir_link_rates(drop, config)
    dl = config.frac_dl * np.minimum(rates.c_b2s, rates.c_s2u)
    ul = config.frac_ul * np.minimum(rates.c_u2s, rates.c_s2b)
    return StrategyResult(
        strategy="zdd_ir",
        dl_sum_rate_bps=float(np.sum(dl)),
        ul_sum_rate_bps=float(np.sum(ul)),
        dl_per_sc_bps=dl,
        ul_per_sc_bps=ul,
    )


_STRATEGY_FUNCS = {
    "direct_zf": direct_zf,
    "ctdd_exh": ctdd_exh,
    "ctdd_sub": ctdd_sub,
    "zdd": zdd,
    "zdd_ir": zdd_ir,
}


def evaluate_strategy(name: str, drop: Drop, config: SystemConfig) -> StrategyResult:
    try:
        func = _STRATEGY_FUNCS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown strategy {name!r}; expected one of {STRATEGY_NAMES}"
        ) from None
    return func(drop, config)


def drop_mode_for(strategy: str, mode: str) -> str:
    """Half-duplex strategies always see the full antenna set."""
    if strategy in ("direct_zf", "ctdd_exh", "ctdd_sub"):
        return "ctdd"
    return mode
