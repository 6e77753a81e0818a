"""Per-link achievable-rate formulas.

Zero-forcing scalars and stream SINRs, water-filling over SVD
eigenchannels, the full-duplex cross-link interference powers, the
interference-rejection beamformer built inside the user-channel null
space, and the residual-self-interference noise penalty.

Rates are computed for a single drop; expectation over channel
realizations is the Monte Carlo layer's job. All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ConfigurationError
from .matrix_ops import null_space_basis, pseudo_inverse, svd

__all__ = [
    "WaterfillResult",
    "LinkRates",
    "waterfilling",
    "zf_dl_scalar",
    "zf_dl_rate",
    "zf_ul_stream_sinrs",
    "zf_ul_rates",
    "p2p_svd_rate",
    "zdd_dl_interference",
    "zdd_ul_interference",
    "zdd_s2b_rate",
    "zddir_beamformer",
    "zddir_b2s_rate",
    "zddir_s2b_rate",
    "apply_rsi",
]


@dataclass(frozen=True)
class WaterfillResult:
    """Water-filling allocation over parallel channels.

    ``cutoff`` is the common SNR threshold: streams whose full-power SNR
    falls below it carry no power. ``power_fractions`` are in the order
    of the input SNR list and sum to 1 over the active streams.
    """

    cutoff: float
    active_streams: int
    power_fractions: np.ndarray
    capacity_bits_per_sec: float


@dataclass(frozen=True)
class LinkRates:
    """Full-time per-cell rates (bit/s) of the four communication parts.

    ``c_b2s``/``c_s2b`` are the downlink/uplink backhaul rates and
    ``c_s2u``/``c_u2s`` the downlink/uplink access rates, before any time
    fraction is applied. ``variant`` tags the strategy family they were
    computed for.
    """

    c_b2s: np.ndarray
    c_s2b: np.ndarray
    c_s2u: np.ndarray
    c_u2s: np.ndarray
    variant: str


def waterfilling(full_power_snrs, bandwidth_hz: float = 1.0) -> WaterfillResult:
    """Optimal power split across parallel channels with given SNRs.

    ``full_power_snrs`` holds each stream's SNR when it alone receives
    the whole power budget. Starting from all positive-SNR streams
    active, the cutoff ``S / (1 + sum(1/snr))`` is recomputed while the
    weakest active stream falls below it. Capacity is
    ``bandwidth * sum(log2(snr/cutoff))`` over the active streams.
    """
    gammas = np.asarray(full_power_snrs, dtype=float)
    if gammas.ndim != 1:
        raise ValueError("full_power_snrs must be one-dimensional")
    if np.any(gammas < 0) or not np.all(np.isfinite(gammas)):
        raise ValueError("stream SNRs must be finite and >= 0")

    order = np.argsort(gammas)[::-1]  # strongest first
    sorted_g = gammas[order]
    n_pos = int(np.count_nonzero(sorted_g > 0))
    if n_pos == 0:
        return WaterfillResult(
            cutoff=np.inf,
            active_streams=0,
            power_fractions=np.zeros_like(gammas),
            capacity_bits_per_sec=0.0,
        )

    s = n_pos
    inv_sum = float(np.sum(1.0 / sorted_g[:s]))
    cutoff = s / (1.0 + inv_sum)
    while s > 1 and sorted_g[s - 1] < cutoff:
        s -= 1
        inv_sum -= 1.0 / sorted_g[s]
        cutoff = s / (1.0 + inv_sum)

    fractions = np.zeros_like(gammas)
    active = order[:s]
    fractions[active] = 1.0 / cutoff - 1.0 / gammas[active]
    capacity = bandwidth_hz * float(np.sum(np.log2(sorted_g[:s] / cutoff)))
    return WaterfillResult(
        cutoff=cutoff,
        active_streams=s,
        power_fractions=fractions,
        capacity_bits_per_sec=capacity,
    )


def zf_dl_scalar(h_dagger: np.ndarray, p_total_w: float, n_tx: int) -> float:
    """Amplitude scaling that puts the hottest transmit antenna at full power.

    With per-antenna budgets of ``p_total/n_tx``, the zero-forcing
    beamformer is scaled by ``sqrt(p_total/n_tx) / max_row_norm`` so at
    least one antenna transmits at its limit.
    """
    row_norms = np.linalg.norm(h_dagger, axis=1)
    max_norm = float(np.max(row_norms))
    if max_norm == 0.0:
        raise ValueError("all rows of the beamformer are zero")
    return float(np.sqrt(p_total_w / n_tx) / max_norm)


def zf_dl_rate(
    phi: float, bandwidth_hz: float, noise_w_hz: float, n_rx_per_node: int
) -> float:
    """Per-node downlink rate under a common zero-forcing scalar.

    Every node sees the identical post-processing SNR phi^2/(B*noise),
    hence the identical rate B * n_rx * log2(1 + snr).
    """
    snr = phi**2 / (bandwidth_hz * noise_w_hz)
    return bandwidth_hz * n_rx_per_node * float(np.log2(snr + 1.0))


def zf_ul_stream_sinrs(
    h_dagger: np.ndarray,
    p_node_w: float,
    n_streams_per_node: int,
    bandwidth_hz: float,
    noise_w_hz: float,
    interference_w=None,
) -> np.ndarray:
    """Post-decoding SINR grid for equal-power uplink streams.

    Column j of the decoder serves stream i of node k with
    j = i + k*n_streams; its SINR is
    (p_node/n_streams) / (B*noise*||col_j||^2 + interference_j).
    Returns an (n_nodes, n_streams) array.
    """
    col_norms_sq = np.sum(np.abs(h_dagger) ** 2, axis=0)
    n_cols = col_norms_sq.shape[0]
    if n_cols % n_streams_per_node != 0:
        raise ValueError(
            f"{n_cols} decoder columns do not divide into nodes of "
            f"{n_streams_per_node} streams"
        )
    if interference_w is None:
        interference_w = 0.0
    denom = bandwidth_hz * noise_w_hz * col_norms_sq + interference_w
    sinr = (p_node_w / n_streams_per_node) / denom
    return sinr.reshape(-1, n_streams_per_node)


def zf_ul_rates(sinr_grid: np.ndarray, bandwidth_hz: float) -> np.ndarray:
    """Per-node uplink rate: B * sum over streams of log2(1 + sinr)."""
    return bandwidth_hz * np.sum(np.log2(sinr_grid + 1.0), axis=1)


def p2p_svd_rate(
    h_small: np.ndarray,
    a_gain: float,
    p_total_w: float,
    bandwidth_hz: float,
    noise_w_hz: float,
    interference_w: float = 0.0,
    n_tx_limit: int | None = None,
) -> float:
    """Point-to-point MIMO rate with SVD beamforming and water-filling.

    ``h_small`` is the small-scale channel (receive x transmit);
    ``n_tx_limit`` restricts transmission to the first columns. Each
    eigenchannel's full-power SNR is
    a * s^2 * p_total / (B*noise + interference).
    """
    if n_tx_limit is not None:
        h_small = h_small[:, :n_tx_limit]
    s = svd(h_small).singular_values
    gammas = a_gain * s**2 * p_total_w / (bandwidth_hz * noise_w_hz + interference_w)
    return waterfilling(gammas, bandwidth_hz).capacity_bits_per_sec


def zdd_dl_interference(
    h_b2u_k: np.ndarray,
    h_b2s_dagger: np.ndarray,
    a_b2u_k: float,
    phi_b2s_sq: float,
) -> float:
    """Backhaul-beam power leaking into user k while its cell transmits.

    ``h_b2u_k`` is user k's small-scale channel from the base station and
    ``phi_b2s_sq`` the squared backhaul beamforming scalar; the leak is
    a_k * phi^2 * ||h_b2u_k @ h_b2s_dagger||_F^2 watts.
    """
    return float(
        a_b2u_k * phi_b2s_sq * np.linalg.norm(h_b2u_k @ h_b2s_dagger) ** 2
    )


def zdd_ul_interference(
    h_b2u_compound: np.ndarray, h_b2s_dagger: np.ndarray, p_ue_w: float
) -> np.ndarray:
    """User-uplink power leaking into each decoded backhaul stream.

    Stream j of the backhaul decoder picks up
    p_ue * ||column j of (compound_b2u @ h_b2s_dagger)||^2 watts from the
    simultaneously transmitting users. Returns the flat per-stream vector.
    """
    leak = h_b2u_compound @ h_b2s_dagger
    return p_ue_w * np.sum(np.abs(leak) ** 2, axis=0)


def zdd_s2b_rate(
    h_b2s_dagger: np.ndarray,
    p_sc_w: float,
    n_sct: int,
    bandwidth_hz: float,
    noise_bs_w_hz: float,
    interference_w,
) -> np.ndarray:
    """Per-cell uplink backhaul rate with user interference per stream."""
    sinr = zf_ul_stream_sinrs(
        h_b2s_dagger, p_sc_w, n_sct, bandwidth_hz, noise_bs_w_hz, interference_w
    )
    return zf_ul_rates(sinr, bandwidth_hz)


def zddir_beamformer(
    h_b2u_compound: np.ndarray,
    h_b2s_compound: np.ndarray,
    rejection_basis: np.ndarray | None = None,
) -> np.ndarray:
    """Backhaul beamformer confined to the null space of the user channel.

    Projecting onto an orthonormal basis R of the user channel's null
    space and right-inverting the projected backhaul channel gives
    G = R @ pinv(h_b2s @ R): the backhaul sees an identity channel while
    users receive exactly nothing. Needs n_bs >= (user rows + SC rows).
    """
    n_bs = h_b2u_compound.shape[1]
    needed = h_b2u_compound.shape[0] + h_b2s_compound.shape[0]
    if n_bs < needed:
        raise ConfigurationError(
            f"interference rejection requires n_bs >= user streams + SC streams: "
            f"n_bs={n_bs} < {h_b2u_compound.shape[0]}+{h_b2s_compound.shape[0]}={needed}"
        )
    r = rejection_basis if rejection_basis is not None else null_space_basis(h_b2u_compound)
    return r @ pseudo_inverse(h_b2s_compound @ r)


def zddir_b2s_rate(
    g: np.ndarray,
    p_bs_w: float,
    n_bs: int,
    n_scr: int,
    bandwidth_hz: float,
    noise_sc_w_hz: float,
) -> float:
    """Per-cell downlink backhaul rate through the rejection beamformer.

    The per-antenna power constraint acts on G's rows exactly as on a
    plain zero-forcing beamformer, so every cell gets the same rate.
    """
    phi = zf_dl_scalar(g, p_bs_w, n_bs)
    return zf_dl_rate(phi, bandwidth_hz, noise_sc_w_hz, n_scr)


def zddir_s2b_rate(
    g: np.ndarray,
    p_sc_w: float,
    n_sct: int,
    bandwidth_hz: float,
    noise_bs_w_hz: float,
) -> np.ndarray:
    """Per-cell uplink backhaul rate through the rejection decoder.

    User interference is nulled by construction, so only the decoder
    column norms shape the stream SNRs.
    """
    sinr = zf_ul_stream_sinrs(g, p_sc_w, n_sct, bandwidth_hz, noise_bs_w_hz)
    return zf_ul_rates(sinr, bandwidth_hz)


def apply_rsi(noise_w_hz: float, rsi_db: float) -> float:
    """Raise a full-duplex receiver's noise floor by the residual
    self-interference figure in dB."""
    if rsi_db < 0:
        raise ValueError("rsi_db must be >= 0")
    return noise_w_hz * 10.0 ** (rsi_db / 10.0)
