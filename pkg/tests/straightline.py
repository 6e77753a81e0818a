"""Independent straight-line evaluation of all five strategies.

Written directly against the rate formulas with plain numpy calls and a
bisection water-filler, sharing no computation code with the package.
Used by the acceptance suite to arbitrate per-drop strategy outputs at
toy scale. Antenna conventions match the documented drop layout:
transmit antennas are the first n_sct of each cell, receive antennas the
last n_scr.
"""

import numpy as np

from helpers import bisect_waterfill_capacity


def _row_block(matrix, k, per):
    return matrix[k * per : (k + 1) * per]


def _scale_rows(matrix, gains, per):
    return matrix * np.repeat(np.sqrt(gains), per)[:, None]


def _wf_rate(h_small, a, p, b, noise, interference=0.0):
    lam = np.linalg.svd(h_small, compute_uv=False)
    gammas = a * lam**2 * p / (b * noise + interference)
    return bisect_waterfill_capacity(gammas, b)


def _zf_dl(compound, p_total, n_tx, b, noise, n_rx):
    decoder = np.linalg.pinv(compound)
    phi = np.sqrt(p_total / n_tx) / np.max(np.linalg.norm(decoder, axis=1))
    snr = phi**2 / (b * noise)
    return b * n_rx * np.log2(1.0 + snr), decoder, phi


def _zf_ul_rates(decoder, p_node, n_streams, b, noise, interference=None):
    amp = np.sum(np.abs(decoder) ** 2, axis=0)
    itf = np.zeros_like(amp) if interference is None else interference
    sinr = (p_node / n_streams) / (b * noise * amp + itf)
    return b * np.sum(np.log2(1.0 + sinr).reshape(-1, n_streams), axis=1)


def _equal_split(c_a, c_b, total):
    if (c_a == 0 or np.isinf(c_a)) and (c_b == 0 or np.isinf(c_b)):
        return total / 2, total / 2
    if c_a == 0 or np.isinf(c_a):
        return 0.0, total
    if c_b == 0 or np.isinf(c_b):
        return total, 0.0
    ta = c_b / (c_a + c_b) * total
    return ta, total - ta


def evaluate_all(drop, config):
    """Per-drop sum rates (dl, ul) of every strategy, bit/s."""
    b = config.bandwidth_hz
    k = drop.num_cells
    n_sc, n_sct, n_scr, n_ue = drop.n_sc, drop.n_sct, drop.n_scr, drop.n_ue
    noise_bs, noise_sc, noise_ue = (
        drop.noise_bs_w_hz,
        drop.noise_sc_w_hz,
        drop.noise_ue_w_hz,
    )
    noise_sc_fd = noise_sc * 10.0 ** (config.rsi_db / 10.0)
    out = {}

    # --- base station directly to users -------------------------------
    compound_ue = _scale_rows(drop.h_b2u, drop.a_b2u, n_ue)
    c_dl, decoder_ue, _ = _zf_dl(compound_ue, config.p_bs_w, config.n_bs, b, noise_ue, n_ue)
    ul_rates = _zf_ul_rates(decoder_ue, config.p_ue_w, n_ue, b, noise_bs)
    out["direct_zf"] = (
        config.frac_dl * k * c_dl,
        config.frac_ul * float(np.sum(ul_rates)),
    )

    # --- time-shared backhaul and access ------------------------------
    compound_sc = _scale_rows(drop.h_b2s_full, drop.a_b2s, n_sc)
    c_b2s, decoder_sc, _ = _zf_dl(compound_sc, config.p_bs_w, config.n_bs, b, noise_sc, n_sc)
    c_b2s = np.full(k, c_b2s)
    c_s2b = _zf_ul_rates(decoder_sc, config.p_sc_w, n_sc, b, noise_bs)
    c_s2u = np.array(
        [_wf_rate(drop.h_s2u_full[i], drop.a_s2u[i], config.p_sc_w, b, noise_ue) for i in range(k)]
    )
    c_u2s = np.array(
        [_wf_rate(drop.h_s2u_full[i].T, drop.a_s2u[i], config.p_ue_w, b, noise_sc) for i in range(k)]
    )

    plans = []
    for i in range(k):
        tb, ts = _equal_split(c_b2s[i], c_s2u[i], config.frac_dl)
        tsb, tu = _equal_split(c_s2b[i], c_u2s[i], config.frac_ul)
        plans.append((tb, ts, tsb, tu))
    sums = (float(np.sum(c_b2s)), float(np.sum(c_s2u)), float(np.sum(c_s2b)), float(np.sum(c_u2s)))
    tb, ts = _equal_split(sums[0], sums[1], config.frac_dl)
    tsb, tu = _equal_split(sums[2], sums[3], config.frac_ul)
    sub_plan = (tb, ts, tsb, tu)
    plans.append(sub_plan)

    def dl_value(plan):
        return float(np.sum(np.minimum(plan[0] * c_b2s, plan[1] * c_s2u)))

    def ul_value(plan):
        return float(np.sum(np.minimum(plan[3] * c_u2s, plan[2] * c_s2b)))

    out["ctdd_exh"] = (
        max(dl_value(p) for p in plans),
        max(ul_value(p) for p in plans),
    )
    out["ctdd_sub"] = (dl_value(sub_plan), ul_value(sub_plan))

    # --- full duplex at the small cells --------------------------------
    rx_rows = np.concatenate(
        [_row_block(drop.h_b2s_full, i, n_sc)[n_sc - n_scr :] for i in range(k)]
    )
    tx_rows = np.concatenate(
        [_row_block(drop.h_b2s_full, i, n_sc)[:n_sct] for i in range(k)]
    )
    compound_rx = _scale_rows(rx_rows, drop.a_b2s, n_scr)
    compound_tx = _scale_rows(tx_rows, drop.a_b2s, n_sct)

    c_b2s_fd, decoder_rx, phi_rx = _zf_dl(
        compound_rx, config.p_bs_w, config.n_bs, b, noise_sc_fd, n_scr
    )
    c_b2s_fd = np.full(k, c_b2s_fd)
    c_s2u_fd = np.empty(k)
    c_u2s_fd = np.empty(k)
    for i in range(k):
        h_ue_i = _row_block(drop.h_b2u, i, n_ue)
        leak = (
            drop.a_b2u[i]
            * phi_rx**2
            * np.linalg.norm(h_ue_i @ decoder_rx, "fro") ** 2
        )
        c_s2u_fd[i] = _wf_rate(
            drop.h_s2u_full[i][:, :n_sct], drop.a_s2u[i], config.p_sc_w, b, noise_ue,
            interference=leak,
        )
        c_u2s_fd[i] = _wf_rate(
            drop.h_s2u_full[i][:, n_sc - n_scr :].T, drop.a_s2u[i], config.p_ue_w, b,
            noise_sc_fd,
        )
    decoder_tx = np.linalg.pinv(compound_tx)
    p_itf = config.p_ue_w / n_ue if config.split_ue_interference_power else config.p_ue_w
    leak_ul = p_itf * np.sum(np.abs(compound_ue @ decoder_tx) ** 2, axis=0)
    c_s2b_fd = _zf_ul_rates(decoder_tx, config.p_sc_w, n_sct, b, noise_bs, interference=leak_ul)
    out["zdd"] = (
        config.frac_dl * float(np.sum(np.minimum(c_b2s_fd, c_s2u_fd))),
        config.frac_ul * float(np.sum(np.minimum(c_u2s_fd, c_s2b_fd))),
    )

    # --- full duplex with rejection at the base station ----------------
    _, _, vh = np.linalg.svd(compound_ue, full_matrices=True)
    basis = vh.conj().T[:, k * n_ue :]
    g_dl = basis @ np.linalg.pinv(compound_rx @ basis)
    g_phi = np.sqrt(config.p_bs_w / config.n_bs) / np.max(np.linalg.norm(g_dl, axis=1))
    c_b2s_ir = np.full(
        k, b * n_scr * np.log2(1.0 + g_phi**2 / (b * noise_sc_fd))
    )
    c_s2u_ir = np.array(
        [
            _wf_rate(drop.h_s2u_full[i][:, :n_sct], drop.a_s2u[i], config.p_sc_w, b, noise_ue)
            for i in range(k)
        ]
    )
    g_ul = basis @ np.linalg.pinv(compound_tx @ basis)
    c_s2b_ir = _zf_ul_rates(g_ul, config.p_sc_w, n_sct, b, noise_bs)
    out["zdd_ir"] = (
        config.frac_dl * float(np.sum(np.minimum(c_b2s_ir, c_s2u_ir))),
        config.frac_ul * float(np.sum(np.minimum(c_u2s_fd, c_s2b_ir))),
    )
    return out
