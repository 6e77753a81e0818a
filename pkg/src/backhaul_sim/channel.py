"""Drop generation: geometry, link budgets, and Rayleigh fading matrices.

One drop is a single statistical event: small-cell and user positions,
path-loss/shadowing/antenna-gain link budgets, noise floors, and all
small-scale channel matrices. Everything is drawn from a caller-supplied
seeded generator, so equal (config, mode, seed) always yields an
identical drop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ConfigurationError",
    "PathLossModel",
    "SystemConfig",
    "Drop",
    "generate_geometry",
    "path_loss_db",
    "link_gain",
    "noise_variance_w_hz",
    "generate_drop",
    "MODES",
]

MODES = ("ctdd", "conservative", "complete")


class ConfigurationError(ValueError):
    """A system configuration violates one of its invariants."""


@dataclass(frozen=True)
class PathLossModel:
    """Log-distance path loss: intercept + slope*log10(d_km) + shadowing.

    The shadowing term is a fresh zero-mean normal draw in dB for every
    evaluated link.
    """

    intercept_db: float
    slope_db_per_decade: float
    shadowing_sigma_db: float

    def __post_init__(self):
        if self.slope_db_per_decade <= 0:
            raise ConfigurationError("path loss slope must be > 0")
        if self.shadowing_sigma_db < 0:
            raise ConfigurationError("shadowing sigma must be >= 0")


# 3GPP-style NLoS defaults at 2 GHz: macro <-> UE, macro <-> outdoor pico,
# and pico <-> UE. All overridable through SystemConfig.
MACRO_NLOS_UE = PathLossModel(128.1, 37.6, 10.0)
MACRO_NLOS_SC = PathLossModel(128.1, 37.6, 6.0)
PICO_NLOS_UE = PathLossModel(140.7, 36.7, 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """All system-level scalars plus sweep-relevant settings."""

    bandwidth_hz: float = 20e6
    num_cells: int = 8
    n_bs: int = 256
    n_sc: int = 4
    n_ue: int = 1
    # ZDD transmit/receive antenna split; None derives n_sc/2 (conservative)
    # or n_sc (complete) from the duplex mode.
    n_sct: int | None = None
    n_scr: int | None = None
    p_bs_w: float = 35.0
    p_sc_w: float = 0.25
    p_ue_w: float = 0.2
    noise_psd_dbm_hz: float = -174.0
    nf_bs_db: float = 5.0
    nf_sc_db: float = 8.0
    nf_ue_db: float = 9.0
    gain_bs_dbi: float = 2.0
    gain_sc_dbi: float = 5.0
    gain_ue_dbi: float = 0.0
    frac_dl: float = 0.5
    frac_ul: float = 0.5
    rsi_db: float = 0.0
    sc_ring_distance_m: float = 500.0
    sc_coverage_radius_m: float = 40.0
    ue_min_dist_m: float = 10.0
    pl_b2u: PathLossModel = MACRO_NLOS_UE
    pl_b2s: PathLossModel = MACRO_NLOS_SC
    pl_s2u: PathLossModel = PICO_NLOS_UE
    drops: int = 2000
    seed: int = 1
    # Carrier frequency is documentation only; the path-loss intercepts
    # already encode it.
    f_c_ghz: float = 2.0
    # Divide the per-antenna user transmit power by n_ue in the uplink
    # backhaul interference term (sensitivity switch; off keeps the full
    # per-antenna power).
    split_ue_interference_power: bool = False
    # Keep geometry and shadowing fixed across the drops of a sweep cell,
    # redrawing only the fast fading.
    freeze_geometry: bool = False

    def antenna_split(self, mode: str) -> tuple[int, int]:
        """(n_sct, n_scr) in effect for the given duplex mode."""
        if mode == "ctdd":
            return self.n_sc, self.n_sc
        if mode == "conservative":
            n_sct = self.n_sct if self.n_sct is not None else self.n_sc // 2
            n_scr = self.n_scr if self.n_scr is not None else self.n_sc // 2
            return n_sct, n_scr
        if mode == "complete":
            n_sct = self.n_sct if self.n_sct is not None else self.n_sc
            n_scr = self.n_scr if self.n_scr is not None else self.n_sc
            return n_sct, n_scr
        raise ConfigurationError(f"unknown duplex mode {mode!r}; expected one of {MODES}")

    def validate(self) -> "SystemConfig":
        if self.num_cells < 1:
            raise ConfigurationError("num_cells must be >= 1")
        if self.bandwidth_hz <= 0:
            raise ConfigurationError("bandwidth_hz must be > 0")
        for name in ("p_bs_w", "p_sc_w", "p_ue_w"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0")
        if self.n_bs < 1 or self.n_sc < 1 or self.n_ue < 1:
            raise ConfigurationError("antenna counts must be >= 1")
        for mode in ("conservative", "complete"):
            n_sct, n_scr = self.antenna_split(mode)
            if not (self.n_sc >= n_sct >= self.n_ue):
                raise ConfigurationError(
                    f"{mode} mode needs n_sc >= n_sct >= n_ue, got "
                    f"n_sc={self.n_sc}, n_sct={n_sct}, n_ue={self.n_ue}"
                )
            if not (self.n_sc >= n_scr >= self.n_ue):
                raise ConfigurationError(
                    f"{mode} mode needs n_sc >= n_scr >= n_ue, got "
                    f"n_sc={self.n_sc}, n_scr={n_scr}, n_ue={self.n_ue}"
                )
        if self.frac_dl < 0 or self.frac_ul < 0 or self.frac_dl + self.frac_ul > 1 + 1e-12:
            raise ConfigurationError("need frac_dl >= 0, frac_ul >= 0, frac_dl + frac_ul <= 1")
        if self.rsi_db < 0:
            raise ConfigurationError("rsi_db must be >= 0")
        if self.ue_min_dist_m <= 0 or self.sc_coverage_radius_m <= self.ue_min_dist_m:
            raise ConfigurationError("need 0 < ue_min_dist_m < sc_coverage_radius_m")
        if self.drops < 1:
            raise ConfigurationError("drops must be >= 1")
        return self

    def check_rejection_dims(self, mode: str) -> None:
        """Interference rejection needs enough spare base-station antennas."""
        n_sct, n_scr = self.antenna_split(mode)
        k = self.num_cells
        for n_side, tag in ((n_scr, "n_scr"), (n_sct, "n_sct")):
            needed = k * (self.n_ue + n_side)
            if self.n_bs < needed:
                raise ConfigurationError(
                    f"interference rejection requires n_bs >= num_cells*(n_ue+{tag}): "
                    f"n_bs={self.n_bs} < {k}*({self.n_ue}+{n_side})={needed}"
                )

    def noise_bs_w_hz(self) -> float:
        return noise_variance_w_hz(self.noise_psd_dbm_hz, self.nf_bs_db)

    def noise_sc_w_hz(self) -> float:
        return noise_variance_w_hz(self.noise_psd_dbm_hz, self.nf_sc_db)

    def noise_ue_w_hz(self) -> float:
        return noise_variance_w_hz(self.noise_psd_dbm_hz, self.nf_ue_db)


def generate_geometry(config: SystemConfig, rng: np.random.Generator):
    """Place the K small cells evenly on a ring and one user per cell.

    Cell k sits at angle 2*pi*k/K on a circle of radius
    ``sc_ring_distance_m`` around the base station at the origin. Each
    user is uniform by area over the annulus [ue_min_dist_m,
    sc_coverage_radius_m] around its cell.
    """
    k = config.num_cells
    angles = 2.0 * np.pi * np.arange(k) / k
    sc_positions = config.sc_ring_distance_m * np.stack(
        [np.cos(angles), np.sin(angles)], axis=1
    )
    r_min2 = config.ue_min_dist_m**2
    r_max2 = config.sc_coverage_radius_m**2
    radii = np.sqrt(r_min2 + rng.random(k) * (r_max2 - r_min2))
    theta = rng.random(k) * 2.0 * np.pi
    ue_positions = sc_positions + np.stack(
        [radii * np.cos(theta), radii * np.sin(theta)], axis=1
    )
    return sc_positions, ue_positions


def path_loss_db(model: PathLossModel, d_m, rng: np.random.Generator):
    """Path loss in dB at distance(s) d_m, with a fresh shadowing draw.

    Distances are floored at 1 m to keep the log defined.
    """
    d_m = np.maximum(np.asarray(d_m, dtype=float), 1.0)
    shadow = rng.normal(0.0, model.shadowing_sigma_db, size=d_m.shape)
    return model.intercept_db + model.slope_db_per_decade * np.log10(d_m / 1000.0) + shadow


def link_gain(pl_db, g_tx_dbi: float, g_rx_dbi: float):
    """Linear power gain from path loss and antenna gains, clamped below 1."""
    a = 10.0 ** (-(np.asarray(pl_db) - g_tx_dbi - g_rx_dbi) / 10.0)
    return np.minimum(a, np.nextafter(1.0, 0.0))


def noise_variance_w_hz(noise_psd_dbm_hz: float, nf_db: float) -> float:
    """Receiver noise power density in W/Hz including the noise figure."""
    return 10.0 ** ((noise_psd_dbm_hz + nf_db - 30.0) / 10.0)


@dataclass(frozen=True)
class Drop:
    """One statistical realization of geometry, shadowing, and fading.

    ``h_b2s_full`` and ``h_s2u_full`` carry the small-scale channels of
    all n_sc small-cell antennas; the transmit side is the first n_sct
    antennas and the receive side the last n_scr, so conservative duplex
    splits are disjoint while complete duplex reuses every antenna.
    """

    sc_positions: np.ndarray  # (K, 2) m
    ue_positions: np.ndarray  # (K, 2) m
    a_b2s: np.ndarray  # (K,) linear
    a_b2u: np.ndarray  # (K,) linear
    a_s2u: np.ndarray  # (K,) linear
    h_b2s_full: np.ndarray  # (K*n_sc, n_bs)
    h_b2u: np.ndarray  # (K*n_ue, n_bs)
    h_s2u_full: np.ndarray  # (K, n_ue, n_sc)
    n_sc: int
    n_sct: int
    n_scr: int
    n_ue: int
    noise_bs_w_hz: float
    noise_sc_w_hz: float
    noise_ue_w_hz: float

    @property
    def num_cells(self) -> int:
        return self.a_b2s.shape[0]

    def _sc_rows(self, first: int, count: int) -> np.ndarray:
        if first == 0 and count == self.n_sc:
            return self.h_b2s_full
        blocks = [
            self.h_b2s_full[k * self.n_sc + first : k * self.n_sc + first + count]
            for k in range(self.num_cells)
        ]
        return np.concatenate(blocks, axis=0)

    def h_b2s_tx(self) -> np.ndarray:
        """Small-scale backhaul channel onto the SC transmit antennas."""
        return self._sc_rows(0, self.n_sct)

    def h_b2s_rx(self) -> np.ndarray:
        """Small-scale backhaul channel onto the SC receive antennas."""
        return self._sc_rows(self.n_sc - self.n_scr, self.n_scr)

    def _with_pathloss(self, h: np.ndarray, gains: np.ndarray, per: int) -> np.ndarray:
        scale = np.repeat(np.sqrt(gains), per)
        return h * scale[:, None]

    def compound_b2u(self) -> np.ndarray:
        """BS-to-UE channel including per-user path loss."""
        return self._with_pathloss(self.h_b2u, self.a_b2u, self.n_ue)

    def compound_b2s_full(self) -> np.ndarray:
        """Backhaul channel over all n_sc antennas, with path loss."""
        return self._with_pathloss(self.h_b2s_full, self.a_b2s, self.n_sc)

    def compound_b2s_tx(self) -> np.ndarray:
        return self._with_pathloss(self.h_b2s_tx(), self.a_b2s, self.n_sct)

    def compound_b2s_rx(self) -> np.ndarray:
        return self._with_pathloss(self.h_b2s_rx(), self.a_b2s, self.n_scr)

    def h_s2u_tx(self, k: int) -> np.ndarray:
        """Small-scale access channel from SC k's transmit antennas."""
        return self.h_s2u_full[k][:, : self.n_sct]

    def h_s2u_rx(self, k: int) -> np.ndarray:
        """Small-scale access channel onto SC k's receive antennas."""
        return self.h_s2u_full[k][:, self.n_sc - self.n_scr :]


def _complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def generate_drop(
    config: SystemConfig,
    mode: str,
    rng: np.random.Generator,
    geometry_rng: np.random.Generator | None = None,
) -> Drop:
    """Draw one drop for the given duplex mode.

    Geometry and shadowing come from ``geometry_rng`` when provided
    (frozen-geometry sweeps), otherwise everything is drawn from ``rng``.
    """
    config.validate()
    n_sct, n_scr = config.antenna_split(mode)
    geo = geometry_rng if geometry_rng is not None else rng
    sc_pos, ue_pos = generate_geometry(config, geo)

    d_b2s = np.linalg.norm(sc_pos, axis=1)
    d_b2u = np.linalg.norm(ue_pos, axis=1)
    d_s2u = np.linalg.norm(ue_pos - sc_pos, axis=1)

    a_b2s = link_gain(
        path_loss_db(config.pl_b2s, d_b2s, geo), config.gain_bs_dbi, config.gain_sc_dbi
    )
    a_b2u = link_gain(
        path_loss_db(config.pl_b2u, d_b2u, geo), config.gain_bs_dbi, config.gain_ue_dbi
    )
    a_s2u = link_gain(
        path_loss_db(config.pl_s2u, d_s2u, geo), config.gain_sc_dbi, config.gain_ue_dbi
    )

    k = config.num_cells
    h_b2s_full = _complex_gaussian(rng, (k * config.n_sc, config.n_bs))
    h_b2u = _complex_gaussian(rng, (k * config.n_ue, config.n_bs))
    h_s2u_full = _complex_gaussian(rng, (k, config.n_ue, config.n_sc))

    return Drop(
        sc_positions=sc_pos,
        ue_positions=ue_pos,
        a_b2s=a_b2s,
        a_b2u=a_b2u,
        a_s2u=a_s2u,
        h_b2s_full=h_b2s_full,
        h_b2u=h_b2u,
        h_s2u_full=h_s2u_full,
        n_sc=config.n_sc,
        n_sct=n_sct,
        n_scr=n_scr,
        n_ue=config.n_ue,
        noise_bs_w_hz=config.noise_bs_w_hz(),
        noise_sc_w_hz=config.noise_sc_w_hz(),
        noise_ue_w_hz=config.noise_ue_w_hz(),
    )
