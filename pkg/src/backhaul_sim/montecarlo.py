"""Monte Carlo sweep driver.

Crosses distances, strategies, directions, residual-self-interference
points, and duplex modes; every cell averages independently seeded drops
into a mean sum rate in bit/s/Hz with its standard error. Per-drop seeds
are derived from the master seed and the full cell key, so results never
depend on evaluation order, worker count, or which other cells run.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .channel import ConfigurationError, SystemConfig, generate_drop
from .strategies import STRATEGY_NAMES, drop_mode_for, evaluate_strategy

__all__ = [
    "SweepSpec",
    "SweepCell",
    "ResultTable",
    "derive_drop_seed",
    "run_point",
    "run_sweep",
]

DIRECTIONS = ("dl", "ul")
SWEEP_MODES = ("conservative", "complete")
MIN_DISTANCE_M = 50.0


@dataclass(frozen=True)
class SweepSpec:
    """Axes of one sweep plus the drop count and master seed."""

    distances_m: tuple = tuple(float(d) for d in range(200, 1501, 100))
    strategies: tuple = STRATEGY_NAMES
    directions: tuple = DIRECTIONS
    rsi_points_db: tuple = (0.0,)
    modes: tuple = ("conservative",)
    drops: int = 2000
    master_seed: int = 1

    def validate(self) -> "SweepSpec":
        if not self.distances_m:
            raise ConfigurationError("at least one distance is required")
        for d in self.distances_m:
            if d < MIN_DISTANCE_M:
                raise ConfigurationError(
                    f"distance {d} m is below the {MIN_DISTANCE_M:.0f} m floor "
                    "where the cell-geometry assumptions hold"
                )
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise ConfigurationError(
                    f"unknown strategy {s!r}; expected a subset of {STRATEGY_NAMES}"
                )
        for d in self.directions:
            if d not in DIRECTIONS:
                raise ConfigurationError(f"unknown direction {d!r}; expected dl or ul")
        for m in self.modes:
            if m not in SWEEP_MODES:
                raise ConfigurationError(
                    f"unknown mode {m!r}; expected a subset of {SWEEP_MODES}"
                )
        for r in self.rsi_points_db:
            if r < 0:
                raise ConfigurationError("rsi points must be >= 0 dB")
        if self.drops < 1:
            raise ConfigurationError("drops must be >= 1")
        return self


@dataclass(frozen=True)
class SweepCell:
    """One aggregated table row."""

    distance_m: float
    strategy: str
    direction: str
    rsi_db: float
    mode: str
    mean_bps_per_hz: float
    std_error: float
    n_drops: int
    error: str | None = None

    def key(self):
        return (self.strategy, self.direction, self.rsi_db, self.mode, self.distance_m)


@dataclass(frozen=True)
class ResultTable:
    """Sweep cells sorted by (strategy, direction, rsi, mode, distance)."""

    rows: tuple

    @classmethod
    def from_cells(cls, cells) -> "ResultTable":
        ordered = tuple(sorted(cells, key=lambda c: c.key()))
        keys = [c.key() for c in ordered]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate sweep cells for the same key")
        return cls(rows=ordered)


def derive_drop_seed(
    master_seed: int,
    distance_m: float,
    strategy: str,
    direction: str,
    rsi_db: float,
    mode: str,
    drop_index,
) -> int:
    """Stable 64-bit seed from the master seed and the full cell key.

    Hash-based so that adding strategies or axes never perturbs the
    drops of existing cells.
    """
    key = (
        f"{int(master_seed)}|{float(distance_m)!r}|{strategy}|{direction}"
        f"|{float(rsi_db)!r}|{mode}|{drop_index}"
    )
    digest = hashlib.blake2b(key.encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def run_point(
    config: SystemConfig,
    distance_m: float,
    strategy: str,
    direction: str,
    rsi_db: float,
    mode: str,
    drops: int,
    master_seed: int,
) -> SweepCell:
    """Evaluate one sweep cell: mean and standard error over fresh drops."""
    if direction not in DIRECTIONS:
        raise ConfigurationError(f"unknown direction {direction!r}")
    cfg = replace(
        config, sc_ring_distance_m=float(distance_m), rsi_db=float(rsi_db)
    ).validate()
    drop_mode = drop_mode_for(strategy, mode)

    def cell_seed(index):
        return derive_drop_seed(
            master_seed, distance_m, strategy, direction, rsi_db, mode, index
        )

    geometry_rng = None
    samples = np.empty(drops)
    try:
        for i in range(drops):
            rng = np.random.default_rng(cell_seed(i))
            if cfg.freeze_geometry:
                geometry_rng = np.random.default_rng(cell_seed("geometry"))
            drop = generate_drop(cfg, drop_mode, rng, geometry_rng=geometry_rng)
            result = evaluate_strategy(strategy, drop, cfg)
            rate = result.dl_sum_rate_bps if direction == "dl" else result.ul_sum_rate_bps
            samples[i] = rate / cfg.bandwidth_hz
    except ConfigurationError as exc:
        raise ConfigurationError(
            f"cell (d={distance_m}, {strategy}, {direction}, rsi={rsi_db}, {mode}): {exc}"
        ) from exc

    mean = float(np.mean(samples))
    std_error = float(np.std(samples, ddof=1) / np.sqrt(drops)) if drops > 1 else 0.0
    return SweepCell(
        distance_m=float(distance_m),
        strategy=strategy,
        direction=direction,
        rsi_db=float(rsi_db),
        mode=mode,
        mean_bps_per_hz=mean,
        std_error=std_error,
        n_drops=drops,
    )


def _cell_args(spec: SweepSpec):
    cells = [
        (float(d), s, direc, float(r), m)
        for s in spec.strategies
        for direc in spec.directions
        for r in spec.rsi_points_db
        for m in spec.modes
        for d in spec.distances_m
    ]
    return sorted(cells, key=lambda c: (c[1], c[2], c[3], c[4], c[0]))


def _run_cell(packed):
    config, spec, cell = packed
    distance, strategy, direction, rsi, mode = cell
    try:
        return run_point(
            config, distance, strategy, direction, rsi, mode, spec.drops, spec.master_seed
        )
    except ConfigurationError as exc:
        return SweepCell(
            distance_m=distance,
            strategy=strategy,
            direction=direction,
            rsi_db=rsi,
            mode=mode,
            mean_bps_per_hz=float("nan"),
            std_error=float("nan"),
            n_drops=0,
            error=str(exc),
        )


def run_sweep(
    spec: SweepSpec,
    config: SystemConfig,
    workers: int | None = None,
    progress=None,
) -> ResultTable:
    """Evaluate the full cross product of the sweep axes.

    Cells that fail validation become error rows instead of aborting the
    sweep. ``workers`` > 1 distributes cells over processes; results are
    identical for any worker count.
    """
    spec.validate()
    config.validate()
    cells = _cell_args(spec)
    packed = [(config, spec, cell) for cell in cells]

    results = []
    if workers is not None and workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, row in enumerate(pool.map(_run_cell, packed)):
                results.append(row)
                if progress is not None:
                    progress(i + 1, len(cells), row)
    else:
        for i, item in enumerate(packed):
            row = _run_cell(item)
            results.append(row)
            if progress is not None:
                progress(i + 1, len(cells), row)
    return ResultTable.from_cells(results)
