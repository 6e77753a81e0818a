"""Shared test utilities: independent oracles and random-matrix helpers.

The oracles here deliberately avoid the package's own algorithms: the
water-filling references use brute-force grids and bisection on the
water level, so they can arbitrate the production implementation.
"""

import numpy as np


def crandn(rng, shape):
    """Unit-variance circularly symmetric complex Gaussian array."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def grid_capacity(gammas, step=1e-3):
    """Best sum log2(1 + gamma_s * p_s) over a power-fraction grid."""
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
    raise ValueError("grid oracle supports at most 3 streams")


def bisect_waterfill_capacity(gammas, bandwidth_hz=1.0):
    """Water-filling capacity via bisection on the water level.

    Solves sum max(0, w - 1/g_s) = 1 for the water level w, entirely
    independent of the active-set iteration used in production.
    """
    g = np.asarray(gammas, dtype=float)
    g = g[g > 0.0]
    if g.size == 0:
        return 0.0
    lo, hi = 0.0, 1.0 + float(np.max(1.0 / g))

    def spent(w):
        return float(np.sum(np.maximum(0.0, w - 1.0 / g)))

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if spent(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    w = 0.5 * (lo + hi)
    active = g * w > 1.0
    return bandwidth_hz * float(np.sum(np.log2(g[active] * w)))
