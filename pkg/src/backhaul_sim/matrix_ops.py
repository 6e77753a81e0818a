"""Dense complex linear algebra used by every rate formula.

All operations are pure functions of their ndarray inputs and therefore
safe to call from concurrently running drop evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SvdFactors",
    "SvdConvergenceError",
    "svd",
    "pseudo_inverse",
    "null_space_basis",
]

# Relative singular-value cutoff for numerical rank decisions: values below
# max(rows, cols) * s_max * RANK_RTOL count as zero.
RANK_RTOL = 1e-12


class SvdConvergenceError(RuntimeError):
    """SVD iteration failed to converge for the given matrix."""


@dataclass(frozen=True)
class SvdFactors:
    """SVD of a matrix: u @ diag(singular_values) @ v.conj().T.

    ``u`` and ``v`` hold left/right singular vectors as columns;
    ``singular_values`` is nonincreasing and nonnegative.
    """

    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray


def _check_finite(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"{name} must be 2-D and non-empty, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return m


def _rank_cutoff(shape: tuple[int, int], s_max: float) -> float:
    return max(shape) * s_max * RANK_RTOL


def svd(m: np.ndarray, full_matrices: bool = False) -> SvdFactors:
    """Singular value decomposition with finite-input validation.

    With ``full_matrices=True`` the complete orthonormal bases are
    returned (u: rows x rows, v: cols x cols), which is what null-space
    extraction needs; otherwise the economy factorization is returned.
    """
    m = _check_finite(m)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:
        raise SvdConvergenceError(
            f"SVD did not converge for {m.shape[0]}x{m.shape[1]} matrix"
        ) from exc
    return SvdFactors(u=u, singular_values=s, v=vh.conj().T)


def pseudo_inverse(m: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD with a rank cutoff.

    Singular values below ``max(rows, cols) * s_max * 1e-12`` are treated
    as zero. For a full-row-rank input, ``m @ pseudo_inverse(m)`` is the
    identity to working precision.
    """
    f = svd(m, full_matrices=False)
    s = f.singular_values
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((m.shape[1], m.shape[0]), dtype=complex)
    cutoff = _rank_cutoff(m.shape, s[0])
    inv_s = np.zeros_like(s)
    keep = s > cutoff
    inv_s[keep] = 1.0 / s[keep]
    return (f.v * inv_s) @ f.u.conj().T


def null_space_basis(m: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the right null space of a wide matrix.

    Returns the cols x (cols - rank) matrix of right-singular vectors
    belonging to the trailing singular values, so ``m @ basis`` vanishes
    and the columns are orthonormal by construction.
    """
    m = np.asarray(m)
    if m.shape[0] >= m.shape[1]:
        raise ValueError(
            f"null space basis needs a wide matrix (rows < cols), got {m.shape}"
        )
    f = svd(m, full_matrices=True)
    s = f.singular_values
    cutoff = _rank_cutoff(m.shape, s[0]) if s.size and s[0] > 0 else 0.0
    rank = int(np.count_nonzero(s > cutoff))
    if m.shape[1] - rank == 0:
        raise ValueError(f"matrix of shape {m.shape} has an empty null space")
    return f.v[:, rank:]
