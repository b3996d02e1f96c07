"""Dense linear-algebra kernels with explicit numerical contracts.

Everything here operates on plain float64 numpy arrays. An "orthonormal
basis" is an n x d array whose columns satisfy ||U^T U - I||_F <= 1e-10;
constructors in this package go through :func:`orthonormalize` or
:func:`check_orthonormal` to enforce that.
"""

from __future__ import annotations

import numpy as np

# Relative rank tolerance: smallest singular value must exceed
# RANK_RTOL * largest for a matrix to count as full column rank.
RANK_RTOL = 1e-10

ORTHONORMALITY_TOL = 1e-10


class RankDeficient(ValueError):
    """The matrix does not have full numerical column rank."""


def check_orthonormal(U: np.ndarray, tol: float = ORTHONORMALITY_TOL) -> np.ndarray:
    """Validate the orthonormal-columns invariant and return U unchanged."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape[0] < U.shape[1]:
        raise ValueError(f"expected a tall n x d matrix, got shape {U.shape}")
    d = U.shape[1]
    drift = np.linalg.norm(U.T @ U - np.eye(d))
    if drift > tol:
        raise ValueError(f"columns are not orthonormal: drift {drift:.3e} > {tol:.1e}")
    return U


def orthonormality_drift(U: np.ndarray) -> float:
    """||U^T U - I||_F, the floating-point drift from orthonormality."""
    d = U.shape[1]
    return float(np.linalg.norm(U.T @ U - np.eye(d)))


def orthonormalize(M: np.ndarray, rank_rtol: float = 1e-12) -> np.ndarray:
    """Orthonormal basis for the column span of M, via reduced QR.

    Raises RankDeficient if the numerical rank of M is below its column
    count (smallest singular value <= rank_rtol * largest).
    """
    M = np.asarray(M, dtype=np.float64)
    Q, R = np.linalg.qr(M)
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= rank_rtol * sv[0]:
        raise RankDeficient(
            f"matrix of shape {M.shape} has numerical rank below {M.shape[1]}"
        )
    return Q


def least_squares(B: np.ndarray, x: np.ndarray, rank_rtol: float = RANK_RTOL) -> np.ndarray:
    """Unique minimizer w of ||B w - x||_2 via the QR factorization of B.

    The QR route keeps the conditioning proportional to cond(B), which
    matters when B is a sampled basis with barely more rows than columns.
    Raises RankDeficient when the smallest singular value of B is at most
    rank_rtol times the largest (callers treat this as "skip this step").
    """
    B = np.asarray(B, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if B.ndim != 2 or B.shape[0] != x.shape[0]:
        raise ValueError(f"shape mismatch: B {B.shape}, x {x.shape}")
    if B.shape[0] < B.shape[1]:
        raise RankDeficient(
            f"{B.shape[0]} rows cannot determine {B.shape[1]} coefficients"
        )
    Q, R = np.linalg.qr(B)
    sv = np.linalg.svd(R, compute_uv=False)
    if sv[0] == 0.0 or sv[-1] <= rank_rtol * sv[0]:
        raise RankDeficient("least-squares matrix is numerically rank deficient")
    return np.linalg.solve(R, Q.T @ x)


def singular_values(M: np.ndarray) -> np.ndarray:
    """Singular values of M in descending order."""
    M = np.asarray(M, dtype=np.float64)
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return np.linalg.svd(M, compute_uv=False)


def project(U: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split v into its component in span(U) and the orthogonal remainder.

    U must have orthonormal columns. Returns (v_par, v_perp) with
    v_par + v_perp == v exactly.
    """
    v = np.asarray(v, dtype=np.float64)
    v_par = U @ (U.T @ v)
    return v_par, v - v_par
