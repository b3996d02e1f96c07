"""Convergence and incoherence measurements against a known ground truth.

The central quantity is the determinant similarity zeta, the product of
squared principal-angle cosines between the estimated and true
subspaces. It is 1 exactly when the spans coincide and 0 when some
principal angle is a right angle. zeta is always computed in the log
domain: at realistic sizes a random starting basis has zeta far below
what a naive determinant survives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics

# Cosines at or below this are treated as an exact right angle.
_COSINE_FLOOR = 1e-300


class DimensionMismatch(ValueError):
    pass


class ZeroVector(ValueError):
    pass


@dataclass(frozen=True)
class PrincipalAngleProfile:
    """Principal-angle summary between two d-dimensional subspaces.

    cosines are descending in [0, 1]; zeta = prod cosines^2 (log-domain);
    kappa = 1 - zeta; frob_discrepancy = sum of sin^2 over all angles.
    log_zeta is -inf when any cosine underflows, so downstream ratios can
    report "undefined" instead of NaN.
    """

    cosines: np.ndarray
    sines: np.ndarray
    zeta: float
    log_zeta: float
    frob_discrepancy: float

    @property
    def kappa(self) -> float:
        return 1.0 - self.zeta

    @property
    def largest_angle(self) -> float:
        """phi_d, the largest principal angle, in radians."""
        return float(np.arccos(self.cosines[-1]))


def principal_angles(U: np.ndarray, Ubar: np.ndarray) -> PrincipalAngleProfile:
    """Principal angles between span(U) and span(Ubar).

    The cosines are the singular values of Ubar^T U, clamped to [0, 1];
    excursions above 1 by rounding (<= ~1e-12) are legitimate and clipped.
    """
    if U.shape != Ubar.shape:
        raise DimensionMismatch(f"shapes differ: {U.shape} vs {Ubar.shape}")
    sv = numerics.singular_values(Ubar.T @ U)
    cosines = np.clip(sv, 0.0, 1.0)
    sines_sq = np.clip(1.0 - cosines**2, 0.0, 1.0)
    if np.any(cosines <= _COSINE_FLOOR):
        log_zeta = -np.inf
        zeta = 0.0
    else:
        log_zeta = float(2.0 * np.sum(np.log(cosines)))
        zeta = float(np.exp(log_zeta))
    return PrincipalAngleProfile(
        cosines=cosines,
        sines=np.sqrt(sines_sq),
        zeta=zeta,
        log_zeta=log_zeta,
        frob_discrepancy=float(np.sum(sines_sq)),
    )


def log_det_overlap(U: np.ndarray, Ubar: np.ndarray) -> tuple[float, float]:
    """(sign, log|det|) of Ubar^T U, stable for tiny determinants."""
    sign, logabs = np.linalg.slogdet(Ubar.T @ U)
    return float(sign), float(logabs)


def subspace_incoherence(U: np.ndarray) -> float:
    """Spread of span(U) over coordinates: (n/d) * max_i ||P_U e_i||^2.

    1 for a maximally spread subspace, n/d for one aligned with
    coordinate axes. U must have orthonormal columns.
    """
    n, d = U.shape
    row_norms_sq = np.einsum("ij,ij->i", U, U)
    return float(n / d * np.max(row_norms_sq))


def vector_incoherence(z: np.ndarray) -> float:
    """Spread of a vector over coordinates: n * ||z||_inf^2 / ||z||^2."""
    z = np.asarray(z, dtype=np.float64)
    nrm_sq = float(z @ z)
    if nrm_sq == 0.0:
        raise ZeroVector("incoherence of the zero vector is undefined")
    return float(z.shape[0] * np.max(np.abs(z)) ** 2 / nrm_sq)


def procrustes_distance(U: np.ndarray, Ubar: np.ndarray) -> float:
    """min over orthogonal V of ||Ubar V - U||_F.

    Closed form sqrt(2 (d - sum of principal-angle cosines)); the optimal
    V aligns the bases through the SVD of Ubar^T U. Squared, it is
    sandwiched between the Frobenius discrepancy and twice it.
    """
    if U.shape != Ubar.shape:
        raise DimensionMismatch(f"shapes differ: {U.shape} vs {Ubar.shape}")
    d = U.shape[1]
    cosines = np.clip(numerics.singular_values(Ubar.T @ U), 0.0, 1.0)
    return float(np.sqrt(max(0.0, 2.0 * (d - np.sum(cosines)))))


def local_region_check(
    U: np.ndarray, Ubar: np.ndarray, mu0: float | None = None
) -> bool:
    """Whether U lies in the near-truth region sum sin^2 <= d*mu0/(16n).

    This is the regime in which the missing-data expected-improvement
    guarantee applies. mu0 defaults to the incoherence of Ubar.
    """
    n, d = Ubar.shape
    if mu0 is None:
        mu0 = subspace_incoherence(Ubar)
    profile = principal_angles(U, Ubar)
    return bool(profile.frob_discrepancy <= d * mu0 / (16.0 * n))
