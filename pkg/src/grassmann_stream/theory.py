"""Closed-form evaluators for the convergence rates, bounds, and sample
complexities, plus the perturbation diagnostic for undersampled updates.

Each evaluator is a direct transcription of a closed-form expression;
nothing here runs the algorithm. Probability expressions arising from
union bounds can go negative for small sample counts; they are clamped
to [0, 1] and flagged as vacuous in the params map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics, numerics, sampling
from .numerics import RankDeficient


class ZeroProjection(ValueError):
    pass


class SingularOverlap(ValueError):
    """The overlap matrix between estimate and truth is singular (zeta = 0)."""


@dataclass(frozen=True)
class RateBound:
    """Multiplicative expected per-step improvement factor on the similarity.

    probability is the confidence the factor holds (1.0 when
    deterministic); params records the intermediate quantities.
    """

    rate: float
    probability: float
    params: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ComplexityBound:
    """An iteration or measurement count with its named components."""

    value: float
    components: dict[str, float] = field(default_factory=dict)


# --- fully sampled data ---------------------------------------------------


def exact_full_ratio(norm_v_par: float, norm_v_perp: float) -> float:
    """Per-step similarity ratio for full data: 1 + ||v_perp||^2 / ||v_par||^2."""
    if norm_v_par <= 0.0:
        raise ZeroProjection("projection norm must be positive")
    return 1.0 + (norm_v_perp / norm_v_par) ** 2


def expected_rate_full(zeta: float, d: int) -> float:
    """Expected improvement factor with full data: 1 + (1 - zeta)/d."""
    return 1.0 + (1.0 - zeta) / d


def key_quantity_bound(zeta: float, d: int) -> float:
    """Lower bound (1 - zeta)/d on the expected normalized residual energy."""
    return (1.0 - zeta) / d


def iteration_bound_full(
    n: int, d: int, rho: float, zeta_star: float, C: float = 1.0
) -> ComplexityBound:
    """Iterations sufficient for similarity >= zeta_star w.p. >= 1 - 2*rho.

    Two phases: K1 climbs from a random start to similarity 1/2, K2
    closes the remaining gap. C is the constant in the expected initial
    similarity; the analysis pins it only as approximately 1.
    """
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")
    if not 0.0 < zeta_star < 1.0:
        raise ValueError("zeta_star must lie in (0, 1)")
    if C <= 0.0:
        raise ValueError("C must be positive")
    log_n = math.log(n)
    tau0 = 1.0 + (math.log((1.0 - rho / 2.0) / C) + d * math.log(math.e / d)) / (
        d * log_n
    )
    K1 = (2.0 * d**2 / rho + 1.0) * tau0 * log_n
    K2 = 2.0 * d * math.log(1.0 / (2.0 * rho * (1.0 - zeta_star)))
    return ComplexityBound(value=K1 + K2, components={"K1": K1, "K2": K2, "tau0": tau0, "C": C})


def heuristic_iterations(n: int, m: int, d: int, zeta_star: float) -> float:
    """Observed iteration scale: full-data count over the sampling density.

    (n/m) * (d^2 log n + d log(1/(1 - zeta_star))).
    """
    if m > n:
        raise ValueError("m must not exceed n")
    return (n / m) * (d**2 * math.log(n) + d * math.log(1.0 / (1.0 - zeta_star)))


# --- undersampled data ----------------------------------------------------


def coefficient_split(
    U: np.ndarray, op: sampling.SamplingOperator, v: np.ndarray, rank_rtol: float = numerics.RANK_RTOL
) -> tuple[np.ndarray, np.ndarray]:
    """Split the restricted least-squares coefficients of v against U.

    Returns (w_par, w_perp): the coefficient contributions of the
    projection of v onto span(U) and of its orthogonal remainder. Their
    sum is the least-squares solution for the observed vector.
    """
    v_par, v_perp = numerics.project(U, v)
    B = sampling.restrict_basis(op, U)
    w_par = numerics.least_squares(B, sampling.apply(op, v_par), rank_rtol=rank_rtol)
    w_perp = numerics.least_squares(B, sampling.apply(op, v_perp), rank_rtol=rank_rtol)
    return w_par, w_perp


def delta_term(
    U: np.ndarray,
    Ubar: np.ndarray,
    op: sampling.SamplingOperator,
    v: np.ndarray,
    rank_rtol: float = numerics.RANK_RTOL,
) -> float:
    """The perturbation undersampling injects into the determinant update.

    Delta = w_perp^T (Ubar^T U)^{-1} Ubar^T r, where w_perp is the
    coefficient leakage of the orthogonal remainder of v and r is the
    lifted residual. Zero (to rounding) for full sampling.
    """
    M = Ubar.T @ U
    sv = numerics.singular_values(M)
    if sv[-1] <= 1e-300:
        raise SingularOverlap("estimate and truth share no overlap in some direction")
    _, w_perp = coefficient_split(U, op, v, rank_rtol=rank_rtol)
    B = sampling.restrict_basis(op, U)
    x = sampling.apply(op, v)
    w = numerics.least_squares(B, x, rank_rtol=rank_rtol)
    r = sampling.adjoint(op, x - B @ w)
    return float(w_perp @ np.linalg.solve(M, Ubar.T @ r))


def step_lower_bound_undersampled(
    norm_p: float, norm_r_tilde: float, norm_r: float, delta: float
) -> float:
    """Deterministic per-step floor on the similarity ratio.

    1 + (2 ||r_tilde||^2 - ||r||^2) / ||p||^2 + 2 Delta / ||p||^2. For
    entry-wise sampling the residual norms coincide and this reduces to
    1 + ||r||^2 / ||p||^2 + 2 Delta / ||p||^2.
    """
    if norm_p <= 0.0:
        raise ZeroProjection("projection norm must be positive")
    p_sq = norm_p**2
    return 1.0 + (2.0 * norm_r_tilde**2 - norm_r**2) / p_sq + 2.0 * delta / p_sq


def expected_rate_cs(
    zeta: float, d: int, m: int, n: int, delta: float, phi_d: float
) -> RateBound:
    """Expected improvement factor for Gaussian compressive sampling.

    rate = 1 + g1 (1 - g2 d/m) (m/n) (1 - zeta)/d, with g1, g2 as in the
    compressive-sampling guarantee; phi_d is the largest principal angle
    between estimate and truth. The statement's form of g2 (with
    sqrt((1+delta) d/m) in the denominator) is primary; the proof
    variant with sqrt((1-delta^2) d/m) is recorded in params.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if not 0.0 <= phi_d < math.pi / 2:
        raise ValueError("phi_d must lie in [0, pi/2)")
    if m > n:
        raise ValueError("m must not exceed n")
    ratio = m / n
    shrink = 1.0 - 2.0 * delta * math.sqrt(ratio)
    g1 = (1.0 - delta) * shrink / (1.0 + math.sqrt((1.0 + delta) / (1.0 - delta) * d / m)) ** 2
    tan_term = 2.0 * math.tan(phi_d) + delta * d / math.cos(phi_d)
    g2 = (1.0 + tan_term / (shrink * math.sqrt((1.0 + delta) * d / m))) * (
        (1.0 + delta) / (1.0 - delta)
    )
    g2_proof = (
        1.0
        + 2.0
        * (math.tan(phi_d) + delta * d / math.cos(phi_d))
        / (shrink * math.sqrt((1.0 - delta**2) * d / m))
    ) * ((1.0 + delta) / (1.0 - delta))
    rate = 1.0 + g1 * (1.0 - g2 * d / m) * ratio * (1.0 - zeta) / d
    prob = (
        1.0
        - math.exp(-d * delta**2 / 8.0)
        - math.exp(-m * delta**2 / 32.0 + d * math.log(24.0 / delta))
        - (4.0 * d + 2.0) * math.exp(-m * delta**2 / 8.0)
    )
    params = {
        "gamma1": g1,
        "gamma2": g2,
        "gamma2_proof_variant": g2_proof,
        "vacuous": float(prob <= 0.0),
    }
    return RateBound(rate=rate, probability=min(max(prob, 0.0), 1.0), params=params)


def sample_complexity_cs(d: int, delta: float, phi_d: float, n: int) -> ComplexityBound:
    """Measurements per vector sufficient for the compressive guarantee.

    m >= d * max{ (32/delta^2) log(24 n^{2/d} / delta),
                  beta (tan phi + delta cos(phi) d)(tan phi + delta cos(phi) d + 1/2) }
    with beta = 8 (1+delta) / ((1-delta)^2 (1-2 delta)^2). The statement
    writes delta*cos(phi)*d; the proof uses delta*d/cos(phi), recorded as
    a separate component.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    beta = 8.0 * (1.0 + delta) / ((1.0 - delta) ** 2 * (1.0 - 2.0 * delta) ** 2)
    term1 = d * (32.0 / delta**2) * math.log(24.0 * n ** (2.0 / d) / delta)
    a = math.tan(phi_d) + delta * math.cos(phi_d) * d
    term2 = d * beta * a * (a + 0.5)
    a_proof = math.tan(phi_d) + delta * d / math.cos(phi_d)
    term2_proof = d * beta * a_proof * (a_proof + 0.5)
    return ComplexityBound(
        value=max(term1, term2),
        components={
            "covering_term": term1,
            "perturbation_term": term2,
            "perturbation_term_proof_variant": term2_proof,
            "beta": beta,
        },
    )


# delta in the missing-data union bounds is fixed by the analysis.
def _missing_delta(n: int) -> float:
    return 1.0 / n**2


def expected_rate_missing(zeta: float, d: int, m: int, n: int) -> RateBound:
    """Expected improvement factor with entry-wise missing data.

    1 + (1/4)(m/n)(1 - zeta)/d, holding with probability 1 - 3/n^2 inside
    the local region of the truth. Implemented in ratio form (see the
    decisions ledger for the statement/proof discrepancy).
    """
    if m > n:
        raise ValueError("m must not exceed n")
    rate = 1.0 + 0.25 * (m / n) * (1.0 - zeta) / d
    prob = 1.0 - 3.0 / n**2
    return RateBound(
        rate=rate,
        probability=min(max(prob, 0.0), 1.0),
        params={"delta": _missing_delta(n), "vacuous": float(prob <= 0.0)},
    )


def sample_complexity_missing(
    d: int, mu0: float, mu_vperp: float, n: int
) -> ComplexityBound:
    """Observed entries per vector sufficient for the missing-data guarantee."""
    log_n = math.log(n)
    term1 = (128.0 * d * mu0 / 3.0) * math.log(math.sqrt(2.0 * d) * n)
    term2 = 64.0 * mu_vperp**2 * log_n
    term3 = 52.0 * (1.0 + 2.0 * math.sqrt(mu_vperp * log_n)) ** 2 * d * mu0
    return ComplexityBound(
        value=max(term1, term2, term3),
        components={
            "basis_coverage_term": term1,
            "residual_coverage_term": term2,
            "perturbation_term": term3,
        },
    )


def discrepancy_decay_missing(
    kappa: float, d: int, m: int, n: int, mu0: float
) -> float:
    """Expected next-step discrepancy bound with missing data.

    kappa shrinks by the factor 1 - (1/4)(1 - d mu0 / 16n)(m / (n d)).
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    factor = 1.0 - 0.25 * (1.0 - d * mu0 / (16.0 * n)) * m / (n * d)
    return factor * kappa


def expected_zeta0(n: int, d: int, C: float = 1.0) -> float:
    """Expected initial similarity of a random start: C (d / (n e))^d."""
    if d >= n:
        raise ValueError("d must be below n")
    return float(math.exp(math.log(C) + d * (math.log(d) - math.log(n) - 1.0)))
