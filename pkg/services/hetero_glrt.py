"""
Constrained GLRT for heterogeneous environments.

Nuisance parameters are estimated in closed form; the test-cell covariance
is estimated under each hypothesis by an ADMM iteration that keeps it close
to the secondary covariance R_s in Frobenius norm.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from models.schemas import AdmmParams, AdmmState, SecondaryEstimate
from utils.linalg import (
    DEFAULT_RELATIVE_FLOOR,
    ComplexMatrix,
    ComplexVector,
    HermitianPD,
    MatrixLike,
    as_array,
    complement_projector,
    floor_eigenvalues,
    hermitian_part,
    inv_sqrt,
    least_squares_coefficients,
    log_det,
    pd_repair,
    sample_covariance,
    stack_samples,
)
from utils.logging_config import get_logger

logger = get_logger(__name__)

# ‖R‖_F, ‖Z‖_F or ‖R − Z‖_F above this means the iteration has left the feasible region for good
DIVERGENCE_NORM = 1e3

# Largest ‖R − Z‖_F at termination for which R is returned
PRIMAL_RESIDUAL_LIMIT = 1e-2


class EstimationError(ValueError):
    """Raised when a nuisance or covariance estimate cannot be formed."""
    pass


class AdmmDivergenceError(EstimationError):
    """Raised when the ADMM iterates blow up or R and Z fail to agree."""
    pass


GroupsLike = Sequence[np.ndarray]


# ---------------------------------------------------------------------------
# Secondary data
# ---------------------------------------------------------------------------

def weighted_sample_cov(groups: GroupsLike, scales: Sequence[float]) -> ComplexMatrix:
    """
    S_w = (1/K) Σ_j Σ_k (1/σ_j²) n n†.

    Args:
        groups: One K_j×N array (or list of vectors) per adjacent cell
        scales: σ_j² per group

    Returns:
        N×N Hermitian PSD matrix; equals sample_covariance of the pooled
        samples when every scale is 1

    Raises:
        EstimationError: If a scale is not positive or counts disagree
    """
    if len(groups) == 0 or len(groups) != len(scales):
        raise EstimationError("need one positive scale per non-empty group list")
    if any(not s > 0 for s in scales):
        raise EstimationError(f"group scales must be positive, got {list(scales)}")
    rows = np.vstack([
        stack_samples(group) / np.sqrt(scale) for group, scale in zip(groups, scales)
    ])
    return sample_covariance(rows)


def estimate_group_scales(
    groups: GroupsLike,
    r_s: MatrixLike,
    floor: float = 1e-8,
) -> Tuple[float, ...]:
    """
    σ̂_j² = (1/(N·K_j)) Σ_k n†R_s⁻¹n for every group.

    Degenerate groups are clamped to the floor with a warning.
    """
    w = inv_sqrt(r_s)
    scales = []
    for j, group in enumerate(groups):
        rows = stack_samples(group)
        whitened = rows @ w.T
        value = float(np.sum(np.abs(whitened) ** 2)) / (rows.shape[1] * rows.shape[0])
        if value < floor:
            logger.warning("group_scale_clamped", group=j, value=value, floor=floor)
            value = floor
        scales.append(value)
    return tuple(scales)


def _normalized_weighted_cov(groups: GroupsLike, scales: Sequence[float]) -> ComplexMatrix:
    s_w = weighted_sample_cov(groups, scales)
    eigvals = np.linalg.eigvalsh(s_w)
    if eigvals[0] <= DEFAULT_RELATIVE_FLOOR * max(float(eigvals[-1]), 0.0):
        raise EstimationError("insufficient secondary data")
    return s_w / np.linalg.norm(s_w)


def estimate_rs_alternating(
    groups: GroupsLike,
    tol: float = 1e-6,
    max_alt_iters: int = 50,
    floor: float = 1e-8,
) -> SecondaryEstimate:
    """
    Alternate the group scales and the normalized weighted covariance.

    Starting from unit scales, R_s ← S_w/‖S_w‖_F and σ_j² ← their ML estimate
    given R_s, until R_s moves by less than tol. The returned scales are the
    ML estimates for the returned R_s.

    Args:
        groups: Secondary samples per adjacent cell
        tol: Convergence tolerance on ‖ΔR_s‖_F
        max_alt_iters: Cap on alternation passes
        floor: Clamp for degenerate group scales

    Returns:
        SecondaryEstimate with unit-norm R̂_s

    Raises:
        EstimationError: If S_w is singular ("insufficient secondary data")
    """
    k = sum(stack_samples(g).shape[0] for g in groups)
    n = stack_samples(groups[0]).shape[1]
    if k < n:
        logger.warning("secondary_data_undersized", k=k, n=n)

    r_s = _normalized_weighted_cov(groups, (1.0,) * len(groups))
    iterations = 0
    converged = False
    while iterations < max_alt_iters:
        iterations += 1
        scales = estimate_group_scales(groups, r_s, floor)
        updated = _normalized_weighted_cov(groups, scales)
        if np.linalg.norm(updated - r_s) < tol:
            converged = True
            break
        r_s = updated

    if not converged:
        scales = estimate_group_scales(groups, r_s, floor)
        logger.warning("rs_alternation_not_converged", iterations=iterations, tol=tol)

    largest = float(np.linalg.eigvalsh(r_s)[-1])
    return SecondaryEstimate(
        r_s_hat=HermitianPD(r_s, DEFAULT_RELATIVE_FLOOR * largest),
        group_scales_hat=scales,
        iterations=iterations,
    )


# ---------------------------------------------------------------------------
# Closed-form nuisance estimates
# ---------------------------------------------------------------------------

def estimate_phi(y: ComplexVector, b: ComplexMatrix, r: MatrixLike) -> ComplexVector:
    """
    φ̂ = (B̄†B̄)⁻¹B̄†ȳ with B̄ = R^{-1/2}B, ȳ = R^{-1/2}y.

    Raises:
        SingularGramError: If B̄ is rank deficient
    """
    w = inv_sqrt(r)
    return least_squares_coefficients(w @ y, w @ b)


def estimate_beta(y: ComplexVector, c: ComplexMatrix, r: MatrixLike) -> ComplexVector:
    """β̂ under H1: the same whitened least squares with C = [H, B]."""
    return estimate_phi(y, c, r)


def estimate_sigma2(
    y: ComplexVector,
    d: ComplexMatrix,
    r: MatrixLike,
    n: Optional[int] = None,
    floor: float = 1e-8,
) -> float:
    """
    σ̂² = ȳ†P_{D̄⊥}ȳ / N.

    Args:
        y: Test vector
        d: B under H0, C = [H, B] under H1
        r: Current covariance estimate
        n: Dimension N (defaults to len(y))
        floor: Clamp for a vanishing residual

    Returns:
        σ̂² ≥ floor
    """
    n = n if n is not None else y.shape[0]
    w = inv_sqrt(r)
    residual = complement_projector(w @ d) @ (w @ y)
    value = float(np.vdot(residual, residual).real) / n
    if value < floor:
        logger.warning("sigma2_clamped", value=value, floor=floor)
        value = floor
    return value


def residual_outer(y: ComplexVector, d: ComplexMatrix, coeff: ComplexVector) -> ComplexMatrix:
    """M = (y − D·coeff)(y − D·coeff)†."""
    r = y - d @ coeff
    return np.outer(r, r.conj())


# ---------------------------------------------------------------------------
# ADMM covariance estimation
# ---------------------------------------------------------------------------

def _constraint_excess(r: ComplexMatrix, r_s: ComplexMatrix, epsilon: float) -> Tuple[float, float]:
    """(‖R − R_s‖² − ε, ‖R‖² − 1)."""
    proximity = float(np.linalg.norm(r - r_s) ** 2) - epsilon
    norm = float(np.linalg.norm(r) ** 2) - 1.0
    return proximity, norm


def augmented_lagrangian(
    state: AdmmState,
    params: AdmmParams,
    resid_outer: ComplexMatrix,
    sigma2: float,
    r_s: MatrixLike,
) -> float:
    """
    L_ρ at the current state.

    log det R + tr(Z⁻¹M)/σ² + (ρ/2)·max(0,g)⁴ + λ·max(0,g)² + (ρ/2)·max(0,h)⁴
    + γ·max(0,h)² + (ρ/2)‖R − Z‖² + Re tr(U(R − Z)), with g = ‖R − R_s‖² − ε
    and h = ‖R‖² − 1.
    """
    r, z, u = state.r, state.z, state.u
    r_s = as_array(r_s)
    rho = params.rho
    g, h = _constraint_excess(r, r_s, params.epsilon)
    g_act, h_act = max(0.0, g), max(0.0, h)
    gap = r - z
    data_term = float(np.trace(sla.solve(z, resid_outer, assume_a="her")).real) / sigma2
    return (
        log_det(r)
        + data_term
        + 0.5 * rho * g_act ** 4
        + state.lam * g_act ** 2
        + 0.5 * rho * h_act ** 4
        + state.gamma * h_act ** 2
        + 0.5 * rho * float(np.linalg.norm(gap) ** 2)
        + float(np.trace(u @ gap).real)
    )


def admm_gradients(
    state: AdmmState,
    params: AdmmParams,
    resid_outer: ComplexMatrix,
    sigma2: float,
    r_s: MatrixLike,
) -> Tuple[ComplexMatrix, ComplexMatrix]:
    """
    Gradients of L_ρ with respect to R and Z.

    Both are Hermitian G with dL = Re tr(G·dX) for Hermitian perturbations dX.

    Returns:
        (∇_R L_ρ, ∇_Z L_ρ)
    """
    r, z, u = state.r, state.z, state.u
    r_s = as_array(r_s)
    rho = params.rho
    g, h = _constraint_excess(r, r_s, params.epsilon)
    g_act, h_act = max(0.0, g), max(0.0, h)

    grad_r = (
        np.linalg.inv(r)
        + (4 * rho * g_act ** 3 + 4 * state.lam * g_act) * (r - r_s)
        + (4 * rho * h_act ** 3 + 4 * state.gamma * h_act) * r
        + u
        + rho * (r - z)
    )
    z_inv = np.linalg.inv(z)
    grad_z = -(z_inv @ resid_outer @ z_inv) / sigma2 + rho * (z - r) - u
    return hermitian_part(grad_r), hermitian_part(grad_z)


def project_to_feasible(r: MatrixLike, r_s: MatrixLike, epsilon: float) -> ComplexMatrix:
    """
    Pull R into {‖R‖_F ≤ 1} ∩ {‖R − R_s‖_F² ≤ ε}.

    R is first scaled into the unit ball, then moved toward R_s along the
    segment joining them. With ε = 0 the result is R_s.
    """
    r = hermitian_part(r)
    r_s = hermitian_part(r_s)
    norm = np.linalg.norm(r)
    if norm > 1.0:
        r = r / norm
    distance = np.linalg.norm(r - r_s)
    if distance ** 2 > epsilon:
        r = r_s + (np.sqrt(epsilon) / distance) * (r - r_s)
    return hermitian_part(r)


def proximity_bound(r_s: MatrixLike, epsilon: float) -> float:
    """
    Largest usable proximity bound: min(ε, (λ_min(R_s) / 2)²).

    Every R within that distance of R_s keeps eigenvalues of at least
    λ_min(R_s) / 2, so the projected iterates stay well inside the
    positive definite cone.
    """
    lam_min = float(np.linalg.eigvalsh(hermitian_part(r_s))[0])
    return min(epsilon, max(0.0, 0.5 * lam_min) ** 2)


def balanced_dual(
    r: MatrixLike,
    z: MatrixLike,
    resid_outer: ComplexMatrix,
    sigma2: float,
) -> ComplexMatrix:
    """
    U = −(R⁻¹ + Z⁻¹MZ⁻¹/σ²)/2.

    At R = Z this gives ∇_R L_ρ and ∇_Z L_ρ the same value (half the
    gradient of log det R + tr(R⁻¹M)/σ²), so both copies start moving
    together.
    """
    r_inv = np.linalg.inv(as_array(r))
    z_inv = np.linalg.inv(as_array(z))
    return hermitian_part(-0.5 * (r_inv + z_inv @ resid_outer @ z_inv / sigma2))


def admm_step(
    state: AdmmState,
    resid_outer: ComplexMatrix,
    sigma2: float,
    r_s: MatrixLike,
    params: AdmmParams,
    update_duals: bool = True,
    bound: Optional[float] = None,
) -> AdmmState:
    """
    One ADMM iteration: gradient steps on R then Z, then the dual updates.

    U ← U + ρ(R − Z), γ ← γ + ρ·max(0, ‖R‖² − 1)², λ ← λ + ρ·max(0, ‖R − R_s‖² − ε)².
    Both primal iterates are eigenvalue-floored after their step. With
    project_feasible both are then projected onto the feasible set.

    Args:
        state: Current iterate
        resid_outer: Residual outer product M of the hypothesis
        sigma2: Current σ̂²
        r_s: Secondary covariance estimate
        params: Step sizes and penalties
        update_duals: False keeps U, γ, λ frozen
        bound: Proximity bound of the projection; proximity_bound(r_s, ε) if omitted

    Returns:
        The next AdmmState
    """
    r_s_arr = as_array(r_s)
    eta = params.eta
    if params.project_feasible and bound is None:
        bound = proximity_bound(r_s_arr, params.epsilon)

    grad_r, _ = admm_gradients(state, params, resid_outer, sigma2, r_s_arr)
    r_next, _ = floor_eigenvalues(state.r - eta * grad_r, relative_floor=params.pd_floor)
    if params.project_feasible:
        r_next = project_to_feasible(r_next, r_s_arr, bound)

    half = replace(state, r=r_next)
    _, grad_z = admm_gradients(half, params, resid_outer, sigma2, r_s_arr)
    z_next, _ = floor_eigenvalues(state.z - eta * grad_z, relative_floor=params.pd_floor)
    if params.project_feasible:
        z_next = project_to_feasible(z_next, r_s_arr, bound)

    u, gamma, lam = state.u, state.gamma, state.lam
    if update_duals:
        g, h = _constraint_excess(r_next, r_s_arr, params.epsilon)
        u = hermitian_part(u + params.rho * (r_next - z_next))
        gamma = gamma + params.rho * max(0.0, h) ** 2
        lam = lam + params.rho * max(0.0, g) ** 2

    return AdmmState(
        r=r_next, z=z_next, u=u, gamma=gamma, lam=lam, iteration=state.iteration + 1
    )


def _check_iterates(state: AdmmState) -> float:
    """Return ‖R − Z‖_F; raise if R, Z or their gap has blown up."""
    norms = (
        np.linalg.norm(state.r),
        np.linalg.norm(state.z),
        np.linalg.norm(state.r - state.z),
    )
    if not all(np.isfinite(v) and v <= DIVERGENCE_NORM for v in norms):
        logger.warning(
            "admm_diverged",
            iteration=state.iteration,
            norm_r=float(norms[0]),
            norm_z=float(norms[1]),
            primal_residual=float(norms[2]),
        )
        raise AdmmDivergenceError("ADMM diverged; reduce eta")
    return float(norms[2])


def admm_estimate_R(
    y: ComplexVector,
    d: ComplexMatrix,
    coeff: ComplexVector,
    sigma2: float,
    r_s: MatrixLike,
    params: AdmmParams,
    r0: Optional[MatrixLike] = None,
) -> HermitianPD:
    """
    Constrained estimate of the test-cell covariance under one hypothesis.

    Starts from R = Z = R_s (or r0) with U at balanced_dual and γ = λ = 0,
    then runs admm_step until max_iter, or until both ‖R − Z‖_F and the
    change of R drop below primal_tol. The final R is returned only if it
    agrees with Z to within PRIMAL_RESIDUAL_LIMIT.

    Args:
        y: Test vector
        d: B under H0, C under H1
        coeff: φ̂ or β̂ matching d
        sigma2: σ̂² of the hypothesis
        r_s: Secondary covariance estimate
        params: ADMM parameters
        r0: Optional starting point

    Returns:
        R_∞ as a HermitianPD

    Raises:
        AdmmDivergenceError: If ‖R‖_F, ‖Z‖_F or ‖R − Z‖_F exceeds 1e3 or
            becomes non-finite, or if ‖R − Z‖_F ends at or above
            PRIMAL_RESIDUAL_LIMIT
    """
    r_s_arr = as_array(r_s)
    m = residual_outer(y, d, coeff)
    bound = proximity_bound(r_s_arr, params.epsilon) if params.project_feasible else None
    start = as_array(r0) if r0 is not None else r_s_arr
    state = AdmmState.initial(start, u0=balanced_dual(start, start, m, sigma2))

    primal = 0.0
    for _ in range(params.max_iter):
        previous = state.r
        state = admm_step(state, m, sigma2, r_s_arr, params, bound=bound)
        primal = _check_iterates(state)
        if params.primal_tol > 0 and primal < params.primal_tol:
            if np.linalg.norm(state.r - previous) < params.primal_tol:
                break

    if not primal < PRIMAL_RESIDUAL_LIMIT:
        logger.warning("admm_not_converged", iterations=state.iteration, primal_residual=primal)
        raise AdmmDivergenceError(f"ADMM did not converge: ‖R − Z‖_F = {primal:.3g}")
    logger.debug("admm_finished", iterations=state.iteration, primal_residual=primal)
    return pd_repair(state.r, relative_floor=params.pd_floor)


# ---------------------------------------------------------------------------
# Final statistic
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class HeteroGlrtResult:
    """
    Log statistic and the estimates it was built from.

    Attributes:
        log_statistic: log ℓ
        q0: Whitened residual energy under H0
        q1: Whitened residual energy under H1
        log_det_r0: log det R_∞ under H0
        log_det_r1: log det R_∞ under H1
        sigma2_h0: σ̂² under H0
        sigma2_h1: σ̂² under H1
        secondary: Estimates from the secondary data
        r0: R_∞ under H0
        r1: R_∞ under H1
    """
    log_statistic: float
    q0: float
    q1: float
    log_det_r0: float
    log_det_r1: float
    sigma2_h0: float
    sigma2_h1: float
    secondary: SecondaryEstimate
    r0: HermitianPD
    r1: HermitianPD

    @property
    def statistic(self) -> float:
        """ℓ itself; may overflow to inf for large N."""
        with np.errstate(over="ignore"):
            return float(np.exp(self.log_statistic))


def _whitened_residual_energy(y: ComplexVector, d: ComplexMatrix, r: MatrixLike) -> float:
    w = inv_sqrt(r)
    residual = complement_projector(w @ d) @ (w @ y)
    return float(np.vdot(residual, residual).real)


def assemble_log_statistic(
    y: ComplexVector,
    b: ComplexMatrix,
    c: ComplexMatrix,
    r0: MatrixLike,
    r1: MatrixLike,
) -> Tuple[float, float, float]:
    """
    log ℓ = 2N(log q0 − log q1) + log det R0 − log det R1.

    q0 = ȳ†P_{B̄⊥}ȳ is whitened by R0 and q1 = ȳ†P_{C̄⊥}ȳ by R1.

    Returns:
        (log ℓ, q0, q1)

    Raises:
        EstimationError: If either residual energy vanishes
    """
    n = y.shape[0]
    q0 = _whitened_residual_energy(y, b, r0)
    q1 = _whitened_residual_energy(y, c, r1)
    if q0 <= 0 or q1 <= 0:
        raise EstimationError("test vector lies in span of C")
    log_stat = 2 * n * (np.log(q0) - np.log(q1)) + log_det(r0) - log_det(r1)
    return float(log_stat), q0, q1


def _estimate_under_hypothesis(
    y: ComplexVector,
    d: ComplexMatrix,
    r_s: HermitianPD,
    params: AdmmParams,
) -> Tuple[HermitianPD, float]:
    """Alternate {coefficients, σ̂²} with ADMM, starting from R = R̂_s."""
    r: HermitianPD = r_s
    for _ in range(params.outer_iters):
        coeff = estimate_phi(y, d, r)
        sigma2 = estimate_sigma2(y, d, r, floor=params.pd_floor)
        updated = admm_estimate_R(y, d, coeff, sigma2, r_s, params)
        if np.array_equal(updated.matrix, r.matrix):
            r = updated
            break
        r = updated
    sigma2 = estimate_sigma2(y, d, r, floor=params.pd_floor)
    return r, sigma2


def hetero_glrt_log_statistic(
    y: ComplexVector,
    h: ComplexMatrix,
    b: ComplexMatrix,
    groups: GroupsLike,
    params: AdmmParams,
    secondary: Optional[SecondaryEstimate] = None,
) -> HeteroGlrtResult:
    """
    Constrained GLRT for one dataset, in the log domain.

    Args:
        y: Test vector
        h: Signal subspace
        b: Interference subspace
        groups: Secondary samples per adjacent cell
        params: ADMM and alternation parameters
        secondary: Precomputed secondary estimate (skips the R_s alternation)

    Returns:
        HeteroGlrtResult
    """
    if secondary is None:
        secondary = estimate_rs_alternating(
            groups, tol=params.alt_tol, max_alt_iters=params.max_alt_iters, floor=params.pd_floor
        )
    c = np.hstack([h, b])
    r0, sigma2_h0 = _estimate_under_hypothesis(y, b, secondary.r_s_hat, params)
    r1, sigma2_h1 = _estimate_under_hypothesis(y, c, secondary.r_s_hat, params)
    log_stat, q0, q1 = assemble_log_statistic(y, b, c, r0, r1)
    return HeteroGlrtResult(
        log_statistic=log_stat,
        q0=q0,
        q1=q1,
        log_det_r0=log_det(r0),
        log_det_r1=log_det(r1),
        sigma2_h0=sigma2_h0,
        sigma2_h1=sigma2_h1,
        secondary=secondary,
        r0=r0,
        r1=r1,
    )


def hetero_glrt_statistic(
    y: ComplexVector,
    h: ComplexMatrix,
    b: ComplexMatrix,
    groups: GroupsLike,
    params: AdmmParams,
) -> float:
    """ℓ = exp(log ℓ); positive, so the real-part guard is the identity."""
    return hetero_glrt_log_statistic(y, h, b, groups, params).statistic
