"""
Signal model for the detector campaigns.
Builds steering subspaces and covariance families, and draws test and
secondary data under either hypothesis.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla

from models.schemas import Dataset, Hypothesis, NoiseSpec, SubspaceSpec
from utils.linalg import (
    ComplexMatrix,
    ComplexVector,
    HermitianPD,
    MatrixLike,
    as_array,
    hermitian_part,
    pd_repair,
)
from utils.logging_config import get_logger

logger = get_logger(__name__)

# Frequency grids of the signal and interference steering vectors
SIGNAL_FREQ_START = 0.05
SIGNAL_FREQ_STEP = 0.05
INTERFERENCE_FREQ_START = 0.025
INTERFERENCE_FREQ_STEP = -0.025

# Smallest singular value accepted for [H, B]
MIN_SUBSPACE_SINGULAR_VALUE = 1e-8

# Diagonal of the N=5 base covariance, as used by the scenario presets
PRESET_BASE_DIAGONAL = 0.44


class ModelError(ValueError):
    """Raised when the signal model is inconsistent."""
    pass


def fourier_steering(f: float, n: int) -> ComplexVector:
    """
    Unit-norm steering vector (1/√N)[1, e^{-j2πf}, …, e^{-j2πf(N-1)}].

    Args:
        f: Normalized frequency in cycles per sample
        n: Number of sensors

    Returns:
        Complex vector of length n
    """
    if n < 1:
        raise ModelError(f"steering vector needs N >= 1, got {n}")
    k = np.arange(n)
    return np.exp(-2j * np.pi * f * k) / np.sqrt(n)


def build_subspaces(spec: SubspaceSpec) -> Tuple[ComplexMatrix, ComplexMatrix]:
    """
    Signal matrix H (N×p) and interference matrix B (N×t).

    Column i of H sits at 0.05·i + 0.05 and column i of B at −0.025·i + 0.025,
    for i = 1, 2, …

    Raises:
        ModelError: If [H, B] is rank deficient
    """
    h = np.column_stack([
        fourier_steering(SIGNAL_FREQ_STEP * i + SIGNAL_FREQ_START, spec.n)
        for i in range(1, spec.p + 1)
    ])
    b = np.column_stack([
        fourier_steering(INTERFERENCE_FREQ_STEP * i + INTERFERENCE_FREQ_START, spec.n)
        for i in range(1, spec.t + 1)
    ])
    singular_values = np.linalg.svd(np.hstack([h, b]), compute_uv=False)
    if singular_values[-1] < MIN_SUBSPACE_SINGULAR_VALUE:
        raise ModelError(
            f"[H, B] is rank deficient (smallest singular value {singular_values[-1]:.3e})"
        )
    return h, b


def default_phi(t: int) -> ComplexVector:
    """Interference coordinates used when none are configured: ones/√t."""
    return np.ones(t, dtype=np.complex128) / np.sqrt(t)


def split_groups(k: int, j: int) -> Tuple[int, ...]:
    """
    Split K samples into J group sizes as evenly as possible.

    The remainder goes to the last groups, e.g. split_groups(11, 3) == (3, 4, 4).
    """
    if j < 1 or k < j:
        raise ModelError(f"cannot split K={k} samples into {j} groups")
    base, remainder = divmod(k, j)
    return tuple(base + (1 if i >= j - remainder else 0) for i in range(j))


def base_covariance(n: int) -> HermitianPD:
    """
    Base noise covariance of a scenario.

    0.44·I for N=5 (the printed preset value), I/√N otherwise.
    """
    if n == 5:
        matrix = PRESET_BASE_DIAGONAL * np.eye(n, dtype=np.complex128)
    else:
        matrix = np.eye(n, dtype=np.complex128) / np.sqrt(n)
    return pd_repair(matrix)


def _sampling_factor(cov: MatrixLike) -> ComplexMatrix:
    """Cholesky factor of cov, or an eigen factor when Cholesky fails."""
    matrix = hermitian_part(cov)
    try:
        return np.linalg.cholesky(matrix)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(matrix)
        scale = max(float(np.abs(eigvals).max()), 1e-300)
        if eigvals[0] < -1e-10 * scale:
            raise ModelError(
                f"covariance is not positive definite (eigenvalue {eigvals[0]:.3e})"
            )
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly symmetric standard complex normals, E|g|² = 1."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def sample_complex_gaussian(
    mean: ComplexVector,
    cov: MatrixLike,
    rng: np.random.Generator,
    size: Optional[int] = None,
) -> np.ndarray:
    """
    Draw from CN(mean, cov).

    Args:
        mean: Mean vector (dimension N)
        cov: Covariance (HermitianPD or array)
        rng: Random generator
        size: Number of draws; None returns a single vector

    Returns:
        Vector of dimension N, or a size×N array with draws as rows

    Raises:
        ModelError: If dimensions disagree or cov is not positive definite
    """
    mean = np.asarray(mean, dtype=np.complex128)
    factor = _sampling_factor(cov)
    if factor.shape[0] != mean.shape[0]:
        raise ModelError(
            f"mean has dimension {mean.shape[0]} but covariance is {factor.shape[0]}×{factor.shape[0]}"
        )
    if size is None:
        return mean + factor @ complex_normal(rng, mean.shape[0])
    draws = complex_normal(rng, (size, mean.shape[0]))
    return mean + draws @ factor.T


def theta_for_snr(
    h: ComplexMatrix,
    r_test: MatrixLike,
    sigma2_test: float,
    snr_db: float,
) -> ComplexVector:
    """
    Signal coordinates θ = c·u with u = ones/√p, scaled to the requested SNR.

    SNR is 10·log₁₀(θ†H†(σ²R)⁻¹Hθ).

    Args:
        h: Signal subspace matrix (N×p)
        r_test: Test-cell base covariance R
        sigma2_test: Test noise power σ²
        snr_db: Target SNR in dB

    Returns:
        θ of dimension p
    """
    p = h.shape[1]
    u = np.ones(p, dtype=np.complex128) / np.sqrt(p)
    hu = h @ u
    cov = sigma2_test * as_array(r_test)
    gain = float(np.vdot(hu, sla.solve(cov, hu, assume_a="her")).real)
    c = np.sqrt(10.0 ** (snr_db / 10.0) / gain)
    return c * u


def snr_db_of(
    theta: ComplexVector,
    h: ComplexMatrix,
    r_test: MatrixLike,
    sigma2_test: float,
) -> float:
    """SNR in dB of signal coordinates θ."""
    x = h @ theta
    cov = sigma2_test * as_array(r_test)
    return float(10.0 * np.log10(np.vdot(x, sla.solve(cov, x, assume_a="her")).real))


def heterogeneous_test_cov(r_s: HermitianPD, alpha: float, decay: float) -> HermitianPD:
    """
    Test covariance that departs from R_s in structure.

    R_ij = R_s,ij + α·decay^|i−j|, normalized to unit Frobenius norm.

    Args:
        r_s: Secondary base covariance
        alpha: Perturbation strength; 0 returns r_s unchanged
        decay: Correlation decay in (0, 1]

    Returns:
        Unit-norm Hermitian positive definite matrix

    Raises:
        ModelError: If decay is out of range or the result cannot be made PD
    """
    if not 0.0 < decay <= 1.0:
        raise ModelError(f"decay must lie in (0, 1], got {decay}")
    if alpha == 0:
        return r_s
    idx = np.arange(r_s.dim)
    taper = decay ** np.abs(idx[:, None] - idx[None, :])
    matrix = hermitian_part(r_s.matrix + alpha * taper)
    matrix = matrix / np.linalg.norm(matrix)
    if np.linalg.eigvalsh(matrix)[0] <= 0:
        logger.warning("test_covariance_repaired", alpha=alpha, decay=decay)
    try:
        repaired = pd_repair(matrix)
        norm = np.linalg.norm(repaired.matrix)
        return HermitianPD(repaired.matrix / norm, repaired.floor / norm)
    except ValueError as e:
        raise ModelError(f"heterogeneous test covariance is not positive definite: {e}") from e


def generate_dataset(
    spec: SubspaceSpec,
    noise: NoiseSpec,
    theta: ComplexVector,
    phi: ComplexVector,
    hypothesis: Hypothesis,
    rng: np.random.Generator,
    subspaces: Optional[Tuple[ComplexMatrix, ComplexMatrix]] = None,
) -> Dataset:
    """
    Draw one test vector and its secondary groups.

    y = Hθ + Bφ + ξ with ξ ~ CN(0, σ²R_test), θ forced to zero under H0;
    group j holds K_j draws of CN(0, σ_j²R_s). The test noise is drawn
    first, so one generator state yields the same noise under both
    hypotheses.

    Args:
        spec: Subspace dimensions
        noise: Covariances and scales
        theta: Signal coordinates (dimension p)
        phi: Interference coordinates (dimension t)
        hypothesis: H0 or H1
        rng: Random generator, advanced by the draws
        subspaces: Precomputed (H, B); built from spec when omitted

    Returns:
        Dataset labelled with the hypothesis

    Raises:
        ModelError: On dimension mismatches
    """
    theta = np.asarray(theta, dtype=np.complex128)
    phi = np.asarray(phi, dtype=np.complex128)
    if theta.shape != (spec.p,):
        raise ModelError(f"theta must have dimension p={spec.p}, got {theta.shape}")
    if phi.shape != (spec.t,):
        raise ModelError(f"phi must have dimension t={spec.t}, got {phi.shape}")
    if noise.r_s_base.dim != spec.n:
        raise ModelError(f"noise dimension {noise.r_s_base.dim} does not match N={spec.n}")

    h, b = subspaces if subspaces is not None else build_subspaces(spec)
    zeros = np.zeros(spec.n, dtype=np.complex128)

    xi = sample_complex_gaussian(zeros, noise.true_test_cov, rng)
    if hypothesis is Hypothesis.H0:
        theta = np.zeros_like(theta)
    y = h @ theta + b @ phi + xi

    r_s = noise.r_s_base.matrix
    secondary = tuple(
        sample_complex_gaussian(zeros, scale * r_s, rng, size=size)
        for size, scale in zip(noise.group_sizes, noise.group_scales)
    )
    return Dataset(y=y, secondary=secondary, truth=hypothesis)


def build_noise_spec(
    n: int,
    group_sizes: Sequence[int],
    group_scales: Sequence[float],
    sigma2_test: float,
    alpha: float = 0.0,
    decay: float = 0.95,
    r_s_base: Optional[HermitianPD] = None,
) -> NoiseSpec:
    """
    Assemble a NoiseSpec from scenario parameters.

    alpha > 0 selects the heterogeneous test covariance; otherwise the test
    cell shares the secondary base covariance.
    """
    r_s = r_s_base if r_s_base is not None else base_covariance(n)
    r_test = heterogeneous_test_cov(r_s, alpha, decay) if alpha > 0 else r_s
    return NoiseSpec(
        r_s_base=r_s,
        r_test=r_test,
        sigma2_test=sigma2_test,
        group_sizes=tuple(group_sizes),
        group_scales=tuple(group_scales),
    )
