"""
Baseline adaptive detectors: ASD, AMF with an estimated covariance and
AMF with the true test covariance.
"""

from typing import Tuple

import numpy as np

from utils.linalg import (
    ComplexMatrix,
    ComplexVector,
    MatrixLike,
    complement_projector,
    inv_sqrt,
    orthogonal_projector,
    quadratic_form,
)

# Denominators below this fraction of the whitened energy are degenerate
DEGENERATE_ENERGY_RATIO = 1e-14


class DetectorError(ValueError):
    """Raised when a detector statistic is undefined for its input."""
    pass


def whiten(
    y: ComplexVector,
    h: ComplexMatrix,
    b: ComplexMatrix,
    s: MatrixLike,
) -> Tuple[ComplexVector, ComplexMatrix, ComplexMatrix]:
    """Apply S^{-1/2} to the test vector and both subspaces."""
    w = inv_sqrt(s)
    return w @ y, w @ h, w @ b


def _energy(x: ComplexVector) -> float:
    return float(np.vdot(x, x).real)


def asd_statistic(y: ComplexVector, h: ComplexMatrix, b: ComplexMatrix, s: MatrixLike) -> float:
    """
    Adaptive subspace detector.

    (ỹ†P_{B̃⊥}P_{H̃}P_{B̃⊥}ỹ) / (ỹ†P_{B̃⊥}ỹ) with ỹ, H̃, B̃ whitened by S^{-1/2}.

    Args:
        y: Test vector
        h: Signal subspace (N×p)
        b: Interference subspace (N×t)
        s: Covariance estimate (Hermitian PD)

    Returns:
        Statistic in [0, 1]

    Raises:
        DetectorError: If the whitened test vector lies in span(B̃)
    """
    y_w, h_w, b_w = whiten(y, h, b, s)
    deflated = complement_projector(b_w) @ y_w
    denominator = _energy(deflated)
    if denominator < DEGENERATE_ENERGY_RATIO * _energy(y_w) or denominator == 0:
        raise DetectorError("test vector lies in interference subspace")
    numerator = quadratic_form(deflated, orthogonal_projector(h_w))
    return numerator / denominator


def amf_statistic(y: ComplexVector, h: ComplexMatrix, b: ComplexMatrix, s: MatrixLike) -> float:
    """
    Adaptive matched filter.

    (ỹ†P_{B̃⊥}ỹ) / (ỹ†P_{C̃⊥}ỹ) with C = [H, B] and whitening by S^{-1/2}.

    Raises:
        DetectorError: If the whitened test vector lies in span(C̃)
    """
    y_w, h_w, b_w = whiten(y, h, b, s)
    c_w = np.hstack([h_w, b_w])
    denominator = _energy(complement_projector(c_w) @ y_w)
    if denominator < DEGENERATE_ENERGY_RATIO * _energy(y_w) or denominator == 0:
        raise DetectorError("test vector lies in span of C")
    numerator = _energy(complement_projector(b_w) @ y_w)
    return numerator / denominator


def amf_known(
    y: ComplexVector,
    h: ComplexMatrix,
    b: ComplexMatrix,
    true_cov: MatrixLike,
) -> float:
    """AMF whitened by the true test covariance σ²R."""
    return amf_statistic(y, h, b, true_cov)
