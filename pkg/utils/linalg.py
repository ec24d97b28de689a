"""
Complex Hermitian linear-algebra primitives shared by all detectors.
Projectors, whitening, sample covariances and positive-definite repair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla
from numpy.typing import NDArray

ComplexMatrix = NDArray[np.complex128]
ComplexVector = NDArray[np.complex128]

# Gram matrices worse conditioned than this are treated as singular
GRAM_CONDITION_LIMIT = 1e12

# Eigenvalue floor for repaired matrices, relative to the largest eigenvalue
DEFAULT_RELATIVE_FLOOR = 1e-8

HERMITIAN_TOLERANCE = 1e-12

# Set to True to verify that quadratic forms have negligible imaginary parts
DEBUG_CHECKS = False


class LinalgError(ValueError):
    """Base exception for linear-algebra failures."""
    pass


class SingularGramError(LinalgError):
    """Raised when D†D cannot be inverted reliably."""
    pass


class NotPositiveDefiniteError(LinalgError):
    """Raised when a matrix required to be positive definite is not."""
    pass


@dataclass(frozen=True, eq=False)
class HermitianPD:
    """
    A validated Hermitian positive definite matrix.

    Attributes:
        matrix: Square complex matrix
        floor: Smallest admissible eigenvalue
    """
    matrix: ComplexMatrix
    floor: float

    def __post_init__(self) -> None:
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise NotPositiveDefiniteError(f"expected a square matrix, got shape {m.shape}")
        if self.floor <= 0:
            raise NotPositiveDefiniteError("floor must be positive")
        scale = np.linalg.norm(m)
        if scale == 0 or np.linalg.norm(m - m.conj().T) > HERMITIAN_TOLERANCE * scale:
            raise NotPositiveDefiniteError("matrix is not Hermitian")
        smallest = np.linalg.eigvalsh(m)[0]
        # eigvalsh round-off on a freshly clamped spectrum
        if smallest < self.floor * (1.0 - 1e-6) - 1e-15 * scale:
            raise NotPositiveDefiniteError(
                f"not positive definite: eigenvalue {smallest:.3e} below floor {self.floor:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


MatrixLike = Union[ComplexMatrix, HermitianPD]


def as_array(m: MatrixLike) -> ComplexMatrix:
    """Return the plain array behind a matrix-like argument."""
    if isinstance(m, HermitianPD):
        return m.matrix
    return np.asarray(m, dtype=np.complex128)


def hermitian_part(m: MatrixLike) -> ComplexMatrix:
    """Return (M + M†)/2, which is exactly Hermitian in floating point."""
    a = as_array(m)
    return (a + a.conj().T) / 2


def _gram_solve(d: ComplexMatrix, rhs: ComplexMatrix) -> ComplexMatrix:
    """Solve (D†D) X = rhs, rejecting ill-conditioned Gram matrices."""
    gram = d.conj().T @ d
    if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > GRAM_CONDITION_LIMIT:
        raise SingularGramError("singular Gram matrix")
    return sla.solve(gram, rhs, assume_a="her")


def orthogonal_projector(d: ComplexMatrix) -> ComplexMatrix:
    """
    Orthogonal projector onto the column space of D, P_D = D (D†D)⁻¹ D†.

    Args:
        d: N×m matrix with linearly independent columns

    Returns:
        N×N Hermitian idempotent matrix

    Raises:
        SingularGramError: If the columns of D are (numerically) dependent
    """
    d = np.atleast_2d(np.asarray(d, dtype=np.complex128))
    if d.shape[0] == 1 and d.shape[1] > 1:
        d = d.T
    projector = d @ _gram_solve(d, d.conj().T)
    return hermitian_part(projector)


def complement_projector(d: ComplexMatrix) -> ComplexMatrix:
    """Projector onto the orthogonal complement of span(D), I − P_D."""
    projector = orthogonal_projector(d)
    return np.eye(projector.shape[0], dtype=np.complex128) - projector


def least_squares_coefficients(y: ComplexVector, d: ComplexMatrix) -> ComplexVector:
    """Return (D†D)⁻¹ D† y."""
    return _gram_solve(d, d.conj().T @ y)


def _eigh(m: MatrixLike):
    return np.linalg.eigh(hermitian_part(m))


def inv_sqrt(m: MatrixLike, floor: Optional[float] = None) -> ComplexMatrix:
    """
    Principal inverse square root of a Hermitian positive definite matrix.

    Args:
        m: Hermitian PD matrix (HermitianPD or array)
        floor: Smallest admissible eigenvalue; defaults to the HermitianPD floor,
            or to any strictly positive eigenvalue for plain arrays

    Returns:
        Hermitian W with W M W = I

    Raises:
        NotPositiveDefiniteError: If an eigenvalue falls below the floor
    """
    if floor is None:
        floor = m.floor * (1.0 - 1e-6) if isinstance(m, HermitianPD) else 0.0
    eigvals, eigvecs = _eigh(m)
    if eigvals[0] <= floor or not np.all(np.isfinite(eigvals)):
        raise NotPositiveDefiniteError(
            f"not positive definite: smallest eigenvalue {eigvals[0]:.3e}"
        )
    root = (eigvecs * (1.0 / np.sqrt(eigvals))) @ eigvecs.conj().T
    return hermitian_part(root)


def log_det(m: MatrixLike) -> float:
    """Log-determinant of a Hermitian positive definite matrix."""
    eigvals = np.linalg.eigvalsh(hermitian_part(m))
    if eigvals[0] <= 0:
        raise NotPositiveDefiniteError(
            f"not positive definite: smallest eigenvalue {eigvals[0]:.3e}"
        )
    return float(np.sum(np.log(eigvals)))


def quadratic_form(x: ComplexVector, m: MatrixLike) -> float:
    """Real part of x†Mx."""
    value = np.vdot(x, as_array(m) @ x)
    if DEBUG_CHECKS:
        assert abs(value.imag) <= 1e-12 * max(abs(value.real), 1e-300), (
            f"quadratic form has imaginary part {value.imag:.3e}"
        )
    return float(value.real)


def stack_samples(samples: Union[Sequence[ComplexVector], NDArray]) -> NDArray:
    """Stack sample vectors as the rows of a K×N array."""
    if isinstance(samples, np.ndarray):
        rows = np.atleast_2d(samples)
    else:
        if len(samples) == 0:
            raise LinalgError("sample list is empty")
        rows = np.vstack([np.asarray(s, dtype=np.complex128) for s in samples])
    if rows.shape[0] == 0:
        raise LinalgError("sample list is empty")
    return rows.astype(np.complex128, copy=False)


def sample_covariance(samples: Union[Sequence[ComplexVector], NDArray]) -> ComplexMatrix:
    """
    Sample covariance S = (1/K) Σ n_k n_k†.

    Args:
        samples: K vectors of dimension N, as a list or as the rows of a K×N array

    Returns:
        N×N Hermitian positive semidefinite matrix

    Raises:
        LinalgError: If no samples are given
    """
    rows = stack_samples(samples)
    return hermitian_part(rows.T @ rows.conj() / rows.shape[0])


def floor_eigenvalues(
    m: MatrixLike,
    floor: Optional[float] = None,
    relative_floor: float = DEFAULT_RELATIVE_FLOOR,
) -> tuple[ComplexMatrix, float]:
    """
    Symmetrize M and clamp its eigenvalues from below.

    The matrix is only rebuilt from its eigendecomposition when clamping
    actually happens, so already-valid inputs pass through unchanged.

    Returns:
        Tuple of (repaired matrix, floor that was applied)
    """
    sym = hermitian_part(m)
    eigvals, eigvecs = np.linalg.eigh(sym)
    if floor is None:
        floor = relative_floor * max(float(eigvals[-1]), 0.0)
        if floor <= 0:
            # all-nonpositive spectrum: fall back to the matrix scale
            floor = relative_floor * max(float(np.linalg.norm(sym)), 1.0)
    if eigvals[0] >= floor:
        return sym, floor
    clamped = np.maximum(eigvals, floor)
    repaired = (eigvecs * clamped) @ eigvecs.conj().T
    return hermitian_part(repaired), floor


def pd_repair(
    m: MatrixLike,
    floor: Optional[float] = None,
    relative_floor: float = DEFAULT_RELATIVE_FLOOR,
) -> HermitianPD:
    """
    Symmetrize M and clamp eigenvalues below the floor up to the floor.

    Args:
        m: Square matrix (need not be Hermitian)
        floor: Absolute eigenvalue floor; when omitted, relative_floor times
            the largest eigenvalue is used

    Returns:
        HermitianPD satisfying the floor
    """
    repaired, applied = floor_eigenvalues(m, floor=floor, relative_floor=relative_floor)
    return HermitianPD(repaired, applied)
