"""
Data models for scenarios, datasets, estimator state and Monte Carlo results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from utils.linalg import ComplexMatrix, ComplexVector, HermitianPD
from utils.validators import normalize_detector_name

FORMAT_VERSION = "1"

# Presets store 0.44·I as printed, which is within 2% of unit Frobenius norm
NOISE_NORM_TOLERANCE = 0.02


class SchemaError(ValueError):
    """Raised when a record violates its invariants."""
    pass


class Hypothesis(str, Enum):
    """Ground-truth label of a dataset."""
    H0 = "h0"
    H1 = "h1"


class DetectorId(str, Enum):
    """Enumeration of the detectors the engine can evaluate."""
    ASD = "ASD"
    AMF = "AMF"
    AMF_KNOWN = "AMF_KNOWN"
    HETERO_GLRT = "HETERO_GLRT"

    @classmethod
    def from_string(cls, name: str) -> "DetectorId":
        """Convert a user-facing detector name to the enum."""
        canonical = normalize_detector_name(name)
        if canonical is None:
            raise SchemaError(f"Unknown detector name: {name!r}")
        return cls(canonical)

    @property
    def cli_name(self) -> str:
        """Short name used in file names and configs."""
        return {
            DetectorId.ASD: "asd",
            DetectorId.AMF: "amf",
            DetectorId.AMF_KNOWN: "amf_known",
            DetectorId.HETERO_GLRT: "hetero",
        }[self]


class ScenarioName(str, Enum):
    """Scenario presets (CUSTOM has no preset)."""
    HE = "HE"
    PHE = "PHE"
    NSPHE = "NSPHE"
    HET = "HET"
    CUSTOM = "CUSTOM"

    @classmethod
    def from_string(cls, name: str) -> "ScenarioName":
        key = (name or "").strip().upper().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise SchemaError(f"Unknown scenario name: {name!r}")


@dataclass
class SubspaceSpec:
    """
    Dimensions of the signal and interference subspaces.

    Attributes:
        n: Number of sensors (vector dimension)
        p: Signal subspace dimension
        t: Interference subspace dimension
    """
    n: int
    p: int
    t: int

    def __post_init__(self) -> None:
        if self.p < 1 or self.t < 1 or self.p + self.t >= self.n:
            raise SchemaError(
                f"need 1 <= p, 1 <= t and p + t < N, got N={self.n}, p={self.p}, t={self.t}"
            )


@dataclass(eq=False)
class NoiseSpec:
    """
    Covariances and scales of the test cell and the secondary groups.

    Attributes:
        r_s_base: Base covariance of the secondary data (≈ unit Frobenius norm)
        r_test: Base covariance of the test cell (≈ unit Frobenius norm)
        sigma2_test: Test noise power σ²
        group_sizes: Samples per adjacent cell, K_1..K_J
        group_scales: Scale of each adjacent cell, σ_1²..σ_J²
    """
    r_s_base: HermitianPD
    r_test: HermitianPD
    sigma2_test: float
    group_sizes: Tuple[int, ...]
    group_scales: Tuple[float, ...]

    def __post_init__(self) -> None:
        self.group_sizes = tuple(int(k) for k in self.group_sizes)
        self.group_scales = tuple(float(s) for s in self.group_scales)
        if not self.group_sizes or len(self.group_sizes) != len(self.group_scales):
            raise SchemaError("group_sizes and group_scales must be non-empty and equally long")
        if any(k < 1 for k in self.group_sizes):
            raise SchemaError("every group needs at least one sample")
        if any(not s > 0 for s in self.group_scales):
            raise SchemaError("group scales must be positive")
        if not self.sigma2_test > 0:
            raise SchemaError("sigma2_test must be positive")
        if self.r_s_base.dim != self.r_test.dim:
            raise SchemaError("r_s_base and r_test dimensions differ")
        for label, m in (("r_s_base", self.r_s_base), ("r_test", self.r_test)):
            norm = np.linalg.norm(m.matrix)
            if abs(norm - 1.0) > NOISE_NORM_TOLERANCE:
                raise SchemaError(f"{label} must have unit Frobenius norm, got {norm:.4f}")

    @property
    def k(self) -> int:
        return sum(self.group_sizes)

    @property
    def j(self) -> int:
        return len(self.group_sizes)

    @property
    def true_test_cov(self) -> ComplexMatrix:
        """Actual test-cell covariance σ²R."""
        return self.sigma2_test * self.r_test.matrix

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NoiseSpec):
            return NotImplemented
        return (
            np.array_equal(self.r_s_base.matrix, other.r_s_base.matrix)
            and np.array_equal(self.r_test.matrix, other.r_test.matrix)
            and self.sigma2_test == other.sigma2_test
            and self.group_sizes == other.group_sizes
            and self.group_scales == other.group_scales
        )


@dataclass(eq=False)
class Dataset:
    """
    One cell under test plus its secondary data.

    Attributes:
        y: Test vector (dimension N)
        secondary: One K_j×N array per adjacent cell, samples as rows
        truth: Hypothesis the data was drawn under
    """
    y: ComplexVector
    secondary: Tuple[np.ndarray, ...]
    truth: Hypothesis

    def __post_init__(self) -> None:
        n = self.y.shape[0]
        for group in self.secondary:
            if group.ndim != 2 or group.shape[1] != n:
                raise SchemaError("secondary groups must be K_j×N arrays")

    @property
    def group_sizes(self) -> Tuple[int, ...]:
        return tuple(g.shape[0] for g in self.secondary)

    @property
    def pooled(self) -> np.ndarray:
        """All secondary samples stacked as rows."""
        return np.vstack(self.secondary)


@dataclass
class DetectorOutput:
    """A detector statistic for one dataset."""
    statistic: float
    detector_id: DetectorId

    def __post_init__(self) -> None:
        if not math.isfinite(self.statistic):
            raise SchemaError(f"{self.detector_id.value} statistic is not finite")


@dataclass
class AdmmParams:
    """
    Parameters of the constrained covariance estimator.

    Attributes:
        epsilon: Proximity bound ε on ‖R − R_s‖_F²
        rho: Augmented-Lagrangian weight ρ
        eta: Gradient step η
        max_iter: Hard cap on ADMM iterations
        pd_floor: Relative eigenvalue floor (absolute floor for scale estimates)
        primal_tol: Early-stop tolerance; 0 runs all max_iter iterations
        outer_iters: Passes of the {coefficients, σ²} / ADMM alternation
        project_feasible: Treat the constraints as hard: R and Z are projected
            onto the feasible set after each update. False leaves them to the
            penalty terms alone.
        alt_tol: Tolerance of the R_s / σ_j² alternation
        max_alt_iters: Cap on the R_s / σ_j² alternation
    """
    epsilon: float = 0.0
    rho: float = 2.0
    eta: float = 1e-4
    max_iter: int = 2000
    pd_floor: float = 1e-8
    primal_tol: float = 1e-6
    outer_iters: int = 3
    project_feasible: bool = True
    alt_tol: float = 1e-6
    max_alt_iters: int = 50

    def __post_init__(self) -> None:
        if not self.epsilon >= 0:
            raise SchemaError("epsilon must be non-negative")
        for name in ("rho", "eta", "pd_floor", "alt_tol"):
            if not getattr(self, name) > 0:
                raise SchemaError(f"{name} must be positive")
        if not self.primal_tol >= 0:
            raise SchemaError("primal_tol must be non-negative")
        for name in ("max_iter", "outer_iters", "max_alt_iters"):
            if getattr(self, name) < 1:
                raise SchemaError(f"{name} must be at least 1")


@dataclass(eq=False)
class AdmmState:
    """
    Iterate of the ADMM covariance estimator.

    Attributes:
        r: Covariance iterate R (Hermitian, eigenvalue-floored)
        z: Split copy Z (Hermitian, eigenvalue-floored)
        u: Dual matrix for R − Z = 0
        gamma: Dual of the norm constraint
        lam: Dual of the proximity constraint
        iteration: Number of completed updates
    """
    r: ComplexMatrix
    z: ComplexMatrix
    u: ComplexMatrix
    gamma: float = 0.0
    lam: float = 0.0
    iteration: int = 0

    @classmethod
    def initial(cls, r0: ComplexMatrix, u0: Optional[ComplexMatrix] = None) -> "AdmmState":
        """R⁰ = Z⁰ = r0, U⁰ = u0 (zero if omitted), γ⁰ = λ⁰ = 0."""
        r0 = np.array(r0, dtype=np.complex128)
        u = np.zeros_like(r0) if u0 is None else np.array(u0, dtype=np.complex128)
        return cls(r=r0, z=r0.copy(), u=u)


@dataclass(eq=False)
class SecondaryEstimate:
    """
    Estimates learned from the secondary data alone.

    Attributes:
        r_s_hat: Normalized weighted sample covariance
        group_scales_hat: Estimated σ_j² per adjacent cell
        iterations: Alternation passes used
    """
    r_s_hat: HermitianPD
    group_scales_hat: Tuple[float, ...]
    iterations: int = 0


@dataclass
class Scenario:
    """
    Full description of one Monte Carlo experiment.

    Attributes:
        name: Preset the scenario was built from
        subspace: Subspace dimensions
        noise: Covariances and scales
        snr_db: Signal-to-noise ratio of the H1 datasets
        admm: Covariance estimator parameters
        trials: Paired H0/H1 trials
        seed: Master seed
        alpha: Strength of the heterogeneous test-covariance perturbation
        decay: Correlation decay of that perturbation
    """
    name: ScenarioName
    subspace: SubspaceSpec
    noise: NoiseSpec
    snr_db: float
    admm: AdmmParams
    trials: int
    seed: int
    alpha: float = 0.0
    decay: float = 0.95

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise SchemaError("trials must be at least 1")
        if self.noise.r_s_base.dim != self.subspace.n:
            raise SchemaError("noise covariance dimension does not match N")


@dataclass(eq=False)
class RocCurve:
    """
    Empirical ROC curve.

    Attributes:
        pfa: False-alarm rates, nondecreasing, from 0 to 1
        pd: Detection rates, nondecreasing, from 0 to 1
        auc: Trapezoidal area under the curve
    """
    pfa: np.ndarray
    pd: np.ndarray
    auc: float

    def __post_init__(self) -> None:
        if self.pfa.shape != self.pd.shape or self.pfa.size < 2:
            raise SchemaError("ROC needs matching pfa/pd arrays with at least two points")
        if np.any(np.diff(self.pfa) < 0) or np.any(np.diff(self.pd) < 0):
            raise SchemaError("ROC points must be nondecreasing")
        if not 0.0 <= self.auc <= 1.0:
            raise SchemaError(f"AUC out of range: {self.auc}")

    @property
    def points(self) -> List[Tuple[float, float]]:
        return list(zip(self.pfa.tolist(), self.pd.tolist()))


@dataclass
class StatSamples:
    """
    Detector statistics collected over a campaign.

    Attributes:
        detector_id: Detector that produced the values
        h0_values: Statistics of the H0 datasets, by trial index
        h1_values: Statistics of the H1 datasets, by trial index
        failures: Trials dropped because an evaluation failed
    """
    detector_id: DetectorId
    h0_values: List[float] = field(default_factory=list)
    h1_values: List[float] = field(default_factory=list)
    failures: int = 0

    def __post_init__(self) -> None:
        values = list(self.h0_values) + list(self.h1_values)
        if not all(math.isfinite(v) for v in values):
            raise SchemaError("statistics must be finite")

    @property
    def trials(self) -> int:
        return len(self.h0_values) + self.failures


@dataclass(eq=False)
class Histogram:
    """Per-hypothesis counts over shared bin edges."""
    edges: np.ndarray
    h0_counts: np.ndarray
    h1_counts: np.ndarray


@dataclass(eq=False)
class DetectorRun:
    """
    Everything a campaign produced for one detector.

    Attributes:
        samples: Collected statistics
        roc: Empirical ROC (None when no trial succeeded)
        histogram: Per-hypothesis histogram (None when no trial succeeded)
        aborted: True when the failure budget was exceeded
    """
    samples: StatSamples
    roc: Optional[RocCurve] = None
    histogram: Optional[Histogram] = None
    aborted: bool = False

    @property
    def detector_id(self) -> DetectorId:
        return self.samples.detector_id


@dataclass
class RunManifest:
    """
    Resolved description of a campaign run.

    Attributes:
        scenario: Scenario name
        overrides: Config keys that differ from, or refine, the preset
        detectors: Detectors to evaluate
        out_dir: Output directory
        seed: Master seed
        format_version: Output format version
    """
    scenario: str
    overrides: Dict[str, Any]
    detectors: Tuple[DetectorId, ...]
    out_dir: str
    seed: int
    format_version: str = FORMAT_VERSION

    def __post_init__(self) -> None:
        if not self.detectors:
            raise SchemaError("detector list must not be empty")
        self.detectors = tuple(self.detectors)

    @property
    def detector_names(self) -> List[str]:
        return [d.cli_name for d in self.detectors]


def parse_detectors(names: List[str]) -> Tuple[DetectorId, ...]:
    """Convert detector names, keeping order and dropping duplicates."""
    seen: Dict[DetectorId, None] = {}
    for name in names:
        seen.setdefault(DetectorId.from_string(name), None)
    return tuple(seen)
