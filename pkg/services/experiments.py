"""
Monte Carlo engine for detector campaigns.
Scenario presets, paired H0/H1 trials, empirical ROC curves and histograms.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.schemas import (
    AdmmParams,
    Dataset,
    DetectorId,
    DetectorOutput,
    Histogram,
    Hypothesis,
    RocCurve,
    Scenario,
    ScenarioName,
    StatSamples,
    SubspaceSpec,
)
from services.detectors import amf_known, amf_statistic, asd_statistic
from services.hetero_glrt import hetero_glrt_log_statistic
from services.signal_model import (
    build_noise_spec,
    build_subspaces,
    default_phi,
    generate_dataset,
    split_groups,
    theta_for_snr,
)
from utils.linalg import ComplexMatrix, ComplexVector, HermitianPD, pd_repair, sample_covariance
from utils.logging_config import configure_worker_logging, current_context, get_logger
from utils.rng import H0_STREAM, H1_STREAM, trial_rng

logger = get_logger(__name__)

DEFAULT_SEED = 20240601

# A campaign is aborted when more than this fraction of trials fails
MAX_FAILURE_RATE = 0.01

DESK_K = 100
DESK_TRIALS = 500
FULL_TRIALS = 2000

DEFAULT_HISTOGRAM_BINS = 30


class ExperimentError(Exception):
    """Raised when a campaign cannot be set up or completed."""
    pass


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def preset(name) -> Scenario:
    """
    Scenario presets at full scale.

    HE: homogeneous, K=500, σ_j² = σ² = 5.
    PHE: partially homogeneous, K=40, σ_j² = 5, σ² = 20.
    NSPHE: two groups of 250 with σ² of 5 and 15, test σ² = 30.
    HET: NSPHE with a structurally perturbed test covariance and ε = 0.2.

    Args:
        name: ScenarioName or its string form

    Raises:
        ExperimentError: For CUSTOM or an unknown name
    """
    try:
        scenario_name = name if isinstance(name, ScenarioName) else ScenarioName.from_string(name)
    except ValueError as e:
        raise ExperimentError(str(e)) from e

    subspace = SubspaceSpec(n=5, p=2, t=1)
    alpha, decay, epsilon = 0.0, 0.95, 0.0
    if scenario_name is ScenarioName.HE:
        sizes, scales, sigma2 = (500,), (5.0,), 5.0
    elif scenario_name is ScenarioName.PHE:
        sizes, scales, sigma2 = (40,), (5.0,), 20.0
    elif scenario_name is ScenarioName.NSPHE:
        sizes, scales, sigma2 = (250, 250), (5.0, 15.0), 30.0
    elif scenario_name is ScenarioName.HET:
        sizes, scales, sigma2 = (250, 250), (5.0, 15.0), 30.0
        alpha, epsilon = 2.0, 0.2
    else:
        raise ExperimentError(f"scenario {scenario_name.value} has no preset")

    noise = build_noise_spec(subspace.n, sizes, scales, sigma2, alpha=alpha, decay=decay)
    return Scenario(
        name=scenario_name,
        subspace=subspace,
        noise=noise,
        snr_db=8.0,
        admm=AdmmParams(epsilon=epsilon, rho=2.0, eta=1e-4, max_iter=2000),
        trials=FULL_TRIALS,
        seed=DEFAULT_SEED,
        alpha=alpha,
        decay=decay,
    )


def rescale_groups(group_sizes: Sequence[int], k: int) -> Tuple[int, ...]:
    """Resize the groups to K samples in total, keeping their proportions."""
    total = sum(group_sizes)
    sizes = [max(1, int(round(k * size / total))) for size in group_sizes]
    sizes[-1] += k - sum(sizes)
    if sizes[-1] < 1:
        return split_groups(k, len(group_sizes))
    return tuple(sizes)


def desk_scale(scenario: Scenario) -> Scenario:
    """K capped at 100 (same group proportions) and at most 500 trials."""
    noise = scenario.noise
    if noise.k > DESK_K:
        noise = replace(noise, group_sizes=rescale_groups(noise.group_sizes, DESK_K))
    return replace(scenario, noise=noise, trials=min(scenario.trials, DESK_TRIALS))


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class TrialContext:
    """
    Quantities shared by every trial of a scenario.

    Attributes:
        scenario: The scenario being run
        h: Signal subspace
        b: Interference subspace
        theta: Signal coordinates at the scenario SNR
        phi: Interference coordinates
        true_cov: σ²R_test for the clairvoyant AMF
    """
    scenario: Scenario
    h: ComplexMatrix
    b: ComplexMatrix
    theta: ComplexVector
    phi: ComplexVector
    true_cov: HermitianPD

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "TrialContext":
        h, b = build_subspaces(scenario.subspace)
        noise = scenario.noise
        return cls(
            scenario=scenario,
            h=h,
            b=b,
            theta=theta_for_snr(h, noise.r_test, noise.sigma2_test, scenario.snr_db),
            phi=default_phi(scenario.subspace.t),
            true_cov=pd_repair(noise.true_test_cov),
        )

    def draw(self, trial: int, hypothesis: Hypothesis) -> Dataset:
        """Dataset of one trial under one hypothesis, from its own stream."""
        stream = H0_STREAM if hypothesis is Hypothesis.H0 else H1_STREAM
        rng = trial_rng(self.scenario.seed, trial, stream)
        return generate_dataset(
            self.scenario.subspace,
            self.scenario.noise,
            self.theta,
            self.phi,
            hypothesis,
            rng,
            subspaces=(self.h, self.b),
        )


def evaluate_detector(
    detector_id: DetectorId,
    dataset: Dataset,
    context: TrialContext,
) -> DetectorOutput:
    """
    Evaluate one detector on one dataset.

    HETERO_GLRT reports the log statistic.
    """
    if detector_id is DetectorId.AMF_KNOWN:
        value = amf_known(dataset.y, context.h, context.b, context.true_cov)
    elif detector_id is DetectorId.HETERO_GLRT:
        value = hetero_glrt_log_statistic(
            dataset.y, context.h, context.b, dataset.secondary, context.scenario.admm
        ).log_statistic
    else:
        s = pd_repair(sample_covariance(dataset.pooled))
        if detector_id is DetectorId.ASD:
            value = asd_statistic(dataset.y, context.h, context.b, s)
        else:
            value = amf_statistic(dataset.y, context.h, context.b, s)
    return DetectorOutput(statistic=float(value), detector_id=detector_id)


TrialOutcome = Dict[DetectorId, Optional[Tuple[float, float]]]


def _run_trial(
    context: TrialContext,
    detector_ids: Tuple[DetectorId, ...],
    trial: int,
) -> Tuple[int, TrialOutcome, Dict[DetectorId, str]]:
    """Draw both datasets of a trial and evaluate every detector on them."""
    h0 = context.draw(trial, Hypothesis.H0)
    h1 = context.draw(trial, Hypothesis.H1)
    outcome: TrialOutcome = {}
    errors: Dict[DetectorId, str] = {}
    for detector_id in detector_ids:
        try:
            v0 = evaluate_detector(detector_id, h0, context).statistic
            v1 = evaluate_detector(detector_id, h1, context).statistic
            outcome[detector_id] = (v0, v1)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as e:
            outcome[detector_id] = None
            errors[detector_id] = str(e)
    return trial, outcome, errors


class MonteCarloEngine:
    """
    Runs paired trials, sequentially or on a process pool.

    Each trial draws from streams derived from (seed, trial), and results
    are gathered by trial index, so the worker count never changes them.
    """

    def __init__(self, workers: int = 1, log_level: Optional[str] = None, json_logs: bool = False):
        """
        Initialize the engine.

        Args:
            workers: Worker processes; 1 runs in-process
            log_level: Level for worker logging (defaults to the root level)
            json_logs: JSON rendering in workers
        """
        if workers < 1:
            raise ExperimentError(f"workers must be at least 1, got {workers}")
        self.workers = workers
        self.log_level = log_level or logging.getLevelName(logging.getLogger().level)
        self.json_logs = json_logs

    def _outcomes(self, context: TrialContext, detector_ids: Tuple[DetectorId, ...]):
        task = partial(_run_trial, context, detector_ids)
        trials = range(context.scenario.trials)
        if self.workers == 1 or context.scenario.trials == 1:
            return [task(i) for i in trials]
        chunksize = max(1, context.scenario.trials // (4 * self.workers))
        with ProcessPoolExecutor(
            max_workers=self.workers,
            initializer=configure_worker_logging,
            initargs=(self.log_level, self.json_logs, current_context()),
        ) as pool:
            return list(pool.map(task, trials, chunksize=chunksize))

    def run_paired_trials(
        self,
        scenario: Scenario,
        detector_ids: Sequence[DetectorId],
    ) -> Dict[DetectorId, StatSamples]:
        """
        Evaluate every detector on the same datasets, trial by trial.

        A trial fails for a detector when its H0 or H1 evaluation raises;
        both values are then dropped and counted as one failure.

        Returns:
            StatSamples per detector, values ordered by trial index
        """
        detector_ids = tuple(detector_ids)
        if not detector_ids:
            raise ExperimentError("no detectors to run")
        context = TrialContext.from_scenario(scenario)
        logger.info(
            "campaign_started",
            scenario=scenario.name.value,
            trials=scenario.trials,
            detectors=[d.cli_name for d in detector_ids],
            workers=self.workers,
        )

        samples = {d: StatSamples(detector_id=d) for d in detector_ids}
        for trial, outcome, errors in sorted(self._outcomes(context, detector_ids), key=lambda r: r[0]):
            for detector_id, values in outcome.items():
                record = samples[detector_id]
                if values is None:
                    record.failures += 1
                    logger.warning(
                        "trial_failed",
                        detector=detector_id.cli_name,
                        trial=trial,
                        error=errors[detector_id],
                    )
                    continue
                record.h0_values.append(values[0])
                record.h1_values.append(values[1])

        for detector_id, record in samples.items():
            logger.info(
                "detector_finished",
                detector=detector_id.cli_name,
                trials=record.trials,
                failures=record.failures,
            )
        return samples

    def run_trials(self, scenario: Scenario, detector_id: DetectorId) -> StatSamples:
        """
        Single-detector campaign.

        Raises:
            ExperimentError: If more than 1% of the trials failed
        """
        samples = self.run_paired_trials(scenario, [detector_id])[detector_id]
        check_failure_budget(samples)
        return samples


def failure_budget_exceeded(samples: StatSamples) -> bool:
    """True when failed trials exceed 1% of the campaign, or none succeeded."""
    if not samples.h0_values:
        return True
    return samples.failures / samples.trials > MAX_FAILURE_RATE


def check_failure_budget(samples: StatSamples) -> None:
    """Raise ExperimentError when the failure budget is exceeded."""
    if failure_budget_exceeded(samples):
        raise ExperimentError(
            f"{samples.detector_id.cli_name}: {samples.failures} of {samples.trials} trials failed"
        )


def run_paired_trials(
    scenario: Scenario,
    detector_ids: Sequence[DetectorId],
    workers: int = 1,
) -> Dict[DetectorId, StatSamples]:
    """Paired campaign over several detectors."""
    return MonteCarloEngine(workers=workers).run_paired_trials(scenario, detector_ids)


def run_trials(scenario: Scenario, detector_id: DetectorId, workers: int = 1) -> StatSamples:
    """Campaign for one detector; aborts above 1% failed trials."""
    return MonteCarloEngine(workers=workers).run_trials(scenario, detector_id)


# ---------------------------------------------------------------------------
# ROC and histograms
# ---------------------------------------------------------------------------

def _fraction_at_least(sorted_values: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    below = np.searchsorted(sorted_values, thresholds, side="left")
    return (sorted_values.size - below) / sorted_values.size


def trapezoid_auc(pfa: np.ndarray, pd: np.ndarray) -> float:
    """Trapezoidal area under (pfa, pd) points."""
    area = float(np.sum(np.diff(pfa) * (pd[1:] + pd[:-1]) / 2))
    return min(max(area, 0.0), 1.0)


def empirical_roc(samples: StatSamples) -> RocCurve:
    """
    Empirical ROC over every distinct statistic value.

    Thresholds sweep the union of values in descending order; a value
    counts as a detection when it is ≥ the threshold. The curve starts at
    (0, 0) and ends at (1, 1).

    Raises:
        ExperimentError: If either hypothesis has no values
    """
    h0 = np.sort(np.asarray(samples.h0_values, dtype=float))
    h1 = np.sort(np.asarray(samples.h1_values, dtype=float))
    if h0.size == 0 or h1.size == 0:
        raise ExperimentError("ROC needs values under both hypotheses")
    thresholds = np.unique(np.concatenate([h0, h1]))[::-1]
    pfa = np.concatenate([[0.0], _fraction_at_least(h0, thresholds)])
    pd = np.concatenate([[0.0], _fraction_at_least(h1, thresholds)])
    return RocCurve(pfa=pfa, pd=pd, auc=trapezoid_auc(pfa, pd))


def auc_pair_test(curve_a: RocCurve, curve_b: RocCurve, margin: float = 0.0) -> bool:
    """True when auc(A) ≥ auc(B) + margin."""
    return curve_a.auc >= curve_b.auc + margin


def pd_at_pfa(curve: RocCurve, pfa: float) -> float:
    """Highest detection rate reached at a false-alarm rate ≤ pfa."""
    reachable = curve.pd[curve.pfa <= pfa]
    return float(reachable.max()) if reachable.size else 0.0


def histogram(samples: StatSamples, bins: int = DEFAULT_HISTOGRAM_BINS) -> Histogram:
    """
    Counts of both hypotheses over shared bin edges.

    Raises:
        ExperimentError: If bins < 1 or there are no values
    """
    if bins < 1:
        raise ExperimentError(f"bins must be at least 1, got {bins}")
    values: List[float] = list(samples.h0_values) + list(samples.h1_values)
    if not values:
        raise ExperimentError("histogram needs at least one value")
    edges = np.histogram_bin_edges(np.asarray(values, dtype=float), bins=bins)
    h0_counts, _ = np.histogram(np.asarray(samples.h0_values, dtype=float), bins=edges)
    h1_counts, _ = np.histogram(np.asarray(samples.h1_values, dtype=float), bins=edges)
    return Histogram(edges=edges, h0_counts=h0_counts, h1_counts=h1_counts)
