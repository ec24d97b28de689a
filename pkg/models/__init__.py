# Models module for the heterogeneous-environment detector
# Contains scenario, dataset, estimator-state and result records

from .schemas import (
    AdmmParams,
    AdmmState,
    Dataset,
    DetectorId,
    DetectorOutput,
    DetectorRun,
    Histogram,
    Hypothesis,
    NoiseSpec,
    RocCurve,
    RunManifest,
    Scenario,
    ScenarioName,
    SchemaError,
    SecondaryEstimate,
    StatSamples,
    SubspaceSpec,
)

__all__ = [
    "AdmmParams",
    "AdmmState",
    "Dataset",
    "DetectorId",
    "DetectorOutput",
    "DetectorRun",
    "Histogram",
    "Hypothesis",
    "NoiseSpec",
    "RocCurve",
    "RunManifest",
    "Scenario",
    "ScenarioName",
    "SchemaError",
    "SecondaryEstimate",
    "StatSamples",
    "SubspaceSpec",
]
