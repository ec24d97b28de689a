"""
Result files of a campaign: ROC points, raw statistics, histograms,
the AUC summary and the resolved manifest.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np

from models.schemas import DetectorId, DetectorRun, Hypothesis
from utils.logging_config import get_logger

logger = get_logger(__name__)

ROC_HEADER = ("pfa", "pd")
STATS_HEADER = ("hypothesis", "value")
SUMMARY_HEADER = ("detector", "auc", "trials", "failures")
HIST_HEADER = ("bin_left", "bin_right", "h0_count", "h1_count")

MANIFEST_FILE = "manifest.json"
SUMMARY_FILE = "summary.csv"


class ResultsError(Exception):
    """Raised when result files cannot be written or read."""
    pass


def format_number(value: float) -> str:
    """Full-precision decimal (17 significant digits)."""
    return format(float(value), ".17g")


class ResultsWriter:
    """
    Writes campaign outputs into one directory.

    Every CSV has a single header line, LF line endings and purely
    numeric fields apart from the detector and hypothesis labels.
    """

    def __init__(self, out_dir: str):
        """
        Initialize the writer.

        Args:
            out_dir: Output directory, created if missing
        """
        self.out_dir = Path(out_dir)
        self._ensure_directory()

    def _ensure_directory(self) -> None:
        """Ensure the output directory exists."""
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ResultsError(f"cannot create output directory {self.out_dir}: {e}") from e

    def _write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
        path = self.out_dir / name
        try:
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
        except OSError as e:
            raise ResultsError(f"failed to write {path}: {e}") from e
        return path

    def write_roc(self, run: DetectorRun) -> Path:
        """roc_<detector>.csv, rows by pfa ascending."""
        roc = run.roc
        rows = ((format_number(f), format_number(d)) for f, d in zip(roc.pfa, roc.pd))
        return self._write_csv(f"roc_{run.detector_id.cli_name}.csv", ROC_HEADER, rows)

    def write_stats(self, run: DetectorRun) -> Path:
        """stats_<detector>.csv, H0 values then H1 values, by trial index."""
        samples = run.samples
        rows = [(Hypothesis.H0.value, format_number(v)) for v in samples.h0_values]
        rows += [(Hypothesis.H1.value, format_number(v)) for v in samples.h1_values]
        return self._write_csv(f"stats_{run.detector_id.cli_name}.csv", STATS_HEADER, rows)

    def write_histogram(self, run: DetectorRun) -> Path:
        hist = run.histogram
        rows = (
            (format_number(left), format_number(right), str(int(c0)), str(int(c1)))
            for left, right, c0, c1 in zip(
                hist.edges[:-1], hist.edges[1:], hist.h0_counts, hist.h1_counts
            )
        )
        return self._write_csv(f"hist_{run.detector_id.cli_name}.csv", HIST_HEADER, rows)

    def write_summary(self, runs: Sequence[DetectorRun]) -> Path:
        """summary.csv; detectors without a ROC report nan."""
        rows = []
        for run in runs:
            auc = format_number(run.roc.auc) if run.roc is not None else "nan"
            rows.append((
                run.detector_id.cli_name,
                auc,
                str(run.samples.trials),
                str(run.samples.failures),
            ))
        return self._write_csv(SUMMARY_FILE, SUMMARY_HEADER, rows)

    def write_manifest(self, config: Mapping[str, Any]) -> Path:
        path = self.out_dir / MANIFEST_FILE
        try:
            with open(path, "w", encoding="utf-8", newline="") as f:
                json.dump(dict(config), f, indent=2, sort_keys=True)
                f.write("\n")
        except OSError as e:
            raise ResultsError(f"failed to write {path}: {e}") from e
        return path

    def write_all(self, runs: Sequence[DetectorRun], config: Mapping[str, Any]) -> List[Path]:
        """Write every file of a campaign and return their paths."""
        paths = []
        for run in runs:
            if run.roc is not None:
                paths.append(self.write_roc(run))
            if run.samples.h0_values:
                paths.append(self.write_stats(run))
            if run.histogram is not None:
                paths.append(self.write_histogram(run))
        paths.append(self.write_summary(runs))
        paths.append(self.write_manifest(config))
        logger.info("results_written", out_dir=str(self.out_dir), files=len(paths))
        return paths


def write_outputs(
    runs: Sequence[DetectorRun],
    out_dir: str,
    config: Mapping[str, Any],
) -> List[Path]:
    """Write all campaign outputs into out_dir."""
    return ResultsWriter(out_dir).write_all(runs, config)


def _read_rows(path: Path, header: Sequence[str]) -> List[List[str]]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
    except OSError as e:
        raise ResultsError(f"failed to read {path}: {e}") from e
    if not rows or tuple(rows[0]) != tuple(header):
        raise ResultsError(f"unexpected header in {path}")
    return rows[1:]


def read_roc_csv(path) -> Tuple[np.ndarray, np.ndarray]:
    """Load (pfa, pd) arrays from a roc_<detector>.csv file."""
    rows = _read_rows(Path(path), ROC_HEADER)
    pfa = np.array([float(r[0]) for r in rows])
    pd = np.array([float(r[1]) for r in rows])
    return pfa, pd


def read_summary_csv(path) -> Dict[DetectorId, Tuple[float, int, int]]:
    """Load summary.csv as {detector: (auc, trials, failures)}."""
    rows = _read_rows(Path(path), SUMMARY_HEADER)
    return {
        DetectorId.from_string(r[0]): (float(r[1]), int(r[2]), int(r[3]))
        for r in rows
    }
