"""
heterodet - Main Entry Point.
Runs Monte Carlo detector campaigns and writes ROC, statistics and summary files.
"""

import argparse
import sys
from typing import Any, Dict, List, Optional, Sequence, TextIO

from config import (
    Config,
    ConfigurationError,
    get_config,
    load_config_file,
    parse_config,
    scenario_to_config,
)
from models.schemas import DetectorRun, RunManifest, Scenario
from services.experiments import (
    MonteCarloEngine,
    empirical_roc,
    failure_budget_exceeded,
    histogram,
    pd_at_pfa,
)
from services.results import ResultsError, write_outputs
from utils.logging_config import LOG_LEVELS, campaign_context, configure_logging, get_logger
from utils.validators import split_list

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ABORTED = 1
EXIT_CONFIG = 2

SUMMARY_PFA = 0.1


def build_parser() -> argparse.ArgumentParser:
    """Command-line flags."""
    parser = argparse.ArgumentParser(
        prog="heterodet",
        description="Monte Carlo ROC campaigns for adaptive subspace detectors.",
    )
    parser.add_argument("--config", help="JSON campaign configuration")
    parser.add_argument("--scenario", help="Preset: HE, PHE, NSPHE, HET (default HE)")
    parser.add_argument("--out", help="Output directory")
    parser.add_argument("--seed", type=int, help="Master seed (unsigned 64-bit)")
    parser.add_argument("--trials", type=int, help="Paired H0/H1 trials")
    parser.add_argument("--detectors", help="Comma list of asd, amf, amf_known, hetero")
    parser.add_argument(
        "--paper-scale",
        dest="full_scale",
        action="store_true",
        help="Use the full preset size (K=500, 2000 trials) instead of desk scale",
    )
    parser.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--json-logs", action="store_true", help="Render logs as JSON")
    return parser


def build_source(args: argparse.Namespace) -> Dict[str, Any]:
    """Merge the config file (if any) with flag overrides."""
    data: Dict[str, Any] = load_config_file(args.config) if args.config else {}
    if args.scenario:
        data["scenario"] = args.scenario
    data.setdefault("scenario", "HE")
    if args.out:
        data["out_dir"] = args.out
    if args.seed is not None:
        data["seed"] = args.seed
    if args.trials is not None:
        data["trials"] = args.trials
    if args.detectors:
        data["detectors"] = split_list(args.detectors)
    return data


class CampaignRunner:
    """
    Runs one campaign end to end: trials, ROC curves, files and summary.
    """

    def __init__(
        self,
        manifest: RunManifest,
        scenario: Scenario,
        workers: int = 1,
        log_level: Optional[str] = None,
        json_logs: bool = False,
    ):
        """
        Initialize the runner.

        Args:
            manifest: Resolved manifest (detectors, output directory)
            scenario: Resolved scenario
            workers: Worker processes for the trials
            log_level: Log level forwarded to workers
            json_logs: JSON log rendering in workers
        """
        self.manifest = manifest
        self.scenario = scenario
        self.engine = MonteCarloEngine(workers=workers, log_level=log_level, json_logs=json_logs)

    def collect(self) -> List[DetectorRun]:
        """Run the trials and build ROC curves and histograms."""
        samples = self.engine.run_paired_trials(self.scenario, self.manifest.detectors)
        runs = []
        for detector_id in self.manifest.detectors:
            record = samples[detector_id]
            aborted = failure_budget_exceeded(record)
            run = DetectorRun(samples=record, aborted=aborted)
            if record.h0_values:
                run.roc = empirical_roc(record)
                run.histogram = histogram(record)
            if aborted:
                logger.error(
                    "detector_aborted",
                    detector=detector_id.cli_name,
                    failures=record.failures,
                    trials=record.trials,
                )
            runs.append(run)
        return runs

    def run(self, out: TextIO = sys.stdout) -> int:
        """
        Run the campaign and write its outputs.

        Returns:
            0 on success, 1 when any detector run was aborted
        """
        with campaign_context(scenario=self.scenario.name.value, seed=self.scenario.seed):
            runs = self.collect()
            config = scenario_to_config(self.scenario, self.manifest.detectors, self.manifest.out_dir)
            write_outputs(runs, self.manifest.out_dir, config)
            out.write(format_summary(runs))
        return EXIT_ABORTED if any(r.aborted for r in runs) else EXIT_OK


def format_summary(runs: Sequence[DetectorRun]) -> str:
    """AUC summary table for the terminal."""
    lines = [f"{'detector':<10} {'auc':>8} {'pd@pfa=0.1':>11} {'trials':>7} {'failures':>9}"]
    for run in runs:
        if run.roc is not None:
            auc = f"{run.roc.auc:8.4f}"
            pd = f"{pd_at_pfa(run.roc, SUMMARY_PFA):11.4f}"
        else:
            auc, pd = f"{'-':>8}", f"{'-':>11}"
        flag = "  ABORTED" if run.aborted else ""
        lines.append(
            f"{run.detector_id.cli_name:<10} {auc} {pd} "
            f"{run.samples.trials:>7} {run.samples.failures:>9}{flag}"
        )
    return "\n".join(lines) + "\n"


def run_campaign(
    manifest: RunManifest,
    scenario: Scenario,
    config: Optional[Config] = None,
    out: TextIO = sys.stdout,
) -> int:
    """Run a resolved campaign and return its exit status."""
    config = config or Config()
    runner = CampaignRunner(
        manifest,
        scenario,
        workers=config.workers,
        log_level=config.log_level,
        json_logs=config.log_json,
    )
    try:
        return runner.run(out=out)
    except ResultsError as e:
        logger.error("results_error", error=str(e))
        return EXIT_ABORTED


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    try:
        config = get_config()
        if args.log_level:
            config.log_level = args.log_level.upper()
            if config.log_level not in LOG_LEVELS:
                raise ConfigurationError(f"--log-level is not a log level: {args.log_level!r}")
        config.log_json = config.log_json or args.json_logs
        configure_logging(log_level=config.log_level, json_format=config.log_json)

        manifest, scenario = parse_config(
            build_source(args),
            full_scale=args.full_scale,
            default_out_dir=config.out_dir,
        )
    except ConfigurationError as e:
        configure_logging(log_level="INFO")
        logger.error("configuration_error", error=str(e))
        print(f"Configuration Error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    logger.info(
        "campaign_configured",
        scenario=manifest.scenario,
        detectors=manifest.detector_names,
        trials=scenario.trials,
        out_dir=manifest.out_dir,
    )
    try:
        return run_campaign(manifest, scenario, config=config, out=sys.stdout)
    except KeyboardInterrupt:
        logger.info("campaign_interrupted")
        return EXIT_ABORTED
    except Exception as e:
        logger.exception("fatal_error", error=str(e))
        raise


if __name__ == "__main__":
    sys.exit(main())
