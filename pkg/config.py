"""
Configuration management for heterodet.
Runtime settings come from the environment; campaign settings come from a
JSON file or a mapping, layered on top of a scenario preset.
"""

import json
import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

from dotenv import load_dotenv

from models.schemas import (
    FORMAT_VERSION,
    AdmmParams,
    DetectorId,
    RunManifest,
    Scenario,
    ScenarioName,
    SubspaceSpec,
    parse_detectors,
)
from services.experiments import DEFAULT_SEED, DESK_TRIALS, ExperimentError, desk_scale, preset
from services.signal_model import ModelError, base_covariance, build_noise_spec, split_groups
from utils.validators import (
    find_unknown,
    is_non_negative_number,
    is_number,
    is_positive_int,
    is_positive_number,
    is_seed,
    split_list,
)
from utils.logging_config import LOG_LEVELS

# Load environment variables from .env file
load_dotenv()

# Campaign configuration keys, exactly as accepted in JSON files
CONFIG_KEYS = (
    "scenario", "n", "p", "t", "k", "group_sizes", "group_scales", "sigma2_test",
    "snr_db", "epsilon", "rho", "eta", "max_iter", "outer_iters", "trials", "seed",
    "detectors", "alpha", "decay", "out_dir",
)
METADATA_KEYS = ("format_version",)

INT_KEYS = ("n", "p", "t", "k", "max_iter", "outer_iters", "trials")
POSITIVE_KEYS = ("sigma2_test", "rho", "eta")
NON_NEGATIVE_KEYS = ("epsilon", "alpha")
CUSTOM_REQUIRED_KEYS = ("n", "p", "t", "sigma2_test", "snr_db")

DEFAULT_DETECTORS = (
    DetectorId.AMF_KNOWN,
    DetectorId.AMF,
    DetectorId.ASD,
    DetectorId.HETERO_GLRT,
)

ConfigSource = Union[str, Path, Mapping[str, Any]]


class ConfigurationError(Exception):
    """Raised when configuration is missing or invalid."""
    pass


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{name} must be a boolean, got {raw!r}")


@dataclass
class Config:
    """Runtime configuration."""

    # Worker processes for trials (0 = one per CPU)
    threads: int = 0

    # Logging
    log_level: str = "INFO"
    log_json: bool = False

    # Where campaigns write their files unless the config says otherwise
    out_dir: str = "results"

    @classmethod
    def from_env(cls) -> "Config":
        """
        Load configuration from environment variables.

        Raises:
            ConfigurationError: If a variable has an invalid value
        """
        raw_threads = os.getenv("HETERODET_THREADS", "0")
        try:
            threads = int(raw_threads)
        except ValueError:
            threads = -1
        if threads < 0:
            raise ConfigurationError(
                f"HETERODET_THREADS must be a non-negative integer, got {raw_threads!r}"
            )

        log_level = os.getenv("HETERODET_LOG_LEVEL", "INFO").upper()
        if log_level not in LOG_LEVELS:
            raise ConfigurationError(f"HETERODET_LOG_LEVEL is not a log level: {log_level!r}")

        return cls(
            threads=threads,
            log_level=log_level,
            log_json=_env_bool("HETERODET_LOG_JSON", False),
            out_dir=os.getenv("HETERODET_OUT_DIR", "results"),
        )

    @property
    def workers(self) -> int:
        """Resolved worker count."""
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


def get_config() -> Config:
    """Get the runtime configuration."""
    return Config.from_env()


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON campaign configuration.

    Raises:
        ConfigurationError: If the file cannot be read or is not a JSON object
    """
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must hold a JSON object")
    return data


def _validate_values(data: Mapping[str, Any]) -> None:
    for key in INT_KEYS:
        if key in data and not is_positive_int(data[key]):
            raise ConfigurationError(f"{key} must be a positive integer, got {data[key]!r}")
    for key in POSITIVE_KEYS:
        if key in data and not is_positive_number(data[key]):
            raise ConfigurationError(f"{key} must be positive, got {data[key]!r}")
    for key in NON_NEGATIVE_KEYS:
        if key in data and not is_non_negative_number(data[key]):
            raise ConfigurationError(f"{key} must be non-negative, got {data[key]!r}")
    if "snr_db" in data and not is_number(data["snr_db"]):
        raise ConfigurationError(f"snr_db must be a number, got {data['snr_db']!r}")
    if "decay" in data and not (is_positive_number(data["decay"]) and data["decay"] <= 1):
        raise ConfigurationError(f"decay must lie in (0, 1], got {data['decay']!r}")
    if "seed" in data and not is_seed(data["seed"]):
        raise ConfigurationError(f"seed must be an unsigned 64-bit integer, got {data['seed']!r}")
    if "group_sizes" in data:
        sizes = data["group_sizes"]
        if not isinstance(sizes, list) or not sizes or not all(is_positive_int(k) for k in sizes):
            raise ConfigurationError(f"group_sizes must be a list of positive integers, got {sizes!r}")
    if "group_scales" in data:
        scales = data["group_scales"]
        if not isinstance(scales, list) or not scales or not all(is_positive_number(s) for s in scales):
            raise ConfigurationError(f"group_scales must be a list of positive numbers, got {scales!r}")
    if "out_dir" in data and not (isinstance(data["out_dir"], str) and data["out_dir"]):
        raise ConfigurationError("out_dir must be a non-empty string")


def _parse_detector_list(value: Any) -> Tuple[DetectorId, ...]:
    names = split_list(value) if isinstance(value, str) else value
    if not isinstance(names, list) or not names or not all(isinstance(n, str) for n in names):
        raise ConfigurationError(f"detectors must be a non-empty list of names, got {value!r}")
    try:
        return parse_detectors(names)
    except ValueError as e:
        raise ConfigurationError(str(e)) from e


def _base_scenario(name: ScenarioName, data: Mapping[str, Any], full_scale: bool) -> Optional[Scenario]:
    if name is ScenarioName.CUSTOM:
        missing = [k for k in CUSTOM_REQUIRED_KEYS if k not in data]
        if "k" not in data and "group_sizes" not in data:
            missing.append("k")
        if missing:
            raise ConfigurationError(f"missing required keys for CUSTOM: {', '.join(missing)}")
        return None
    try:
        base = preset(name)
    except ExperimentError as e:
        raise ConfigurationError(str(e)) from e
    return base if full_scale else desk_scale(base)


def _group_layout(data: Mapping[str, Any], base: Optional[Scenario]) -> Tuple[Tuple[int, ...], Tuple[float, ...]]:
    base_sizes = base.noise.group_sizes if base else None
    base_scales = base.noise.group_scales if base else None

    if "group_sizes" in data:
        sizes = tuple(data["group_sizes"])
        if "k" in data and sum(sizes) != data["k"]:
            raise ConfigurationError(f"group_sizes sum to {sum(sizes)} but k is {data['k']}")
    else:
        j = len(data["group_scales"]) if "group_scales" in data else (len(base_sizes) if base_sizes else 1)
        if "k" in data:
            try:
                sizes = split_groups(data["k"], j)
            except ModelError as e:
                raise ConfigurationError(str(e)) from e
        else:
            sizes = base_sizes

    if "group_scales" in data:
        scales = tuple(float(s) for s in data["group_scales"])
    elif base_scales is not None and len(base_scales) == len(sizes):
        scales = base_scales
    elif base_scales is None:
        scales = (1.0,) * len(sizes)
    else:
        raise ConfigurationError(
            f"{len(sizes)} groups configured but the preset has {len(base_scales)} scales; "
            "set group_scales"
        )
    if len(scales) != len(sizes):
        raise ConfigurationError("group_sizes and group_scales must have the same length")
    return sizes, scales


def parse_config(
    source: ConfigSource,
    *,
    full_scale: bool = True,
    default_out_dir: str = "results",
) -> Tuple[RunManifest, Scenario]:
    """
    Resolve a campaign configuration into a manifest and a scenario.

    Keys not given fall back to the scenario preset (reduced to desk scale
    when full_scale is False). CUSTOM needs n, p, t, k, sigma2_test and snr_db.

    Args:
        source: Path to a JSON file, or the configuration mapping itself
        full_scale: Keep the preset's full K and trial count
        default_out_dir: Output directory when the config has none

    Returns:
        Tuple of (RunManifest, Scenario)

    Raises:
        ConfigurationError: Unknown or missing keys, invalid values,
            unknown detector or scenario names
    """
    data = load_config_file(source) if isinstance(source, (str, Path)) else dict(source)

    unknown = find_unknown(data.keys(), CONFIG_KEYS + METADATA_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
    if "format_version" in data and str(data["format_version"]) != FORMAT_VERSION:
        raise ConfigurationError(
            f"unsupported format_version {data['format_version']!r} (expected {FORMAT_VERSION})"
        )
    if "scenario" not in data:
        raise ConfigurationError("missing required key: scenario")
    try:
        name = ScenarioName.from_string(str(data["scenario"]))
    except ValueError as e:
        raise ConfigurationError(str(e)) from e

    _validate_values(data)
    detectors = _parse_detector_list(data["detectors"]) if "detectors" in data else DEFAULT_DETECTORS
    base = _base_scenario(name, data, full_scale)

    try:
        n = data.get("n", base.subspace.n if base else None)
        subspace = SubspaceSpec(
            n=n,
            p=data.get("p", base.subspace.p if base else None),
            t=data.get("t", base.subspace.t if base else None),
        )
        sizes, scales = _group_layout(data, base)
        alpha = float(data.get("alpha", base.alpha if base else 0.0))
        decay = float(data.get("decay", base.decay if base else 0.95))
        rebuild_base = base is None or n != base.subspace.n
        noise = build_noise_spec(
            n,
            sizes,
            scales,
            float(data.get("sigma2_test", base.noise.sigma2_test if base else 0.0)),
            alpha=alpha,
            decay=decay,
            r_s_base=base_covariance(n) if rebuild_base else base.noise.r_s_base,
        )
        admm_fields = {
            key: data[key]
            for key in ("epsilon", "rho", "eta", "max_iter", "outer_iters")
            if key in data
        }
        admm = replace(base.admm if base else AdmmParams(), **admm_fields)
        scenario = Scenario(
            name=name,
            subspace=subspace,
            noise=noise,
            snr_db=float(data.get("snr_db", base.snr_db if base else 0.0)),
            admm=admm,
            trials=data.get("trials", base.trials if base else DESK_TRIALS),
            seed=data.get("seed", base.seed if base else DEFAULT_SEED),
            alpha=alpha,
            decay=decay,
        )
    except ValueError as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e

    overrides = {k: v for k, v in data.items() if k not in ("scenario", "format_version")}
    manifest = RunManifest(
        scenario=name.value,
        overrides=overrides,
        detectors=detectors,
        out_dir=data.get("out_dir", default_out_dir),
        seed=scenario.seed,
    )
    return manifest, scenario


def scenario_to_config(
    scenario: Scenario,
    detectors: Sequence[DetectorId],
    out_dir: str,
) -> Dict[str, Any]:
    """
    Fully resolved configuration of a campaign, as written to manifest.json.

    Parsing the result again yields an identical scenario.
    """
    noise = scenario.noise
    return {
        "scenario": scenario.name.value,
        "n": scenario.subspace.n,
        "p": scenario.subspace.p,
        "t": scenario.subspace.t,
        "k": noise.k,
        "group_sizes": list(noise.group_sizes),
        "group_scales": list(noise.group_scales),
        "sigma2_test": noise.sigma2_test,
        "snr_db": scenario.snr_db,
        "epsilon": scenario.admm.epsilon,
        "rho": scenario.admm.rho,
        "eta": scenario.admm.eta,
        "max_iter": scenario.admm.max_iter,
        "outer_iters": scenario.admm.outer_iters,
        "trials": scenario.trials,
        "seed": scenario.seed,
        "detectors": [d.cli_name for d in detectors],
        "alpha": scenario.alpha,
        "decay": scenario.decay,
        "out_dir": out_dir,
        "format_version": FORMAT_VERSION,
    }
