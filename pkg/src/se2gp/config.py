"""Run configuration files.

A run is described by one JSON file carrying the network shape, the radial
grid, the input field, and optional per-subcommand sections.  Parsing is
strict: unknown keys anywhere are hard errors so that typos never fall back
to silent defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .fields import ModeField, RadialGrid, RadialProfile, synth_field
from .scnn import NetworkConfig


class ConfigError(ValueError):
    """Malformed run configuration; the message names the offending key."""


def _require_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a mapping")
    return value


def _check_keys(mapping: dict, where: str, required: set[str],
                optional: set[str] = frozenset()) -> None:
    unknown = set(mapping) - required - set(optional)
    if unknown:
        raise ConfigError(f"{where}: unknown key '{sorted(unknown)[0]}'")
    missing = required - set(mapping)
    if missing:
        raise ConfigError(f"{where}: missing key '{sorted(missing)[0]}'")


@dataclass(frozen=True)
class KernelSection:
    layer: int
    draws: int
    emit: str  # analytic | empirical | both


@dataclass(frozen=True)
class ConvergeSection:
    widths: tuple[int, ...]
    draws: int
    seeds: tuple[int, ...]
    layer: int
    sigma_mult: float = 5.0
    workers: int | None = None


@dataclass(frozen=True)
class CheckSection:
    rotation_trials: int
    rotation_tol: float
    translation: tuple[float, float]
    translation_tol: float
    oracle_tol: float
    constraint_trials: int
    constraint_tol: float
    moment_draws: int
    moment_sigma_mult: float


@dataclass(frozen=True)
class SampleGpSection:
    channels: int
    count: int = 1


@dataclass(frozen=True)
class FilterCheckSection:
    trials: int
    rho_in: int
    rho_out: int
    profile: RadialProfile
    two_frequency: bool = False
    tolerance: float = 1e-12


@dataclass(frozen=True)
class RunConfig:
    network: NetworkConfig
    input_field: ModeField
    kernel: KernelSection | None = None
    converge: ConvergeSection | None = None
    check: CheckSection | None = None
    sample_gp: SampleGpSection | None = None
    filter_check: FilterCheckSection | None = None


def _parse_grid(spec, where: str) -> RadialGrid:
    spec = _require_mapping(spec, where)
    if "values" in spec:
        _check_keys(spec, where, {"values"})
        try:
            return RadialGrid(np.asarray(spec["values"], dtype=np.float64))
        except ValueError as exc:
            raise ConfigError(f"{where}.values: {exc}") from exc
    _check_keys(spec, where, {"count", "p_max"})
    try:
        return RadialGrid.linear(int(spec["count"]), float(spec["p_max"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_profile(spec, where: str) -> RadialProfile:
    try:
        return RadialProfile.from_dict(_require_mapping(spec, where), where)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _parse_input(spec, grid: RadialGrid, channels: int,
                 where: str = "input") -> ModeField:
    spec = _require_mapping(spec, where)
    _check_keys(spec, where, {"window", "modes"}, {"rep_index"})
    window = spec["window"]
    if not (isinstance(window, list) and len(window) == 2):
        raise ConfigError(f"{where}.window: expected [lo, hi]")
    entries = []
    for i, item in enumerate(spec["modes"]):
        item = _require_mapping(item, f"{where}.modes[{i}]")
        _check_keys(item, f"{where}.modes[{i}]", {"channel", "mode", "profile"})
        profile = _parse_profile(item["profile"], f"{where}.modes[{i}].profile")
        entries.append((int(item["channel"]), int(item["mode"]), profile))
    try:
        return synth_field(entries, grid, rep_index=int(spec.get("rep_index", 0)),
                           window=(int(window[0]), int(window[1])),
                           channels=channels)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_run_config(raw: dict, seed_override: int | None = None) -> RunConfig:
    raw = _require_mapping(raw, "config")
    _check_keys(raw, "config",
                {"depth", "widths", "filter_modes", "sigma_w_sq", "radial_grid",
                 "seed", "input"},
                {"final_linear", "kernel", "converge", "check", "sample_gp",
                 "filter_check"})
    grid = _parse_grid(raw["radial_grid"], "radial_grid")
    input_spec = _require_mapping(raw["input"], "input")
    window = input_spec.get("window")
    if not (isinstance(window, list) and len(window) == 2):
        raise ConfigError("input.window: expected [lo, hi]")
    seed = int(raw["seed"]) if seed_override is None else int(seed_override)
    try:
        network = NetworkConfig(
            depth=raw["depth"],
            widths=tuple(raw["widths"]),
            filter_modes=tuple(raw["filter_modes"]),
            sigma_w_sq=raw["sigma_w_sq"],
            grid=grid,
            seed=seed,
            input_window=(int(window[0]), int(window[1])),
            final_linear=bool(raw.get("final_linear", False)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc
    input_field = _parse_input(input_spec, grid, network.widths[0])
    return RunConfig(
        network=network,
        input_field=input_field,
        kernel=_parse_kernel_section(raw.get("kernel"), network),
        converge=_parse_converge_section(raw.get("converge"), network),
        check=_parse_check_section(raw.get("check")),
        sample_gp=_parse_sample_gp_section(raw.get("sample_gp")),
        filter_check=_parse_filter_check_section(raw.get("filter_check")),
    )


def _parse_kernel_section(spec, network) -> KernelSection | None:
    if spec is None:
        return None
    spec = _require_mapping(spec, "kernel")
    _check_keys(spec, "kernel", {"layer", "draws", "emit"})
    emit = spec["emit"]
    if emit not in ("analytic", "empirical", "both"):
        raise ConfigError("kernel.emit: must be analytic, empirical or both")
    layer = int(spec["layer"])
    max_layer = network.depth + (1 if network.final_linear else 0)
    if not 0 <= layer <= max_layer:
        raise ConfigError(f"kernel.layer: must be in 0..{max_layer}")
    return KernelSection(layer=layer, draws=int(spec["draws"]), emit=emit)


def _parse_converge_section(spec, network) -> ConvergeSection | None:
    if spec is None:
        return None
    spec = _require_mapping(spec, "converge")
    _check_keys(spec, "converge", {"widths", "draws", "seeds", "layer"},
                {"sigma_mult", "workers"})
    layer = int(spec["layer"])
    if not 1 <= layer <= network.depth:
        raise ConfigError(f"converge.layer: must be in 1..{network.depth}")
    widths = tuple(int(w) for w in spec["widths"])
    seeds = tuple(int(s) for s in spec["seeds"])
    if not widths or not seeds:
        raise ConfigError("converge: widths and seeds must be non-empty")
    workers = spec.get("workers")
    return ConvergeSection(widths=widths, draws=int(spec["draws"]), seeds=seeds,
                           layer=layer,
                           sigma_mult=float(spec.get("sigma_mult", 5.0)),
                           workers=None if workers is None else int(workers))


def _parse_check_section(spec) -> CheckSection | None:
    if spec is None:
        return None
    spec = _require_mapping(spec, "check")
    _check_keys(spec, "check",
                {"rotation_trials", "rotation_tol", "translation",
                 "translation_tol", "oracle_tol", "constraint_trials",
                 "constraint_tol", "moment_draws", "moment_sigma_mult"})
    translation = spec["translation"]
    if not (isinstance(translation, list) and len(translation) == 2):
        raise ConfigError("check.translation: expected [tx, ty]")
    return CheckSection(
        rotation_trials=int(spec["rotation_trials"]),
        rotation_tol=float(spec["rotation_tol"]),
        translation=(float(translation[0]), float(translation[1])),
        translation_tol=float(spec["translation_tol"]),
        oracle_tol=float(spec["oracle_tol"]),
        constraint_trials=int(spec["constraint_trials"]),
        constraint_tol=float(spec["constraint_tol"]),
        moment_draws=int(spec["moment_draws"]),
        moment_sigma_mult=float(spec["moment_sigma_mult"]),
    )


def _parse_sample_gp_section(spec) -> SampleGpSection | None:
    if spec is None:
        return None
    spec = _require_mapping(spec, "sample_gp")
    _check_keys(spec, "sample_gp", {"channels"}, {"count"})
    return SampleGpSection(channels=int(spec["channels"]),
                           count=int(spec.get("count", 1)))


def _parse_filter_check_section(spec) -> FilterCheckSection | None:
    if spec is None:
        return None
    spec = _require_mapping(spec, "filter_check")
    _check_keys(spec, "filter_check", {"trials", "rho_in", "rho_out", "profile"},
                {"two_frequency", "tolerance"})
    return FilterCheckSection(
        trials=int(spec["trials"]),
        rho_in=int(spec["rho_in"]),
        rho_out=int(spec["rho_out"]),
        profile=_parse_profile(spec["profile"], "filter_check.profile"),
        two_frequency=bool(spec.get("two_frequency", False)),
        tolerance=float(spec.get("tolerance", 1e-12)),
    )


def load_run_config(path, seed_override: int | None = None) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    return parse_run_config(raw, seed_override=seed_override)
