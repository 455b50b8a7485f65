"""Configuration ingestion for crpower.

Config files are flat ``key = value`` lines with ``#`` comments. Keys carry
their unit as a suffix (_km, _m, _w, _kw, _db, _deg, _mps, _s) and values are
converted to meters, radians and watts here, at ingestion. Defaults reproduce
the simulation parameters of the reference deployment (README lists them).
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from crpower.channel import ChannelParams
from crpower.geometry import PolarPoint
from crpower.mobility import MobilityParams
from crpower.models import (
    Deployment,
    FixedPower,
    OptimalControl,
    ScenarioConfig,
    TrafficParams,
)


class ConfigError(ValueError):
    """Invalid, unparsable or inconsistent configuration."""


# key -> default, in file units
DEFAULTS: dict[str, str] = {
    # scene
    "p_bs_kw": "100",
    "p_min_w": "1",
    "p_max_w": "100",
    "pr_r_km": "50",
    "pr_phi_deg": "0",
    "ctx_r_km": "50",
    "ctx_phi_deg": "60",
    "tau_p_db": "30",
    "tau_c_db": "3",
    # channel
    "alpha_p": "3",
    "alpha_c": "3",
    "g_t": "1",
    "g_r": "1",
    "h_t_m": "1",
    "h_r_m": "1",
    "sigma_db": "0",
    "d0_m": "1",
    # mobility
    "crx_r_km": "50",
    "crx_phi_deg": "60",
    "speed_mps": "30",
    "speed_jitter": "0",
    "epoch_max_s": "30",
    "pause_mean_s": "5",
    "pause_dist": "exponential",
    # traffic
    "arrival_rate_pps": "10",
    "mean_length_bytes": "100",
    # run
    "policy": "optimal",
    "p_fixed_w": "60",
    "update_period_s": "1",
    "shadowing": "false",
    "sim_time_s": "1000",
    "seed": "1",
    "prediction": "false",
    "region_check": "refreshed",
    "delivery_model": "region",
    "shadow_corr_s": "0",
    "plan_margin_db": "0",
    "staleness_guard": "true",
    # analytical grids
    "r2_min_km": "40",
    "r2_max_km": "60",
    "r2_step_km": "0.1",
    "theta_min_deg": "0",
    "theta_max_deg": "180",
    "theta_step_deg": "1",
    "slice_theta_deg": "60",
    "sweep_r2_km": "47,50,54",
    "sweep_theta_deg": "60",
    "p_grid_min_w": "1",
    "p_grid_max_w": "100",
    "p_grid_step_w": "1",
    # simulation sweeps
    "speeds_mps": "10,20,30,40",
    "fixed_powers_w": "10,20,30,40,50,60,70,80,90,100",
    "seeds": "20",
    "shadow_alpha_p": "3",
    "shadow_alpha_c": "4",
    "shadow_sigma_db": "6",
    "shadow_speeds_mps": "30",
    "trajectory_step_s": "1",
}

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def _parse_float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: expected a finite number, got {raw!r}")
    return value


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _parse_choice(key: str, raw: str, choices: Iterable[str]) -> str:
    options = tuple(choices)
    if raw not in options:
        raise ConfigError(f"{key}: expected one of {', '.join(options)}, got {raw!r}")
    return raw


def _parse_float_list(key: str, raw: str) -> tuple[float, ...]:
    items = [item.strip() for item in raw.split(",") if item.strip()]
    if not items:
        raise ConfigError(f"{key}: expected a comma-separated list of numbers")
    return tuple(_parse_float(key, item) for item in items)


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines into raw strings.

    Raises:
        ConfigError: On a line without ``=`` or with an empty key.
    """
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        values[key] = value.strip()
    return values


def parse_override(item: str) -> tuple[str, str]:
    """Split one ``--set key=value`` argument."""
    key, sep, value = item.partition("=")
    if not sep or not key.strip():
        raise ConfigError(f"--set expects key=value, got {item!r}")
    return key.strip(), value.strip()


def grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive evenly spaced grid; the step is rounded to fit the span."""
    if step <= 0.0:
        raise ConfigError(f"Grid step must be > 0, got {step}")
    if stop < start:
        raise ConfigError(f"Grid end {stop} is below its start {start}")
    count = int(round((stop - start) / step)) + 1
    return np.linspace(start, stop, count)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration: one base scenario plus sweep grids.

    Grid values stay in file units (km, degrees, watts, m/s).
    """

    scenario: ScenarioConfig
    values: Mapping[str, str]
    r2_km: np.ndarray
    theta_deg: np.ndarray
    slice_theta_deg: float
    sweep_r2_km: tuple[float, ...]
    sweep_theta_deg: float
    p_grid_w: np.ndarray
    speeds_mps: tuple[float, ...]
    fixed_powers_w: tuple[float, ...]
    seeds: int
    shadow_alpha_p: float
    shadow_alpha_c: float
    shadow_sigma_db: float
    shadow_speeds_mps: tuple[float, ...]
    trajectory_step_s: float

    def echo(self) -> Iterator[tuple[str, str]]:
        """(key, value) pairs of the resolved configuration, sorted by key."""
        yield from sorted(self.values.items())


def _build_scenario(values: Mapping[str, str]) -> ScenarioConfig:
    def num(key: str) -> float:
        return _parse_float(key, values[key])

    channel = ChannelParams(
        alpha_p=num("alpha_p"),
        alpha_c=num("alpha_c"),
        g_t=num("g_t"),
        g_r=num("g_r"),
        h_t=num("h_t_m"),
        h_r=num("h_r_m"),
        sigma_db=num("sigma_db"),
        d0=num("d0_m"),
    )
    deployment = Deployment(
        p_bs=num("p_bs_kw") * 1e3,
        pr_rx=PolarPoint.from_degrees(num("pr_r_km") * 1e3, num("pr_phi_deg")),
        tau_p_db=num("tau_p_db"),
        tau_c_db=num("tau_c_db"),
        p_min=num("p_min_w"),
        p_max=num("p_max_w"),
        channel=channel,
    )
    mobility = MobilityParams(
        mean_speed=num("speed_mps"),
        start=PolarPoint.from_degrees(num("crx_r_km") * 1e3, num("crx_phi_deg")),
        epoch_max=num("epoch_max_s"),
        pause_mean=num("pause_mean_s"),
        pause_dist=_parse_choice("pause_dist", values["pause_dist"], ("exponential", "constant")),
        speed_jitter=num("speed_jitter"),
    )
    traffic = TrafficParams(
        arrival_rate=num("arrival_rate_pps"),
        mean_length=num("mean_length_bytes"),
    )
    policy_name = _parse_choice("policy", values["policy"], ("optimal", "fixed"))
    policy = FixedPower(num("p_fixed_w")) if policy_name == "fixed" else OptimalControl()

    return ScenarioConfig(
        deployment=deployment,
        ctx_pos=PolarPoint.from_degrees(num("ctx_r_km") * 1e3, num("ctx_phi_deg")),
        mobility=mobility,
        traffic=traffic,
        policy=policy,
        update_period=num("update_period_s"),
        shadowing_enabled=_parse_bool("shadowing", values["shadowing"]),
        sim_time=num("sim_time_s"),
        seed=_parse_int("seed", values["seed"]),
        prediction=_parse_bool("prediction", values["prediction"]),
        region_check=_parse_choice(  # type: ignore[arg-type]
            "region_check", values["region_check"], ("refreshed", "frozen")
        ),
        delivery_model=_parse_choice(  # type: ignore[arg-type]
            "delivery_model", values["delivery_model"], ("region", "sir")
        ),
        shadow_corr_s=num("shadow_corr_s"),
        plan_margin_db=num("plan_margin_db"),
        staleness_guard=_parse_bool("staleness_guard", values["staleness_guard"]),
    )


def resolve(values: Mapping[str, str]) -> RunConfig:
    """Build a RunConfig from a complete key -> raw value mapping.

    Raises:
        ConfigError: On any unparsable value or inconsistent combination.
    """
    def num(key: str) -> float:
        return _parse_float(key, values[key])

    try:
        scenario = _build_scenario(values)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    seeds = _parse_int("seeds", values["seeds"])
    if seeds < 0:
        raise ConfigError(f"seeds must be >= 0, got {seeds}")
    if seeds == 0:
        warnings.warn("seeds = 0: simulation sweeps will produce no runs", stacklevel=2)
    if num("shadow_alpha_p") > num("shadow_alpha_c"):
        raise ConfigError("shadow_alpha_p must not exceed shadow_alpha_c")
    if num("trajectory_step_s") <= 0.0:
        raise ConfigError("trajectory_step_s must be > 0")

    return RunConfig(
        scenario=scenario,
        values=dict(values),
        r2_km=grid(num("r2_min_km"), num("r2_max_km"), num("r2_step_km")),
        theta_deg=grid(num("theta_min_deg"), num("theta_max_deg"), num("theta_step_deg")),
        slice_theta_deg=num("slice_theta_deg"),
        sweep_r2_km=_parse_float_list("sweep_r2_km", values["sweep_r2_km"]),
        sweep_theta_deg=num("sweep_theta_deg"),
        p_grid_w=grid(num("p_grid_min_w"), num("p_grid_max_w"), num("p_grid_step_w")),
        speeds_mps=_parse_float_list("speeds_mps", values["speeds_mps"]),
        fixed_powers_w=_parse_float_list("fixed_powers_w", values["fixed_powers_w"]),
        seeds=seeds,
        shadow_alpha_p=num("shadow_alpha_p"),
        shadow_alpha_c=num("shadow_alpha_c"),
        shadow_sigma_db=num("shadow_sigma_db"),
        shadow_speeds_mps=_parse_float_list("shadow_speeds_mps", values["shadow_speeds_mps"]),
        trajectory_step_s=num("trajectory_step_s"),
    )


def load_config(
    path: str | Path | None = None,
    overrides: Iterable[tuple[str, str]] = (),
    seed: int | None = None,
) -> RunConfig:
    """Read a config file (optional), apply overrides, and resolve.

    Unknown keys in the file are ignored with a warning; unknown override
    keys are an error.

    Args:
        path: Config file, or None to start from the defaults.
        overrides: (key, value) pairs applied after the file.
        seed: Replaces the ``seed`` key when given.

    Raises:
        ConfigError: On unreadable files, bad values, or unknown override keys.
    """
    values = dict(DEFAULTS)
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"Cannot read config {path}: {exc}") from exc
        for key, value in parse_config_text(text, str(path)).items():
            if key not in DEFAULTS:
                warnings.warn(f"{path}: unknown key {key!r} ignored", stacklevel=2)
                continue
            values[key] = value

    for key, value in overrides:
        if key not in DEFAULTS:
            raise ConfigError(f"Unknown configuration key {key!r}")
        values[key] = value
    if seed is not None:
        values["seed"] = str(seed)

    return resolve(values)
