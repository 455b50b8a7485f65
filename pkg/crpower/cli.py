"""Command-line drivers for crpower.

Subcommands:
    surface       optimal power over the (r2, theta_pc) grid
    slice         one theta_pc slice of the surface, with CRx reachability
    radius-sweep  concurrent transmission radius vs. transmit power
    pdr           packet delivery ratio sweep, fixed powers vs. optimal control
    pdr-shadow    the same sweep under log-normal shadowing
    run           one simulation with the base configuration

Usage:
    crpower surface --config configs/table1.conf --out out/surface.csv
    crpower pdr --config configs/table1.conf --out out/pdr.csv --workers 4
    crpower run --set speed_mps=10 --trajectory-out out/track.csv

Every CSV starts with ``# key=value`` lines echoing the resolved configuration.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import io
import itertools
import logging
import math
import sys
from collections.abc import Iterator, Sequence
from pathlib import Path
from typing import IO, Any

from rich.console import Console
from rich.logging import RichHandler
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table

from crpower.config import ConfigError, RunConfig, load_config, parse_override
from crpower.geometry import PolarPoint, separation
from crpower.mobility import write_trajectory_csv
from crpower.models import FixedPower, OptimalControl, Policy, ScenarioConfig, SimMetrics
from crpower.powerctl import (
    concurrent_radius,
    f_extreme,
    feasibility,
    g_extreme,
    max_decodable_radius,
    optimal_power,
    receiver_separation,
    unclamped_optimal_power,
)
from crpower.sim import run_scenarios, scenario_trajectory, summarize

logger = logging.getLogger(__name__)

_stderr = Console(stderr=True)

SURFACE_COLUMNS = (
    "r2_km",
    "theta_deg",
    "d_pc_km",
    "f_km",
    "g_km",
    "feasibility",
    "p_star_unclamped_w",
    "p_star_w",
    "r_max_km",
)
SLICE_COLUMNS = SURFACE_COLUMNS + ("d22_km", "feasible")
RADIUS_COLUMNS = ("r2_km", "theta_deg", "p_ct_w", "r_ct_km", "p_star_w")
RUN_COLUMNS = (
    "policy",
    "p_fixed_w",
    "speed_mps",
    "seed",
    "sigma_db",
    "packets_sent",
    "packets_delivered",
    "pdr",
    "pr_violations",
    "silent_fraction",
    "mean_r_ct_m",
)
SUMMARY_COLUMNS = (
    "policy",
    "p_fixed_w",
    "speed_mps",
    "sigma_db",
    "runs",
    "mean_pdr",
    "stderr_pdr",
    "mean_pr_violations",
    "mean_silent_fraction",
)


def _num(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------


@contextlib.contextmanager
def _open_output(path: Path | None) -> Iterator[IO[str]]:
    """Stream for one output; a file is only created once the block succeeds."""
    if path is None:
        yield sys.stdout
        return
    buffer = io.StringIO()
    yield buffer
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as stream:
        stream.write(buffer.getvalue())
    logger.info("Wrote %s", path)


def _csv_writer(stream: IO[str], cfg: RunConfig, columns: Sequence[str]) -> Any:
    for key, value in cfg.echo():
        stream.write(f"# {key}={value}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    return writer


def _progress(total: int, description: str) -> Progress:
    return Progress(
        TextColumn("[bold]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        console=_stderr,
        transient=True,
        disable=total == 0 or not logger.isEnabledFor(logging.INFO),
    )


# ---------------------------------------------------------------------------
# Analytical drivers
# ---------------------------------------------------------------------------


def _power_row(cfg: RunConfig, r2_km: float, theta_deg: float) -> list[str]:
    dep = cfg.scenario.deployment
    r2 = r2_km * 1e3
    theta = math.radians(theta_deg)
    d_pc = receiver_separation(r2, theta, dep)
    case = feasibility(r2, theta, dep)
    if case == "forbidden":
        unclamped = clamped = ""
    else:
        unclamped = _num(unclamped_optimal_power(r2, theta, dep))
        clamped = _num(dep.p_max if case == "max_power" else optimal_power(r2, theta, dep))
    return [
        _num(r2_km),
        _num(theta_deg),
        _num(d_pc / 1e3),
        _num(f_extreme(r2, theta, dep) / 1e3),
        _num(g_extreme(r2, theta, dep) / 1e3),
        case,
        unclamped,
        clamped,
        _num(max_decodable_radius(r2, dep) / 1e3),
    ]


def cmd_surface(cfg: RunConfig, stream: IO[str]) -> int:
    """Optimal-power grid over (r2, theta_pc). Returns the number of rows."""
    writer = _csv_writer(stream, cfg, SURFACE_COLUMNS)
    rows = 0
    for r2_km in cfg.r2_km:
        for theta_deg in cfg.theta_deg:
            writer.writerow(_power_row(cfg, float(r2_km), float(theta_deg)))
            rows += 1
    return rows


def cmd_slice(cfg: RunConfig, stream: IO[str]) -> int:
    """The slice_theta_deg column of the surface plus CRx reachability from the CTx.

    The CRx sits at distance r2 and relative angle theta_pc from the TV
    receiver; ``feasible`` is 1 when the class is not forbidden and the CTx
    lies within r_max of the CRx.
    """
    writer = _csv_writer(stream, cfg, SLICE_COLUMNS)
    dep = cfg.scenario.deployment
    theta_deg = cfg.slice_theta_deg
    rows = 0
    for r2_km in cfg.r2_km:
        row = _power_row(cfg, float(r2_km), theta_deg)
        crx = PolarPoint(float(r2_km) * 1e3, dep.pr_rx.phi + math.radians(theta_deg))
        d22 = separation(crx, cfg.scenario.ctx_pos)
        reachable = row[5] != "forbidden" and d22 <= max_decodable_radius(crx.r, dep)
        writer.writerow(row + [_num(d22 / 1e3), "1" if reachable else "0"])
        rows += 1
    return rows


def cmd_radius_sweep(cfg: RunConfig, stream: IO[str]) -> int:
    """Concurrent transmission radius over the power grid for each sweep_r2_km."""
    writer = _csv_writer(stream, cfg, RADIUS_COLUMNS)
    dep = cfg.scenario.deployment
    theta = math.radians(cfg.sweep_theta_deg)
    rows = 0
    for r2_km in cfg.sweep_r2_km:
        r2 = r2_km * 1e3
        case = feasibility(r2, theta, dep)
        if case == "forbidden":
            p_star = ""
        else:
            p_star = _num(dep.p_max if case == "max_power" else optimal_power(r2, theta, dep))
        for p_ct in cfg.p_grid_w:
            r_ct = concurrent_radius(float(p_ct), r2, theta, dep)
            writer.writerow(
                [_num(r2_km), _num(cfg.sweep_theta_deg), _num(p_ct), _num(r_ct / 1e3), p_star]
            )
            rows += 1
    return rows


# ---------------------------------------------------------------------------
# Simulation drivers
# ---------------------------------------------------------------------------


def _shadow_base(cfg: RunConfig) -> ScenarioConfig:
    base = cfg.scenario
    dep = base.deployment
    channel = dataclasses.replace(
        dep.channel,
        alpha_p=cfg.shadow_alpha_p,
        alpha_c=cfg.shadow_alpha_c,
        sigma_db=cfg.shadow_sigma_db,
    )
    return dataclasses.replace(
        base,
        deployment=dataclasses.replace(dep, channel=channel),
        shadowing_enabled=True,
    )


def sweep_scenarios(
    base: ScenarioConfig,
    fixed_powers: Sequence[float],
    speeds: Sequence[float],
    seeds: int,
) -> list[ScenarioConfig]:
    """Scenarios of a PDR sweep, sorted by (policy, power, speed, seed).

    Seeds run from base.seed to base.seed + seeds - 1.

    Raises:
        ConfigError: If a swept value is invalid for the scenario.
    """
    policies: list[Policy] = [FixedPower(p) for p in sorted(fixed_powers)]
    policies.append(OptimalControl())
    scenarios = []
    try:
        for policy, speed, k in itertools.product(policies, sorted(speeds), range(seeds)):
            scenarios.append(
                dataclasses.replace(
                    base,
                    policy=policy,
                    mobility=dataclasses.replace(base.mobility, mean_speed=speed),
                    seed=base.seed + k,
                )
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return scenarios


def _run_row(config: ScenarioConfig, metrics: SimMetrics) -> list[str]:
    policy = config.policy
    return [
        policy.label,
        _num(policy.watts) if isinstance(policy, FixedPower) else "",
        _num(config.mobility.mean_speed),
        str(config.seed),
        _num(config.sigma_db),
        str(metrics.packets_sent),
        str(metrics.packets_delivered),
        _num(metrics.pdr),
        str(metrics.pr_violations),
        _num(metrics.silent_fraction),
        _num(metrics.mean_r_ct),
    ]


def _cell_key(config: ScenarioConfig) -> tuple[str, float, float]:
    watts = config.policy.watts if isinstance(config.policy, FixedPower) else 0.0
    return config.policy.label, watts, config.mobility.mean_speed


def _summary_rows(
    scenarios: Sequence[ScenarioConfig], results: Sequence[SimMetrics]
) -> list[list[str]]:
    rows = []
    pairs = list(zip(scenarios, results))
    # seeds vary fastest, so each cell is one consecutive run of pairs
    for _, cell in itertools.groupby(pairs, key=lambda pair: _cell_key(pair[0])):
        cell = list(cell)
        config = cell[0][0]
        stats = summarize([metrics for _, metrics in cell])
        rows.append(
            [
                config.policy.label,
                _num(config.policy.watts) if isinstance(config.policy, FixedPower) else "",
                _num(config.mobility.mean_speed),
                _num(config.sigma_db),
                str(stats.runs),
                _num(stats.mean_pdr),
                _num(stats.stderr_pdr),
                _num(stats.mean_pr_violations),
                _num(stats.mean_silent_fraction),
            ]
        )
    return rows


def _print_summary(rows: Sequence[Sequence[str]]) -> None:
    table = Table(title="PDR summary")
    for column in ("policy", "p_fixed_w", "speed_mps", "runs", "mean_pdr", "stderr_pdr"):
        table.add_column(column, justify="left" if column == "policy" else "right")
    for row in rows:
        table.add_row(row[0], row[1], row[2], row[4], f"{float(row[5]):.4f}", f"{float(row[6]):.4f}")
    _stderr.print(table)


def _pdr_sweep(
    cfg: RunConfig,
    base: ScenarioConfig,
    speeds: Sequence[float],
    stream: IO[str],
    summary_path: Path | None,
    workers: int,
    description: str,
) -> int:
    scenarios = sweep_scenarios(base, cfg.fixed_powers_w, speeds, cfg.seeds)
    logger.info("Running %d scenarios on %d worker(s)", len(scenarios), max(1, workers))

    with _progress(len(scenarios), description) as progress:
        task = progress.add_task(description, total=len(scenarios))
        results = run_scenarios(
            scenarios, workers=workers, on_done=lambda: progress.advance(task)
        )

    writer = _csv_writer(stream, cfg, RUN_COLUMNS)
    for config, metrics in zip(scenarios, results):
        writer.writerow(_run_row(config, metrics))

    summary = _summary_rows(scenarios, results)
    if summary_path is not None:
        with _open_output(summary_path) as out:
            summary_writer = _csv_writer(out, cfg, SUMMARY_COLUMNS)
            summary_writer.writerows(summary)
    elif summary and logger.isEnabledFor(logging.INFO):
        _print_summary(summary)
    return len(scenarios)


def cmd_pdr(
    cfg: RunConfig, stream: IO[str], summary_path: Path | None = None, workers: int = 1
) -> int:
    """PDR sweep without shadowing: fixed powers and optimal control over speeds and seeds."""
    base = dataclasses.replace(cfg.scenario, shadowing_enabled=False)
    return _pdr_sweep(cfg, base, cfg.speeds_mps, stream, summary_path, workers, "pdr")


def cmd_pdr_shadow(
    cfg: RunConfig, stream: IO[str], summary_path: Path | None = None, workers: int = 1
) -> int:
    """PDR sweep under shadowing with the shadow_* exponents and deviation."""
    try:
        base = _shadow_base(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return _pdr_sweep(
        cfg, base, cfg.shadow_speeds_mps, stream, summary_path, workers, "pdr-shadow"
    )


def cmd_run(cfg: RunConfig, stream: IO[str], trajectory_path: Path | None = None) -> int:
    """Simulate the base scenario once and write its metrics row."""
    config = cfg.scenario
    (metrics,) = run_scenarios([config])
    writer = _csv_writer(stream, cfg, RUN_COLUMNS)
    writer.writerow(_run_row(config, metrics))
    if trajectory_path is not None:
        with _open_output(trajectory_path) as out:
            rows = write_trajectory_csv(scenario_trajectory(config), out, cfg.trajectory_step_s)
        logger.debug("Trajectory: %d samples", rows)
    return 1


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _setup_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(console=_stderr, show_path=False))
    root.setLevel(level)
    logging.captureWarnings(True)


def _summary_path(out: Path | None) -> Path | None:
    if out is None:
        return None
    return out.with_name(f"{out.stem}_summary.csv")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Config file (default: built-in defaults)")
    common.add_argument("--seed", type=int, default=None, help="Override the base seed")
    common.add_argument("--out", type=Path, default=None, help="Output CSV (default: stdout)")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override one config key (repeatable)",
    )
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="crpower",
        description="Cognitive-radio power control: analytical tables and PDR simulations",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to run")

    subparsers.add_parser("surface", parents=[common], help="Optimal power over (r2, theta_pc)")
    subparsers.add_parser("slice", parents=[common], help="Optimal power at one theta_pc")
    subparsers.add_parser(
        "radius-sweep", parents=[common], help="Concurrent transmission radius vs. power"
    )
    for name, text in (("pdr", "PDR sweep"), ("pdr-shadow", "PDR sweep under shadowing")):
        sweep = subparsers.add_parser(name, parents=[common], help=text)
        sweep.add_argument(
            "--workers", type=int, default=1, help="Worker processes (default: 1)"
        )
    run = subparsers.add_parser("run", parents=[common], help="One simulation run")
    run.add_argument(
        "--trajectory-out", type=Path, default=None, help="Also write the sampled CRx trajectory"
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """CLI entry point. Returns 0 on success, 2 on config errors, 1 otherwise."""
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.verbose, args.quiet)

    try:
        overrides = [parse_override(item) for item in args.overrides]
        cfg = load_config(args.config, overrides, seed=args.seed)
        with _open_output(args.out) as stream:
            if args.command == "surface":
                rows = cmd_surface(cfg, stream)
            elif args.command == "slice":
                rows = cmd_slice(cfg, stream)
            elif args.command == "radius-sweep":
                rows = cmd_radius_sweep(cfg, stream)
            elif args.command == "pdr":
                rows = cmd_pdr(cfg, stream, _summary_path(args.out), args.workers)
            elif args.command == "pdr-shadow":
                rows = cmd_pdr_shadow(cfg, stream, _summary_path(args.out), args.workers)
            else:
                rows = cmd_run(cfg, stream, args.trajectory_out)
    except ConfigError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, ArithmeticError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return 1

    logger.info("%s: %d rows", args.command, rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
