"""Event-driven simulation of the CR link under CRx mobility.

Three event streams run on one simpy environment:
- location updates every ``update_period`` seconds (the controller only sees
  the CRx position reported at the last update);
- mobility segment boundaries;
- Poisson packet arrivals.

Updates and segment boundaries are scheduled with urgent priority, so an
update that coincides with an arrival is applied first. Each arrival picks a
power through the configured policy and is then judged against the true CRx
position.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
import simpy
from simpy.events import URGENT

from crpower.channel import sample_shadowing, watts_to_dbw
from crpower.geometry import PolarPoint, relative_angle, separation
from crpower.mobility import (
    MotionSegment,
    TrajectoryCursor,
    generate_trajectory,
    predict_position,
)
from crpower.models import FixedPower, ScenarioConfig, SimMetrics, TrafficParams
from crpower.powerctl import (
    ControllerCache,
    MaxPower,
    Optimal,
    concurrent_radius,
    decide_mobile,
    disk_radii,
    shadow_thresholds,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Packet:
    """One arrival: time in seconds, length in bytes."""

    t: float
    length: float


@dataclass(frozen=True)
class DeliveryOutcome:
    delivered: bool
    pr_violation: bool


class _UrgentTimeout(simpy.events.Event):
    """Timeout processed before normal-priority events at the same instant."""

    def __init__(self, env: simpy.Environment, delay: float) -> None:
        super().__init__(env)
        self._ok = True
        self._value = None
        env.schedule(self, URGENT, max(0.0, delay))


# ---------------------------------------------------------------------------
# Traffic
# ---------------------------------------------------------------------------


def generate_arrivals(
    traffic: TrafficParams, horizon: float, rng: np.random.Generator
) -> list[Packet]:
    """Poisson arrivals on [0, horizon) with exponential packet lengths.

    Gaps are drawn in fixed-size blocks, so a seed always yields the same list.

    Raises:
        ValueError: If horizon <= 0.
    """
    if horizon <= 0.0:
        raise ValueError(f"Horizon must be > 0, got {horizon}")

    mean_gap = 1.0 / traffic.arrival_rate
    block = int(traffic.arrival_rate * horizon * 1.1) + 16
    times: list[np.ndarray] = []
    t0 = 0.0
    while True:
        instants = t0 + np.cumsum(rng.exponential(mean_gap, block))
        inside = instants[instants < horizon]
        times.append(inside)
        if inside.size < block:
            break
        t0 = float(instants[-1])

    arrival_times = np.concatenate(times)
    lengths = rng.exponential(traffic.mean_length, arrival_times.size)
    return [Packet(float(t), float(n)) for t, n in zip(arrival_times, lengths)]


# ---------------------------------------------------------------------------
# Ground truth
# ---------------------------------------------------------------------------


def evaluate_delivery(
    true_crx: PolarPoint,
    p_ct: float | None,
    shadow_draws: tuple[float, float] | None,
    config: ScenarioConfig,
) -> DeliveryOutcome:
    """Judge one transmission attempt at the true CRx position.

    SIR_c > tau_c is tested as d22 < decodable radius and SIR_p > tau_p as
    d12 > protection radius; both are exact rewrites of the SIR inequalities
    and stay defined when the CRx sits on top of the CTx. The "region"
    delivery model also requires the CTx to lie strictly inside the
    concurrent transmission region of p_ct.

    Args:
        true_crx: Actual CRx position at the packet instant.
        p_ct: Transmit power in watts, or None for a silent decision.
        shadow_draws: (X'_p, X'_c) for the two receivers in dB, or None
            without shadowing.
        config: Scenario being simulated.

    Returns:
        DeliveryOutcome. Silent decisions are neither delivered nor violations.
    """
    if p_ct is None:
        return DeliveryOutcome(False, False)

    dep = config.deployment
    ctx = config.ctx_pos
    d12 = separation(ctx, dep.pr_rx)
    d22 = separation(true_crx, ctx)
    d_pc = separation(true_crx, dep.pr_rx)

    if shadow_draws is None:
        protection, decodable = disk_radii(p_ct, true_crx.r, dep)
    else:
        x_p, x_c = shadow_draws
        p_dbw = watts_to_dbw(p_ct)
        r2 = max(true_crx.r, dep.channel.d0)
        protection = shadow_thresholds(p_dbw, r2, x_p, dep)[0]
        decodable = shadow_thresholds(p_dbw, r2, x_c, dep)[1]

    pr_ok = d12 > protection
    delivered = pr_ok and d22 < decodable
    if config.delivery_model == "region":
        delivered = delivered and d22 < d_pc - protection
    return DeliveryOutcome(delivered, not pr_ok)


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------


def scenario_streams(
    seed: int,
) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    """Independent (mobility, traffic, shadowing) generators spawned from one seed."""
    return tuple(  # type: ignore[return-value]
        np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(3)
    )


def scenario_trajectory(config: ScenarioConfig) -> tuple[MotionSegment, ...]:
    """The CRx trajectory a run of ``config`` follows."""
    mobility_rng, _, _ = scenario_streams(config.seed)
    return generate_trajectory(config.mobility, config.sim_time, mobility_rng)


@dataclass
class _Report:
    """What the controller learned at the last location update."""

    at: float
    position: PolarPoint
    motion: MotionSegment


class _Scenario:
    """One run: owns the environment, the random streams and the counters."""

    def __init__(self, config: ScenarioConfig) -> None:
        self.config = config
        mobility_rng, traffic_rng, self.shadow_rng = scenario_streams(config.seed)
        self.trajectory = generate_trajectory(config.mobility, config.sim_time, mobility_rng)
        self.arrivals = generate_arrivals(config.traffic, config.sim_time, traffic_rng)

        self.env = simpy.Environment()
        self.truth = TrajectoryCursor(self.trajectory)
        self.reporter = TrajectoryCursor(self.trajectory)
        self.cache = ControllerCache()
        self.metrics = SimMetrics()
        self.margin = config.plan_margin_db if config.shadowing_enabled else None

        self._next_update = 0
        self._report: _Report | None = None
        self._draws: tuple[float, float] = (0.0, 0.0)
        self._drawn_at = -math.inf

    # -- location updates -------------------------------------------------

    def _apply_due_updates(self, t: float) -> None:
        """Apply every update scheduled at or before t, oldest first."""
        period = self.config.update_period
        while (u := self._next_update * period) <= t and u < self.config.sim_time:
            segment = self.reporter.advance(u)
            origin = segment.cartesian_at(u)
            self._report = _Report(
                at=u,
                position=PolarPoint.from_cartesian(origin),
                motion=MotionSegment(u, u + period, origin, segment.speed, segment.heading),
            )
            self._next_update += 1

    def _location_updates(self) -> Iterator[simpy.events.Event]:
        period = self.config.update_period
        while (u := self._next_update * period) < self.config.sim_time:
            yield _UrgentTimeout(self.env, u - self.env.now)
            self._apply_due_updates(u)

    def _known_position(self, t: float) -> PolarPoint:
        assert self._report is not None
        if self.config.prediction:
            return predict_position(self._report.motion, t - self._report.at)
        return self._report.position

    # -- mobility ---------------------------------------------------------

    def _segment_boundaries(self) -> Iterator[simpy.events.Event]:
        for segment in self.trajectory[:-1]:
            yield _UrgentTimeout(self.env, segment.t_end - self.env.now)
            self.truth.advance(segment.t_end)
            logger.debug("t=%.3f: segment %d begins", segment.t_end, self.truth.index)

    # -- packets ----------------------------------------------------------

    def _shadow_draws(self, t: float) -> tuple[float, float] | None:
        if not self.config.shadowing_enabled:
            return None
        if t - self._drawn_at >= self.config.shadow_corr_s:
            x = sample_shadowing(self.shadow_rng, self.config.sigma_db, size=2)
            self._draws = (float(x[0]), float(x[1]))
            self._drawn_at = t
        return self._draws

    def _choose_power(self, known: PolarPoint) -> tuple[float | None, float]:
        """(power or None when silent, planned r_CT) for the configured policy."""
        config = self.config
        dep = config.deployment
        policy = config.policy
        if isinstance(policy, FixedPower):
            _, decodable = disk_radii(policy.watts, known.r, dep, self.margin)
            if separation(known, config.ctx_pos) > decodable:
                return None, 0.0
            theta_pc = relative_angle(dep.pr_rx.phi, known.phi)
            return policy.watts, concurrent_radius(policy.watts, known.r, theta_pc, dep, self.margin)

        decision = decide_mobile(
            self.cache,
            known,
            config.ctx_pos,
            dep,
            self.margin,
            config.region_check,
            config.guard_band,
        )
        if isinstance(decision, (Optimal, MaxPower)):
            return decision.p_ct, decision.r_ct
        return None, 0.0

    def _handle(self, packet: Packet) -> None:
        self._apply_due_updates(packet.t)
        p_ct, r_ct = self._choose_power(self._known_position(packet.t))
        draws = self._shadow_draws(packet.t)
        outcome = evaluate_delivery(self.truth.position(packet.t), p_ct, draws, self.config)

        metrics = self.metrics
        metrics.packets_sent += 1
        if p_ct is None:
            metrics.packets_silent += 1
            return
        metrics.r_ct_sum += r_ct
        metrics.r_ct_count += 1
        if outcome.delivered:
            metrics.packets_delivered += 1
        if outcome.pr_violation:
            metrics.pr_violations += 1

    def _packets(self) -> Iterator[simpy.events.Event]:
        for packet in self.arrivals:
            yield self.env.timeout(max(0.0, packet.t - self.env.now))
            self._handle(packet)

    def run(self) -> SimMetrics:
        self._apply_due_updates(0.0)
        self.env.process(self._location_updates())
        self.env.process(self._segment_boundaries())
        self.env.process(self._packets())
        self.env.run(until=self.config.sim_time)
        return self.metrics


def run_scenario(config: ScenarioConfig) -> SimMetrics:
    """Simulate one scenario over [0, sim_time].

    Deterministic for a fixed config (seed included): the mobility, traffic
    and shadowing streams are spawned from the seed, so the two policies see
    the same trajectory and arrivals for the same seed.
    """
    metrics = _Scenario(config).run()
    logger.info(
        "%s p=%s speed=%g seed=%d: pdr=%.4f (%d/%d), violations=%d",
        config.policy.label,
        getattr(config.policy, "watts", "-"),
        config.mobility.mean_speed,
        config.seed,
        metrics.pdr,
        metrics.packets_delivered,
        metrics.packets_sent,
        metrics.pr_violations,
    )
    return metrics


def run_scenarios(
    configs: Sequence[ScenarioConfig],
    workers: int = 1,
    on_done: Callable[[], None] | None = None,
) -> list[SimMetrics]:
    """Run independent scenarios, optionally across a process pool.

    Results come back in the order of ``configs`` regardless of completion order.
    """
    if workers <= 1:
        results = []
        for config in configs:
            results.append(run_scenario(config))
            if on_done is not None:
                on_done()
        return results

    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_scenario, config) for config in configs]
        results = []
        for future in futures:
            results.append(future.result())
            if on_done is not None:
                on_done()
        return results


# ---------------------------------------------------------------------------
# Seed aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PdrSummary:
    """Seed-averaged statistics of one (policy, power, speed, sigma) cell."""

    runs: int
    mean_pdr: float
    stderr_pdr: float
    mean_pr_violations: float
    mean_silent_fraction: float


def summarize(metrics: Sequence[SimMetrics]) -> PdrSummary:
    """Mean and standard error of the PDR over seeds (stderr 0 for a single run)."""
    if not metrics:
        raise ValueError("Cannot summarize an empty set of runs")
    pdr = np.array([m.pdr for m in metrics])
    stderr = float(pdr.std(ddof=1) / math.sqrt(pdr.size)) if pdr.size > 1 else 0.0
    return PdrSummary(
        runs=len(metrics),
        mean_pdr=float(pdr.mean()),
        stderr_pdr=stderr,
        mean_pr_violations=float(np.mean([m.pr_violations for m in metrics])),
        mean_silent_fraction=float(np.mean([m.silent_fraction for m in metrics])),
    )
