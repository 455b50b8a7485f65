"""Shared data models for crpower.

Deployment, ScenarioConfig and SimMetrics are the shared contract between
the power controller, the simulator and the CLI drivers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

from crpower.channel import ChannelParams, db_to_linear
from crpower.geometry import PolarPoint
from crpower.mobility import MobilityParams

DeliveryModel = Literal["region", "sir"]
RegionCheck = Literal["refreshed", "frozen"]


@dataclass(frozen=True)
class Deployment:
    """Static scene: TV base station, TV receiver, thresholds and CR power range."""

    p_bs: float
    pr_rx: PolarPoint
    tau_p_db: float
    tau_c_db: float
    p_min: float
    p_max: float
    channel: ChannelParams = field(default_factory=ChannelParams)

    def __post_init__(self) -> None:
        if self.p_bs <= 0.0:
            raise ValueError(f"Base-station power must be > 0, got {self.p_bs}")
        if not 0.0 < self.p_min <= self.p_max:
            raise ValueError(
                f"CR power bounds must satisfy 0 < p_min <= p_max, got [{self.p_min}, {self.p_max}]"
            )

    @property
    def tau_p(self) -> float:
        return db_to_linear(self.tau_p_db)

    @property
    def tau_c(self) -> float:
        return db_to_linear(self.tau_c_db)

    @property
    def r1(self) -> float:
        return self.pr_rx.r


@dataclass(frozen=True)
class TrafficParams:
    """Poisson packet stream with exponential lengths."""

    arrival_rate: float = 10.0
    mean_length: float = 100.0

    def __post_init__(self) -> None:
        if self.arrival_rate <= 0.0:
            raise ValueError(f"Arrival rate must be > 0, got {self.arrival_rate}")
        if self.mean_length <= 0.0:
            raise ValueError(f"Mean packet length must be > 0, got {self.mean_length}")


@dataclass(frozen=True)
class FixedPower:
    """Baseline: transmit every packet at one power."""

    watts: float

    def __post_init__(self) -> None:
        if self.watts <= 0.0:
            raise ValueError(f"Fixed power must be > 0, got {self.watts}")

    @property
    def label(self) -> str:
        return "fixed"


@dataclass(frozen=True)
class OptimalControl:
    """Mobile power-control algorithm driven by location updates."""

    @property
    def label(self) -> str:
        return "optimal"


Policy = Union[FixedPower, OptimalControl]


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a single simulation run needs, seed included."""

    deployment: Deployment
    ctx_pos: PolarPoint
    mobility: MobilityParams
    traffic: TrafficParams = field(default_factory=TrafficParams)
    policy: Policy = field(default_factory=OptimalControl)
    update_period: float = 1.0
    shadowing_enabled: bool = False
    sim_time: float = 1000.0
    seed: int = 1
    prediction: bool = False
    region_check: RegionCheck = "refreshed"
    delivery_model: DeliveryModel = "region"
    shadow_corr_s: float = 0.0
    plan_margin_db: float = 0.0
    staleness_guard: bool = True

    def __post_init__(self) -> None:
        if self.update_period <= 0.0:
            raise ValueError(f"Update period must be > 0, got {self.update_period}")
        if self.sim_time <= 0.0:
            raise ValueError(f"Simulation time must be > 0, got {self.sim_time}")
        if self.shadow_corr_s < 0.0:
            raise ValueError(f"Shadowing correlation time must be >= 0, got {self.shadow_corr_s}")
        channel = self.deployment.channel
        if channel.alpha_p > channel.alpha_c:
            raise ValueError(
                f"alpha_p must not exceed alpha_c, got {channel.alpha_p} > {channel.alpha_c}"
            )
        if self.region_check not in ("refreshed", "frozen"):
            raise ValueError(f"Unknown region check {self.region_check!r}")
        if self.delivery_model not in ("region", "sir"):
            raise ValueError(f"Unknown delivery model {self.delivery_model!r}")

    @property
    def sigma_db(self) -> float:
        """Effective shadowing deviation (0 when shadowing is off)."""
        return self.deployment.channel.sigma_db if self.shadowing_enabled else 0.0

    @property
    def guard_band(self) -> float:
        """Margin, meters, the mobile controller keeps inside a cached region.

        Between two updates d22 can grow and d_pc can shrink by up to
        max_speed * update_period each, hence the factor 2.
        """
        if not self.staleness_guard:
            return 0.0
        return 2.0 * self.mobility.max_speed * self.update_period


@dataclass
class SimMetrics:
    """Per-run counters."""

    packets_sent: int = 0
    packets_delivered: int = 0
    pr_violations: int = 0
    packets_silent: int = 0
    r_ct_sum: float = 0.0
    r_ct_count: int = 0

    @property
    def pdr(self) -> float:
        if self.packets_sent == 0:
            return 0.0
        return self.packets_delivered / self.packets_sent

    @property
    def silent_fraction(self) -> float:
        if self.packets_sent == 0:
            return 0.0
        return self.packets_silent / self.packets_sent

    @property
    def mean_r_ct(self) -> float:
        """Mean concurrent-transmission radius over transmitted packets, meters."""
        if self.r_ct_count == 0:
            return 0.0
        return self.r_ct_sum / self.r_ct_count
