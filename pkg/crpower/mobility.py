"""CRx motion: epoch-based random-direction generation and trajectory evaluation.

The CRx alternates between straight-line moves and pauses. A move lasts
U(0, epoch_max) seconds along a heading drawn from U(0, 2*pi); a pause lasts
pause_mean seconds on average. Motion is on the unbounded plane around the
base station.

Trajectories are tuples of MotionSegment covering [0, horizon] without gaps;
each segment starts where the previous one ended.
"""

from __future__ import annotations

import bisect
import csv
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import IO, Literal

import numpy as np

from crpower.geometry import CartesianPoint, PolarPoint

logger = logging.getLogger(__name__)

PauseDist = Literal["exponential", "constant"]


@dataclass(frozen=True)
class MotionSegment:
    """Constant-velocity piece of a trajectory (speed 0 during pauses)."""

    t_start: float
    t_end: float
    origin: CartesianPoint
    speed: float
    heading: float

    def __post_init__(self) -> None:
        if not self.t_end > self.t_start:
            raise ValueError(
                f"Segment must have positive duration, got [{self.t_start}, {self.t_end}]"
            )
        if self.speed < 0.0:
            raise ValueError(f"Speed must be >= 0, got {self.speed}")

    def cartesian_at(self, t: float) -> CartesianPoint:
        """Position after moving from origin for t - t_start seconds (no span check)."""
        travelled = self.speed * (t - self.t_start)
        return CartesianPoint(
            self.origin.x + travelled * math.cos(self.heading),
            self.origin.y + travelled * math.sin(self.heading),
        )

    @property
    def end_point(self) -> CartesianPoint:
        return self.cartesian_at(self.t_end)

    def covers(self, t: float) -> bool:
        return self.t_start <= t <= self.t_end


@dataclass(frozen=True)
class MobilityParams:
    """Parameters of the CRx motion model.

    Args:
        mean_speed: Speed during moves, m/s.
        start: Starting position.
        epoch_max: Move durations are U(0, epoch_max) seconds.
        pause_mean: Mean pause duration, seconds (0 disables pauses).
        pause_dist: "exponential" or "constant" pause durations.
        speed_jitter: Per-move speed is U(s*(1-j), s*(1+j)); 0 keeps it constant.
    """

    mean_speed: float
    start: PolarPoint
    epoch_max: float = 30.0
    pause_mean: float = 5.0
    pause_dist: PauseDist = "exponential"
    speed_jitter: float = 0.0

    def __post_init__(self) -> None:
        if self.mean_speed < 0.0:
            raise ValueError(f"Mean speed must be >= 0, got {self.mean_speed}")
        if self.epoch_max <= 0.0:
            raise ValueError(f"Epoch bound must be > 0, got {self.epoch_max}")
        if self.pause_mean < 0.0:
            raise ValueError(f"Mean pause must be >= 0, got {self.pause_mean}")
        if self.pause_dist not in ("exponential", "constant"):
            raise ValueError(f"Unknown pause distribution {self.pause_dist!r}")
        if not 0.0 <= self.speed_jitter <= 1.0:
            raise ValueError(f"Speed jitter must be in [0, 1], got {self.speed_jitter}")

    @property
    def max_speed(self) -> float:
        """Upper bound on the speed of any move, m/s."""
        return self.mean_speed * (1.0 + self.speed_jitter)


def _draw_pause(params: MobilityParams, rng: np.random.Generator) -> float:
    if params.pause_mean == 0.0:
        return 0.0
    if params.pause_dist == "constant":
        return params.pause_mean
    return float(rng.exponential(params.pause_mean))


def _draw_speed(params: MobilityParams, rng: np.random.Generator) -> float:
    if params.speed_jitter == 0.0:
        return params.mean_speed
    low = params.mean_speed * (1.0 - params.speed_jitter)
    high = params.mean_speed * (1.0 + params.speed_jitter)
    return float(rng.uniform(low, high))


def generate_trajectory(
    params: MobilityParams, horizon: float, rng: np.random.Generator
) -> tuple[MotionSegment, ...]:
    """Generate alternating move/pause segments covering [0, horizon].

    The last segment is truncated at the horizon. Zero-length draws are
    skipped, so every segment has positive duration.

    Args:
        params: Motion model parameters.
        horizon: End of the covered span, seconds (> 0).
        rng: Caller-owned generator; mutated.

    Returns:
        Tuple of contiguous segments starting at t = 0.

    Raises:
        ValueError: If horizon <= 0.
    """
    if horizon <= 0.0:
        raise ValueError(f"Horizon must be > 0, got {horizon}")

    segments: list[MotionSegment] = []
    origin = params.start.to_cartesian()
    t = 0.0
    heading = 0.0
    moving = True

    while t < horizon:
        if moving:
            duration = float(rng.uniform(0.0, params.epoch_max))
            heading = float(rng.uniform(0.0, 2.0 * math.pi))
            speed = _draw_speed(params, rng)
        else:
            duration = _draw_pause(params, rng)
            speed = 0.0
        moving = not moving
        if duration <= 0.0:
            continue

        t_end = min(t + duration, horizon)
        if t_end <= t:
            break
        segment = MotionSegment(t, t_end, origin, speed, heading)
        segments.append(segment)
        origin = segment.end_point
        t = t_end

    logger.debug("Generated %d segments over %.1f s", len(segments), horizon)
    return tuple(segments)


def segment_index(trajectory: Sequence[MotionSegment], t: float) -> int:
    """Index of the segment covering t (the later one at a shared boundary).

    Raises:
        ValueError: If t lies outside the trajectory span.
    """
    if not trajectory:
        raise ValueError("Trajectory is empty")
    if t < trajectory[0].t_start or t > trajectory[-1].t_end:
        raise ValueError(
            f"t={t} outside trajectory span [{trajectory[0].t_start}, {trajectory[-1].t_end}]"
        )
    index = bisect.bisect_right(trajectory, t, key=lambda seg: seg.t_start) - 1
    return max(0, index)


def position_at(trajectory: Sequence[MotionSegment], t: float) -> PolarPoint:
    """Polar position of the CRx at time t.

    Within a segment this is r2(t) = |origin + s*(t - t_start)*(cos g, sin g)|
    with a four-quadrant arctangent for the azimuth.

    Raises:
        ValueError: If t lies outside the trajectory span.
    """
    segment = trajectory[segment_index(trajectory, t)]
    return PolarPoint.from_cartesian(segment.cartesian_at(t))


def predict_position(current: MotionSegment, dt: float) -> PolarPoint:
    """Extrapolate a segment dt seconds past its start, assuming the pattern holds.

    The segment's end time is ignored: the prediction keeps moving at the
    reported speed and heading.
    """
    if dt < 0.0:
        raise ValueError(f"Prediction horizon must be >= 0, got {dt}")
    return PolarPoint.from_cartesian(current.cartesian_at(current.t_start + dt))


class TrajectoryCursor:
    """Sequential reader over a trajectory for monotonically increasing times."""

    def __init__(self, trajectory: Sequence[MotionSegment]) -> None:
        if not trajectory:
            raise ValueError("Trajectory is empty")
        self._trajectory = trajectory
        self._index = 0

    @property
    def index(self) -> int:
        return self._index

    @property
    def segment(self) -> MotionSegment:
        return self._trajectory[self._index]

    def advance(self, t: float) -> MotionSegment:
        """Move to the segment covering t and return it."""
        last = len(self._trajectory) - 1
        while self._index < last and t >= self._trajectory[self._index].t_end:
            self._index += 1
        return self._trajectory[self._index]

    def position(self, t: float) -> PolarPoint:
        return PolarPoint.from_cartesian(self.advance(t).cartesian_at(t))


# ---------------------------------------------------------------------------
# Trajectory dump
# ---------------------------------------------------------------------------

TRAJECTORY_COLUMNS = ("t_s", "x_m", "y_m", "r_m", "phi_rad")


def write_trajectory_csv(
    trajectory: Sequence[MotionSegment], stream: IO[str], step: float = 1.0
) -> int:
    """Sample a trajectory every ``step`` seconds and write CSV rows.

    Returns:
        Number of data rows written.
    """
    if step <= 0.0:
        raise ValueError(f"Sampling step must be > 0, got {step}")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORY_COLUMNS)

    cursor = TrajectoryCursor(trajectory)
    horizon = trajectory[-1].t_end
    rows = 0
    k = 0
    while (t := k * step) <= horizon:
        point = cursor.advance(t).cartesian_at(t)
        polar = PolarPoint.from_cartesian(point)
        writer.writerow([repr(t), repr(point.x), repr(point.y), repr(polar.r), repr(polar.phi)])
        rows += 1
        k += 1
    return rows
