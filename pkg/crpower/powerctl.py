"""Optimal transmit power for the CR transmitter under TV-receiver protection.

Two disks drive everything here:
- the protection disk around the TV receiver, which the CTx must stay out of
  (radius grows with the CTx power);
- the decodable disk around the CRx, which the CTx must stay inside
  (radius also grows with the CTx power).

The concurrent transmission region is the largest disk centered at the CRx
that satisfies both; its radius peaks when the two disks are tangent. Both
radii scale as P^(1/alpha_c), so the tangency power has a closed form.

Every function takes an optional ``margin_db``. None selects the two-ray
model in linear units; a float selects the log-distance model evaluated with
the shadowing difference X' set to that value.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Literal, Union

from crpower.channel import dbw_to_watts, distance_db, watts_to_dbw
from crpower.geometry import PolarPoint, relative_angle, separation
from crpower.models import Deployment

logger = logging.getLogger(__name__)

Feasibility = Literal["optimal", "max_power", "forbidden"]


class SilentReason(str, enum.Enum):
    FORBIDDEN = "forbidden"
    OUT_OF_RANGE = "out_of_range"


@dataclass(frozen=True)
class Optimal:
    """Transmit at the tangency power."""

    p_ct: float
    r_ct: float


@dataclass(frozen=True)
class MaxPower:
    """Transmit at p_max; the tangency power lies above the allowed range."""

    p_ct: float
    r_ct: float


@dataclass(frozen=True)
class Silent:
    """Stop transmitting."""

    reason: SilentReason


PowerDecision = Union[Optimal, MaxPower, Silent]


def is_transmit(decision: PowerDecision | None) -> bool:
    return isinstance(decision, (Optimal, MaxPower))


class InfeasiblePowerError(ValueError):
    """The tangency power lies outside [p_min, p_max].

    Attributes:
        case: "forbidden" when f > 0 (disks overlap even at p_min),
            "max_power" when g < 0 (disks apart even at p_max).
        f: Tangency residual at p_min, meters.
        g: Tangency residual at p_max, meters.
    """

    def __init__(self, case: Feasibility, f: float, g: float) -> None:
        self.case = case
        self.f = f
        self.g = g
        super().__init__(f"Optimal power infeasible ({case}): f={f:.3f} m, g={g:.3f} m")


# ---------------------------------------------------------------------------
# Disk radii
# ---------------------------------------------------------------------------


def receiver_separation(r2: float, theta_pc: float, dep: Deployment) -> float:
    """Distance between the TV receiver and a CRx at (r2, relative angle theta_pc)."""
    r1 = dep.r1
    squared = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * math.cos(theta_pc)
    return math.sqrt(max(0.0, squared))


def _check_power(p_ct: float) -> None:
    if p_ct <= 0.0:
        raise ValueError(f"CTx power must be > 0, got {p_ct}")


def forbidden_radius(p_ct: float, dep: Deployment) -> float:
    """Radius of the protection disk around the TV receiver, meters.

    r1 * (tau_p * P_ct / P_bs)^(1/alpha) for equal exponents.
    """
    _check_power(p_ct)
    ch = dep.channel
    return (dep.tau_p * p_ct * dep.r1**ch.alpha_p / dep.p_bs) ** (1.0 / ch.alpha_c)


def decodable_radius(p_ct: float, r2: float, dep: Deployment) -> float:
    """Radius of the disk around the CRx inside which SIR_c exceeds tau_c, meters.

    r2 * (P_ct / (tau_c * P_bs))^(1/alpha) for equal exponents.
    """
    _check_power(p_ct)
    if r2 < 0.0:
        raise ValueError(f"CRx radius must be >= 0, got {r2}")
    ch = dep.channel
    return (p_ct * r2**ch.alpha_p / (dep.tau_c * dep.p_bs)) ** (1.0 / ch.alpha_c)


def shadow_thresholds(
    p_ct_dbw: float, r2: float, x_sigma_db: float, dep: Deployment
) -> tuple[float, float]:
    """Distance thresholds of the log-distance model with shadowing difference X'.

    SIR_p > tau_p  iff  d12 > d12_min
    SIR_c > tau_c  iff  d22 < d22_max

    Args:
        p_ct_dbw: CTx power, dBW.
        r2: CRx distance from the base station, meters.
        x_sigma_db: Shadowing difference X', dB. Larger values shrink d22_max
            and grow d12_min.
        dep: Deployment.

    Returns:
        (d12_min, d22_max) in meters.
    """
    if r2 <= 0.0:
        raise ValueError(f"CRx radius must be > 0, got {r2}")
    ch = dep.channel
    p_bs_dbw = watts_to_dbw(dep.p_bs)
    r1_db = distance_db(dep.r1, ch)
    r2_db = distance_db(r2, ch)
    d12_db = (p_ct_dbw + ch.alpha_p * r1_db + dep.tau_p_db + x_sigma_db - p_bs_dbw) / ch.alpha_c
    d22_db = (p_ct_dbw + ch.alpha_p * r2_db - dep.tau_c_db - x_sigma_db - p_bs_dbw) / ch.alpha_c
    return ch.d0 * 10.0 ** (d12_db / 10.0), ch.d0 * 10.0 ** (d22_db / 10.0)


def disk_radii(
    p_ct: float, r2: float, dep: Deployment, margin_db: float | None = None
) -> tuple[float, float]:
    """(protection radius, decodable radius) at power p_ct, meters."""
    if margin_db is None:
        return forbidden_radius(p_ct, dep), decodable_radius(p_ct, r2, dep)
    _check_power(p_ct)
    if r2 == 0.0:
        return shadow_thresholds(watts_to_dbw(p_ct), dep.channel.d0, margin_db, dep)[0], 0.0
    return shadow_thresholds(watts_to_dbw(p_ct), r2, margin_db, dep)


def max_decodable_radius(r2: float, dep: Deployment, margin_db: float | None = None) -> float:
    """r_max: decodable radius at p_max for the current r2."""
    return disk_radii(dep.p_max, r2, dep, margin_db)[1]


# ---------------------------------------------------------------------------
# Feasibility and the tangency power
# ---------------------------------------------------------------------------


def _residual(
    p_ct: float, r2: float, theta_pc: float, dep: Deployment, margin_db: float | None
) -> float:
    forbidden, decodable = disk_radii(p_ct, r2, dep, margin_db)
    return forbidden + decodable - receiver_separation(r2, theta_pc, dep)


def f_extreme(
    r2: float, theta_pc: float, dep: Deployment, margin_db: float | None = None
) -> float:
    """Tangency residual at p_min; > 0 means the disks overlap at every allowed power."""
    return _residual(dep.p_min, r2, theta_pc, dep, margin_db)


def g_extreme(
    r2: float, theta_pc: float, dep: Deployment, margin_db: float | None = None
) -> float:
    """Tangency residual at p_max; < 0 means the disks stay apart at every allowed power."""
    return _residual(dep.p_max, r2, theta_pc, dep, margin_db)


def feasibility(
    r2: float, theta_pc: float, dep: Deployment, margin_db: float | None = None
) -> Feasibility:
    if f_extreme(r2, theta_pc, dep, margin_db) > 0.0:
        return "forbidden"
    if g_extreme(r2, theta_pc, dep, margin_db) < 0.0:
        return "max_power"
    return "optimal"


def optimal_power_shadow(
    r1: float, r2: float, theta_pc: float, x_sigma_db: float, dep: Deployment
) -> float:
    """Tangency power of the log-distance model, computed in dB.

    P_ct[dB] = 10*alpha_c * log10( (d_pc/d0) / (10^(a/(10*alpha_c)) + 10^(b/(10*alpha_c))) )
    with a = 10*alpha_p*log10(r1/d0) + tau_p + X' - P_bs and
         b = 10*alpha_p*log10(r2/d0) - tau_c - X' - P_bs.

    The result is not clamped; callers validate it against [p_min, p_max].

    Returns:
        Power in watts.

    Raises:
        ValueError: If r1 or r2 is not positive, or alpha_p > alpha_c.
    """
    if r1 <= 0.0 or r2 <= 0.0:
        raise ValueError(f"Distances must be > 0, got r1={r1}, r2={r2}")
    ch = dep.channel
    if ch.alpha_p > ch.alpha_c:
        raise ValueError(f"alpha_p must not exceed alpha_c, got {ch.alpha_p} > {ch.alpha_c}")
    p_bs_dbw = watts_to_dbw(dep.p_bs)
    scale = 10.0 * ch.alpha_c
    a = ch.alpha_p * distance_db(r1, ch) + dep.tau_p_db + x_sigma_db - p_bs_dbw
    b = ch.alpha_p * distance_db(r2, ch) - dep.tau_c_db - x_sigma_db - p_bs_dbw
    squared = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * math.cos(theta_pc)
    d_pc = math.sqrt(max(0.0, squared))
    if d_pc == 0.0:
        raise ValueError("Receivers coincide; no tangency power exists")
    p_dbw = scale * math.log10((d_pc / ch.d0) / (10.0 ** (a / scale) + 10.0 ** (b / scale)))
    return dbw_to_watts(p_dbw)


def unclamped_optimal_power(
    r2: float, theta_pc: float, dep: Deployment, margin_db: float | None = None
) -> float:
    """Closed-form tangency power, ignoring [p_min, p_max].

    P* = [ d_pc / (A + B) ]^alpha_c where A*P^(1/alpha_c) and B*P^(1/alpha_c)
    are the protection and decodable radii.

    Raises:
        ValueError: If the receivers coincide (d_pc = 0).
    """
    if margin_db is not None and r2 > 0.0:
        return optimal_power_shadow(dep.r1, r2, theta_pc, margin_db, dep)
    d_pc = receiver_separation(r2, theta_pc, dep)
    if d_pc == 0.0:
        raise ValueError("Receivers coincide; no tangency power exists")
    forbidden, decodable = disk_radii(1.0, r2, dep, margin_db)
    return (d_pc / (forbidden + decodable)) ** dep.channel.alpha_c


def optimal_power(
    r2: float, theta_pc: float, dep: Deployment, margin_db: float | None = None
) -> float:
    """Tangency power that maximizes the concurrent transmission region.

    Args:
        r2: CRx distance from the base station, meters.
        theta_pc: Relative angle of the TV and CR receivers, radians.
        dep: Deployment.
        margin_db: None for the two-ray model, else X' of the log-distance model.

    Returns:
        Power in watts, within [p_min, p_max].

    Raises:
        InfeasiblePowerError: If f > 0 or g < 0.
    """
    f = f_extreme(r2, theta_pc, dep, margin_db)
    g = g_extreme(r2, theta_pc, dep, margin_db)
    if f > 0.0:
        raise InfeasiblePowerError("forbidden", f, g)
    if g < 0.0:
        raise InfeasiblePowerError("max_power", f, g)
    if f == 0.0:
        return dep.p_min
    if g == 0.0:
        return dep.p_max
    p_star = unclamped_optimal_power(r2, theta_pc, dep, margin_db)
    # Rounding can push the closed form a few ulps past a bound
    return min(dep.p_max, max(dep.p_min, p_star))


def concurrent_radius(
    p_ct: float,
    r2: float,
    theta_pc: float,
    dep: Deployment,
    margin_db: float | None = None,
) -> float:
    """Radius of the concurrent transmission region at power p_ct, meters.

    max(0, min(decodable radius, d_pc - protection radius)).
    """
    forbidden, decodable = disk_radii(p_ct, r2, dep, margin_db)
    d_pc = receiver_separation(r2, theta_pc, dep)
    return max(0.0, min(decodable, d_pc - forbidden))


def pr_threshold_power(
    ctx: PolarPoint, dep: Deployment, margin_db: float | None = None
) -> float:
    """Largest CTx power at which SIR_p still reaches tau_p at the fixed CTx position.

    Any power at or above this value violates SIR_p > tau_p.
    """
    d12 = separation(ctx, dep.pr_rx)
    ch = dep.channel
    if margin_db is None:
        return dep.p_bs * d12**ch.alpha_c / (dep.tau_p * dep.r1**ch.alpha_p)
    p_dbw = (
        ch.alpha_c * distance_db(d12, ch)
        - ch.alpha_p * distance_db(dep.r1, ch)
        - dep.tau_p_db
        - margin_db
        + watts_to_dbw(dep.p_bs)
    )
    return dbw_to_watts(p_dbw)


# ---------------------------------------------------------------------------
# Decision algorithms
# ---------------------------------------------------------------------------


def decide_fixed(
    crx: PolarPoint,
    ctx: PolarPoint,
    dep: Deployment,
    plan_margin_db: float | None = None,
) -> PowerDecision:
    """Power decision for a CRx at a known position.

    Branches, in order:
    - f <= 0, g >= 0 and d22 <= r_max: transmit at the tangency power;
    - g < 0 and d22 <= r_max: transmit at p_max;
    - f > 0: silent, the CRx is too close to the TV receiver;
    - otherwise: silent, the CTx cannot reach the CRx.
    """
    r2 = crx.r
    theta_pc = relative_angle(dep.pr_rx.phi, crx.phi)
    d22 = separation(crx, ctx)
    f = f_extreme(r2, theta_pc, dep, plan_margin_db)
    g = g_extreme(r2, theta_pc, dep, plan_margin_db)
    r_max = max_decodable_radius(r2, dep, plan_margin_db)

    if f <= 0.0 and g >= 0.0 and d22 <= r_max:
        p_ct = optimal_power(r2, theta_pc, dep, plan_margin_db)
        return Optimal(p_ct, concurrent_radius(p_ct, r2, theta_pc, dep, plan_margin_db))
    if g < 0.0 and d22 <= r_max:
        return MaxPower(dep.p_max, concurrent_radius(dep.p_max, r2, theta_pc, dep, plan_margin_db))
    if f > 0.0:
        return Silent(SilentReason.FORBIDDEN)
    return Silent(SilentReason.OUT_OF_RANGE)


@dataclass
class ControllerCache:
    """Caller-owned state of the mobile controller."""

    decision: PowerDecision | None = None
    r_ct: float = 0.0
    recomputes: int = 0

    def invalidate(self) -> None:
        self.decision = None
        self.r_ct = 0.0


def decide_mobile(
    cache: ControllerCache,
    crx_now: PolarPoint,
    ctx: PolarPoint,
    dep: Deployment,
    plan_margin_db: float | None = None,
    check: Literal["refreshed", "frozen"] = "refreshed",
    guard: float = 0.0,
) -> PowerDecision:
    """Power decision for a moving CRx, reusing the last decision while it still holds.

    The cached transmit decision is kept while d22 + guard <= r_CT and
    d22 <= r_max. With ``check="frozen"`` r_CT is the radius cached at the
    last recompute; with ``check="refreshed"`` it is the radius of the cached
    power evaluated at the current position. Otherwise the fixed-position
    ladder runs again and the cache is refreshed.

    ``guard`` (meters) covers how far the CRx can drift before the next
    location update; 0 gives the bare comparison.
    """
    r2 = crx_now.r
    theta_pc = relative_angle(dep.pr_rx.phi, crx_now.phi)
    d22 = separation(crx_now, ctx)
    cached = cache.decision

    if isinstance(cached, (Optimal, MaxPower)):
        if check == "frozen":
            region = cache.r_ct
        else:
            region = concurrent_radius(cached.p_ct, r2, theta_pc, dep, plan_margin_db)
        if d22 + guard <= region and d22 <= max_decodable_radius(r2, dep, plan_margin_db):
            return cached

    decision = decide_fixed(crx_now, ctx, dep, plan_margin_db)
    if decision != cached:
        logger.debug("Decision changed: %s -> %s", cached, decision)
    cache.decision = decision
    cache.r_ct = decision.r_ct if isinstance(decision, (Optimal, MaxPower)) else 0.0
    cache.recomputes += 1
    return decision
