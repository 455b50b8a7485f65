"""Propagation models and SIR evaluation for the primary and CR receivers.

Two forms are provided:
- the two-ray ground model in linear units (watts, meters), used by the
  deterministic controller;
- the log-distance model with log-normal shadowing in dB, used when the
  path-loss exponents differ and shadowing is simulated.

PL(d0) is taken as 0 dB at d0, so with d0 = 1 m, unity antennas and equal
exponents the dB form reduces exactly to the linear one. Noise is neglected
throughout (SIR, not SINR).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, overload

import numpy as np

Link = Literal["pr", "cr"]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class ChannelParams:
    """Propagation constants shared by both links.

    alpha_p is the exponent of transmissions from the TV base station,
    alpha_c the exponent of transmissions from the CR transmitter.
    """

    alpha_p: float = 3.0
    alpha_c: float = 3.0
    g_t: float = 1.0
    g_r: float = 1.0
    h_t: float = 1.0
    h_r: float = 1.0
    sigma_db: float = 0.0
    d0: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha_p <= 0.0 or self.alpha_c <= 0.0:
            raise ValueError(
                f"Path-loss exponents must be > 0, got alpha_p={self.alpha_p}, alpha_c={self.alpha_c}"
            )
        if self.sigma_db < 0.0:
            raise ValueError(f"Shadowing deviation must be >= 0, got {self.sigma_db}")
        if self.d0 <= 0.0:
            raise ValueError(f"Reference distance must be > 0, got {self.d0}")
        for name in ("g_t", "g_r", "h_t", "h_r"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def equal_exponents(self) -> bool:
        return self.alpha_p == self.alpha_c

    @property
    def antenna_factor(self) -> float:
        """G_t * G_r * h_t^2 * h_r^2."""
        return self.g_t * self.g_r * self.h_t**2 * self.h_r**2

    def exponent(self, which: Link) -> float:
        if which == "pr":
            return self.alpha_p
        if which == "cr":
            return self.alpha_c
        raise ValueError(f"Unknown link {which!r}, expected 'pr' or 'cr'")


# ---------------------------------------------------------------------------
# Unit helpers
# ---------------------------------------------------------------------------


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    if value <= 0.0:
        raise ValueError(f"Cannot express non-positive ratio {value} in dB")
    return 10.0 * math.log10(value)


def watts_to_dbw(p_w: float) -> float:
    return linear_to_db(p_w)


def dbw_to_watts(p_dbw: float) -> float:
    return db_to_linear(p_dbw)


# ---------------------------------------------------------------------------
# Two-ray ground model
# ---------------------------------------------------------------------------


def received_power_tworay(
    p_t: float, d: float, params: ChannelParams, which: Link = "cr"
) -> float:
    """Received power under the two-ray ground model.

    Args:
        p_t: Transmit power, watts.
        d: Propagation distance, meters.
        params: Channel constants.
        which: "pr" selects alpha_p (base-station link), "cr" selects alpha_c.

    Returns:
        P_t * G_t * G_r * h_t^2 * h_r^2 / d^alpha, watts.

    Raises:
        ValueError: If d <= 0 or p_t <= 0.
    """
    if d <= 0.0:
        raise ValueError(f"Propagation distance must be > 0, got {d}")
    if p_t <= 0.0:
        raise ValueError(f"Transmit power must be > 0, got {p_t}")
    return p_t * params.antenna_factor / d ** params.exponent(which)


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if value <= 0.0:
            raise ValueError(f"{name} must be > 0, got {value}")


def sir_primary(
    p_bs: float, p_ct: float, d12: float, r1: float, params: ChannelParams
) -> float:
    """Linear SIR at the TV receiver.

    Signal is the base station at distance r1, interference is the CR
    transmitter at distance d12. Antenna factors cancel.
    """
    _require_positive(p_bs=p_bs, p_ct=p_ct, d12=d12, r1=r1)
    return (p_bs / r1**params.alpha_p) / (p_ct / d12**params.alpha_c)


def sir_cr(
    p_ct: float, p_bs: float, d22: float, r2: float, params: ChannelParams
) -> float:
    """Linear SIR at the CR receiver (signal from the CTx over d22, interference from the base station over r2)."""
    _require_positive(p_ct=p_ct, p_bs=p_bs, d22=d22, r2=r2)
    return (p_ct / d22**params.alpha_c) / (p_bs / r2**params.alpha_p)


# ---------------------------------------------------------------------------
# Log-distance model with shadowing
# ---------------------------------------------------------------------------


def distance_db(d: float, params: ChannelParams) -> float:
    """10*log10(d/d0); distances inside d0 are clamped to d0."""
    if d <= 0.0:
        raise ValueError(f"Propagation distance must be > 0, got {d}")
    return 10.0 * math.log10(max(d, params.d0) / params.d0)


def shadowed_sir_terms(
    p_dbw: float,
    d: float,
    alpha: float,
    x_sigma_db: float,
    params: ChannelParams,
) -> float:
    """Received power in dBW under the log-distance model.

    Returns p_dbw - [PL(d0) + 10*alpha*log10(d/d0) + X], with PL(d0) = 0 dB.
    SIR_p and SIR_c in dB are differences of two such terms.
    """
    return p_dbw - (alpha * distance_db(d, params) + x_sigma_db)


@overload
def sample_shadowing(rng: np.random.Generator, sigma_db: float) -> float: ...


@overload
def sample_shadowing(
    rng: np.random.Generator, sigma_db: float, size: int
) -> np.ndarray: ...


def sample_shadowing(
    rng: np.random.Generator, sigma_db: float, size: int | None = None
) -> float | np.ndarray:
    """Draw the shadowing difference X' ~ N(0, sqrt(2)*sigma) in dB.

    X' is the difference of two independent N(0, sigma) terms. Draws come from
    numpy's standard normal (ziggurat) so a seeded generator is bit-stable.
    A standard normal is consumed even when sigma is 0, which keeps the stream
    aligned across configurations.

    Args:
        rng: Caller-owned generator; mutated.
        sigma_db: Shadowing deviation of a single path, dB.
        size: Number of draws; None returns a scalar.

    Returns:
        A float, or an array of ``size`` draws.
    """
    if sigma_db < 0.0:
        raise ValueError(f"Shadowing deviation must be >= 0, got {sigma_db}")
    scale = _SQRT2 * sigma_db
    if size is None:
        return float(scale * rng.standard_normal()) + 0.0
    return scale * rng.standard_normal(size) + 0.0
