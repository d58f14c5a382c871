"""Intelligent driver model acceleration law."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

B_MAX_EMERGENCY = 4.0


@dataclass(frozen=True)
class IdmParams:
    v0: float            # desired speed, m/s
    T: float = 1.5       # time headway, s
    s0: float = 2.0      # jam distance, m
    a_max: float = 1.5   # max acceleration, m/s^2
    b: float = 2.0       # comfortable deceleration, m/s^2
    delta: float = 4.0   # free-flow exponent

    def __post_init__(self):
        for name in ("v0", "T", "s0", "a_max", "b", "delta"):
            if getattr(self, name) <= 0:
                raise ValueError(f"IdmParams.{name} must be positive")


def idm_accel(v: float, v_lead: Optional[float], gap: Optional[float], p: IdmParams) -> float:
    """IDM acceleration; without a leader the interaction term vanishes.

    A non-positive gap returns the emergency-brake sentinel. The result is
    clamped to [-B_MAX_EMERGENCY, a_max].
    """
    if v < 0:
        raise ValueError(f"speed must be >= 0, got {v}")
    if gap is not None and gap <= 0:
        return -B_MAX_EMERGENCY
    accel = p.a_max * (1.0 - (v / p.v0) ** p.delta)
    if gap is not None:
        v_lead = 0.0 if v_lead is None else v_lead
        s_star = p.s0 + v * p.T + v * (v - v_lead) / (2.0 * math.sqrt(p.a_max * p.b))
        accel -= p.a_max * (s_star / gap) ** 2
    return max(-B_MAX_EMERGENCY, min(p.a_max, accel))
