"""Intelligent Driver Model car-following law.

Used for every uncontrolled vehicle (humans and the emergency vehicle) and
as the safety envelope that bounds externally commanded accelerations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class IdmParams:
    """Standard IDM parameters.

    The acceleration bounds double as the global +-3 m/s^2 limits every
    vehicle is subject to.
    """

    time_headway: float = 1.0     # T, s
    min_gap: float = 2.0          # s0, m
    max_accel: float = 3.0        # a, m/s^2
    comfort_decel: float = 3.0    # b, m/s^2
    max_decel: float = 3.0        # hard braking limit, m/s^2
    exponent: float = 4.0         # delta

    @property
    def brake_term(self) -> float:
        return 2.0 * math.sqrt(self.max_accel * self.comfort_decel)


DEFAULT_IDM = IdmParams()


def idm_accel(v: float, v_desired: float, gap: float | None = None,
              dv: float = 0.0, params: IdmParams = DEFAULT_IDM) -> float:
    """Acceleration of a vehicle at speed ``v`` toward ``v_desired``.

    ``gap`` is the bumper-to-bumper distance to the leader (``None`` or
    ``inf`` when the road ahead is free) and ``dv`` the closing speed
    ``v - v_leader``. The result is clamped to the permitted acceleration
    box.
    """
    if not (math.isfinite(v) and math.isfinite(v_desired) and math.isfinite(dv)):
        raise ValueError("non-finite input to idm_accel")
    if v < 0.0:
        raise ValueError(f"negative speed {v}")
    if v_desired <= 0.0:
        raise ValueError(f"non-positive desired speed {v_desired}")

    free = 1.0 - (v / v_desired) ** params.exponent
    if gap is None or gap == math.inf:
        raw = params.max_accel * free
    else:
        if not math.isfinite(gap):
            raise ValueError("non-finite gap")
        if gap <= 0.0:
            raise ValueError(f"non-positive gap {gap}")
        s_star = params.min_gap + max(0.0, v * params.time_headway
                                      + v * dv / params.brake_term)
        raw = params.max_accel * (free - (s_star / gap) ** 2)
    return max(-params.max_decel, min(params.max_accel, raw))
