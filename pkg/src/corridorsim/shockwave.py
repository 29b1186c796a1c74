"""Closed-form queue-splitting analysis for corridor clearance.

All quantities live in the frame of a discharging queue: ``w`` is the speed
at which the discharge front travels upstream from the stop line, ``U`` the
desired speed of ordinary traffic, ``V`` the (higher) desired emergency
speed, ``d`` the emergency vehicle's distance to the stop line and ``x_a``
the assisting vehicle's distance. The optimal split point ``x_L`` is where
opening a gap minimizes the emergency vehicle's crossing time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ShockwaveParams:
    w: float = 10.0
    U: float = 15.0
    V: float = 35.0
    d: float = 100.0
    x_a: float = 0.0
    z: float | None = None

    def validate(self) -> None:
        for name in ("w", "U", "V", "d"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"non-finite {name}")
        if not 0.0 < self.w <= self.U <= self.V:
            raise ValueError(
                f"need 0 < w <= U <= V, got w={self.w}, U={self.U}, V={self.V}")
        if self.d < 0.0:
            raise ValueError(f"d must be non-negative, got {self.d}")


@dataclass(frozen=True)
class AnalyticTimes:
    t_1: float     # wait of the vehicle just ahead of the split point
    t_2: float     # wait of the emergency vehicle
    t_s: float     # emergency vehicle reaches the split point
    t_a: float     # assisting vehicle is first able to move
    t_ev: float    # emergency vehicle crosses the stop line
    t_pre: float   # preceding vehicle crosses the stop line
    x_l: float


def optimal_split(p: ShockwaveParams) -> float:
    """Split distance that minimizes the emergency vehicle's crossing time.

    x_L = d * (1/w + 1/U) / (1/w + 2/U - 1/V); lies in [0, d] whenever
    V >= U.
    """
    p.validate()
    denominator = 1.0 / p.w + 2.0 / p.U - 1.0 / p.V
    return p.d * (1.0 / p.w + 1.0 / p.U) / denominator


def analytic_times(p: ShockwaveParams) -> AnalyticTimes:
    """Wait/switch/crossing schedule at the optimal split.

    By construction the emergency vehicle and the vehicle ahead of the
    split reach the stop line simultaneously: t_ev == t_pre.
    """
    x_l = optimal_split(p)
    t_1 = x_l / p.w
    t_2 = p.d / p.w
    t_s = t_2 + (p.d - x_l) / p.U
    t_a = abs(p.x_a) / p.w
    t_ev = t_s + x_l / p.V
    t_pre = t_1 + x_l / p.U
    return AnalyticTimes(t_1=t_1, t_2=t_2, t_s=t_s, t_a=t_a,
                         t_ev=t_ev, t_pre=t_pre, x_l=x_l)


def hold_branch_cav_time(p: ShockwaveParams) -> float:
    """Crossing time of an assisting vehicle that waits at x_a <= x_L."""
    return p.d / p.w + (p.d - p.x_a) / p.w + p.x_a / p.U


def cruise_branch_cav_time(p: ShockwaveParams) -> float:
    """Crossing time of an assisting vehicle starting beyond the split."""
    return p.x_a / p.w + p.x_a / p.U


def cruise_speed(p: ShockwaveParams, margin: float = 0.1) -> float:
    """Largest cruise speed that cannot reach the split point early.

    Solves (x_a - x_L)/v > t_s - t_a with a relative safety margin, capped
    at the ordinary desired speed. Only meaningful when x_a > x_L.
    """
    times = analytic_times(p)
    slack = times.t_s - times.t_a
    if slack <= 0.0:
        return p.U
    v = (p.x_a - times.x_l) / (slack * (1.0 + margin))
    return max(0.0, min(p.U, v))


def early_release_allowed(p: ShockwaveParams) -> bool:
    """Two-intersection exception: the assisting vehicle may go at once.

    True when (z - x_a)/w + (z - x_a)/U <= d/w + d/V, i.e. the queue ahead
    of it clears before it could hinder the emergency vehicle. ``x_a`` here
    is measured downstream from the first stop line.
    """
    p.validate()
    if p.z is None:
        raise ValueError("two-intersection check requires z")
    lhs = (p.z - p.x_a) / p.w + (p.z - p.x_a) / p.U
    rhs = p.d / p.w + p.d / p.V
    return lhs <= rhs


def early_release_sides(p: ShockwaveParams) -> tuple[float, float]:
    p.validate()
    if p.z is None:
        raise ValueError("two-intersection check requires z")
    lhs = (p.z - p.x_a) / p.w + (p.z - p.x_a) / p.U
    rhs = p.d / p.w + p.d / p.V
    return lhs, rhs


@dataclass(frozen=True)
class OracleTimes:
    t_ev: float
    t_cav: float


def oracle_times(p: ShockwaveParams, two_intersections: bool = False) -> OracleTimes:
    """Idealized travel times with instantaneous speed changes.

    The emergency vehicle is assumed to switch lanes at the optimal split
    of its own queue and cross unobstructed; the assisting vehicle's time
    follows the hold/cruise branch picked by its position. With two
    intersections both times are measured at the second stop line, the
    emergency vehicle covering the block between them at its desired speed.
    An assisting vehicle queued at the second stop line is treated in that
    stop line's frame (queue gap ``|x_a| - z``, emergency distance
    ``d + z``), including the early-release exception.
    """
    p.validate()
    if not two_intersections:
        times = analytic_times(p)
        if p.x_a <= times.x_l:
            t_cav = hold_branch_cav_time(p)
        else:
            t_cav = cruise_branch_cav_time(p)
        return OracleTimes(t_ev=times.t_ev, t_cav=t_cav)

    if p.z is None:
        raise ValueError("two-intersection oracle requires z")
    t_ev = analytic_times(p).t_ev + p.z / p.V
    if p.x_a >= 0.0:
        base = oracle_times(p, two_intersections=False)
        return OracleTimes(t_ev=t_ev, t_cav=base.t_cav + p.z / p.U)
    gap = -p.x_a - p.z
    if gap < 0.0:
        raise ValueError(f"x_a={p.x_a} does not land between the stop lines")
    eff = ShockwaveParams(w=p.w, U=p.U, V=p.V, d=p.d + p.z, x_a=gap, z=p.z)
    x_l_eff = optimal_split(eff)
    if gap > x_l_eff:
        t_cav = cruise_branch_cav_time(eff)
    elif early_release_allowed(ShockwaveParams(
            w=p.w, U=p.U, V=p.V, d=eff.d, x_a=p.z - gap, z=p.z)):
        t_cav = gap / p.w + gap / p.U
    else:
        t_cav = hold_branch_cav_time(eff)
    return OracleTimes(t_ev=t_ev, t_cav=t_cav)
