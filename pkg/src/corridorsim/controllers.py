"""CAV control strategies.

Every controller sees exactly what the learning agent sees: the 9-component
observation, plus static configuration fixed before the episode (shockwave
parameters, corridor geometry, the control period). Returning ``None``
hands the vehicle to plain car-following.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .rl.observation import Observation, normalize_observation
from .rl.policy import PolicyNet
from .scenario import LEFT, ScenarioSpec
from .shockwave import (ShockwaveParams, analytic_times, cruise_speed,
                        early_release_allowed, optimal_split)

CONTROLLER_NAMES = ("idm_baseline", "model_based", "policy", "oracle")


class IdmBaselineController:
    """Do-nothing CAV: default car-following the whole episode."""

    def reset(self) -> None:
        pass

    def command(self, obs: Observation) -> float | None:
        return None


class Phase(enum.Enum):
    HOLD = "hold"
    CRUISE = "cruise"
    RELEASED = "released"


def shockwave_params_for(spec: ScenarioSpec, w: float = 10.0,
                         U: float = 15.0, V: float = 35.0) -> ShockwaveParams:
    net = spec.network.build()
    z = net.z if net.n_intersections == 2 else None
    return ShockwaveParams(w=w, U=U, V=V, d=spec.d, x_a=spec.x_a, z=z)


class ModelBasedController:
    """Queue-splitting strategy derived from the shockwave analysis.

    The branch is fixed at reset time from the configured parameters:

    * starting at or inside the optimal split point: hold still until the
      emergency vehicle has merged ahead, then follow normally;
    * starting beyond it: cruise at the largest speed that cannot reach the
      split point before the emergency vehicle does;
    * queued at the second intersection with a queue short enough to clear
      in time: skip the assist entirely and drive off with the green.

    A vehicle queued at the second intersection is analyzed in that stop
    line's frame: its queue gap is ``|x_a| - z`` and the emergency vehicle
    is ``d + z`` away from it.
    """

    def __init__(self, params: ShockwaveParams, two_intersections: bool = False,
                 final_stop_line: float = 175.0, dt: float = 0.5,
                 cav_lane: int = LEFT, speed_margin: float = 0.1,
                 brake: float = -3.0):
        self.params = params
        self.two_intersections = two_intersections
        self.final_stop_line = final_stop_line
        self.dt = dt
        self.cav_lane = cav_lane
        self.speed_margin = speed_margin
        self.brake = brake
        self.reset()

    def reset(self) -> None:
        p = self.params
        if self.two_intersections and p.x_a < 0.0:
            if p.z is None:
                raise ValueError("two-intersection control requires z")
            gap = -p.x_a - p.z
            eff = ShockwaveParams(w=p.w, U=p.U, V=p.V, d=p.d + p.z,
                                  x_a=gap, z=p.z)
        else:
            eff = p
        self.effective = eff
        x_l = optimal_split(eff)
        self.split_point = x_l
        self.cruise_target: float | None = None
        if eff.x_a > x_l:
            self.phase = Phase.CRUISE
            self.cruise_target = cruise_speed(eff, margin=self.speed_margin)
        elif (self.two_intersections and p.x_a < 0.0
              and early_release_allowed(ShockwaveParams(
                  w=p.w, U=p.U, V=p.V, d=eff.d, x_a=p.z - eff.x_a, z=p.z))):
            self.phase = Phase.RELEASED
        else:
            self.phase = Phase.HOLD

    def _release_due(self, obs: Observation) -> bool:
        if not obs.ems_in_range:
            return False
        merged_ahead = obs.l_ev == self.cav_lane and obs.p_ev > obs.p_cav
        return merged_ahead or obs.p_ev > self.final_stop_line

    def command(self, obs: Observation) -> float | None:
        if self.phase is Phase.RELEASED:
            return None
        if self._release_due(obs):
            self.phase = Phase.RELEASED
            return None
        if not obs.ems_in_range:
            return None  # nothing to assist yet: plain car-following
        if self.phase is Phase.HOLD:
            return self.brake
        # cruise toward the timed target speed
        return (self.cruise_target - obs.v_cav) / self.dt

    @property
    def eq12_slack(self) -> float:
        """Seconds of margin in the no-early-arrival condition, cruise branch."""
        if self.cruise_target is None or self.cruise_target <= 0.0:
            return float("inf")
        times = analytic_times(self.effective)
        return ((self.effective.x_a - self.split_point) / self.cruise_target
                - (times.t_s - times.t_a))


class PolicyController:
    """Learned policy evaluated deterministically."""

    def __init__(self, net: PolicyNet, corridor_length: float,
                 v_scale: float = 35.0):
        self.net = net
        self.corridor_length = corridor_length
        self.v_scale = v_scale

    def reset(self) -> None:
        pass

    def command(self, obs: Observation) -> float | None:
        vec = normalize_observation(obs, self.corridor_length, self.v_scale)
        return self.net.act(vec, deterministic=True)


def make_controller(name: str, spec: ScenarioSpec, w: float = 10.0,
                    net: PolicyNet | None = None, dt: float = 0.5):
    if name == "idm_baseline":
        return IdmBaselineController()
    if name == "model_based":
        network = spec.network.build()
        return ModelBasedController(
            params=shockwave_params_for(spec, w=w),
            two_intersections=network.n_intersections == 2,
            final_stop_line=network.stop_lines[-1], dt=dt)
    if name == "policy":
        if net is None:
            raise ValueError("policy controller requires a checkpoint")
        return PolicyController(net, spec.network.build().length)
    raise ValueError(f"unknown controller {name!r}")
