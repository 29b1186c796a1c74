"""Episode interface the learning code and evaluators drive."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..scenario import ScenarioSpec, build_initial_state
from ..sim.vehicle import VehicleClass
from .observation import COMM_RANGE, Observation, normalize_observation, observe
from .reward import (RewardCoefficients, SINGLE_INTERSECTION_COEFFS,
                     TWO_INTERSECTION_COEFFS, reward)


@dataclass(frozen=True)
class ActionBounds:
    a_min: float = -3.0
    a_max: float = 3.0

    def clip(self, a: float) -> float:
        return max(self.a_min, min(self.a_max, a))


DEFAULT_BOUNDS = ActionBounds()


def default_coeffs(spec: ScenarioSpec) -> RewardCoefficients:
    from ..scenario import NetworkKind
    if spec.network is NetworkKind.TWO:
        return TWO_INTERSECTION_COEFFS
    return SINGLE_INTERSECTION_COEFFS


class CorridorEnv:
    """Acceleration-control episode over one scenario.

    ``step`` consumes a bounded acceleration for the CAV, advances the
    simulator one tick and returns the normalized observation vector, the
    reward of the new state, a done flag and an info dict.
    """

    def __init__(self, spec: ScenarioSpec,
                 coeffs: RewardCoefficients | None = None,
                 comm_range: float = COMM_RANGE,
                 bounds: ActionBounds = DEFAULT_BOUNDS,
                 early_stop: bool = False,
                 same_lane_regularization: bool = False,
                 record_states: bool = False):
        self.spec = spec
        self._explicit_coeffs = coeffs is not None
        self.coeffs = coeffs if coeffs is not None else default_coeffs(spec)
        self.comm_range = comm_range
        self.bounds = bounds
        self.early_stop = early_stop
        self.same_lane_regularization = same_lane_regularization
        self.record_states = record_states
        self.sim = None
        self._steps = 0

    @property
    def observation_dim(self) -> int:
        return 9

    def reset(self, spec: ScenarioSpec | None = None) -> np.ndarray:
        if spec is not None:
            self.spec = spec
            if not self._explicit_coeffs:
                self.coeffs = default_coeffs(spec)
        self.sim = build_initial_state(self.spec,
                                       record_states=self.record_states)
        self._steps = 0
        return self._obs_vector()

    def observation(self) -> Observation:
        return observe(self.sim, comm_range=self.comm_range)

    def _obs_vector(self) -> np.ndarray:
        return normalize_observation(self.observation(),
                                     self.sim.network.length)

    def _crossed_final(self, vclass: VehicleClass) -> bool:
        record = self.sim.record
        final = len(self.sim.network.stop_lines) - 1
        vids = record.vehicles_of_class(vclass)
        return bool(vids) and record.crossing_time(vids[0], final) is not None

    def step(self, action: float):
        if self.sim is None:
            raise RuntimeError("reset() must be called before step()")
        cav = self.sim.cav
        if cav is None:
            raise RuntimeError("episode already terminal: CAV left the corridor")
        self.sim.step({cav.id: self.bounds.clip(float(action))})
        self._steps += 1

        cav = self.sim.cav
        ems = self.sim.ems
        if cav is not None:
            r = reward(v_cav=cav.speed, p_cav=cav.pos, l_cav=cav.lane,
                       v_ev=ems.speed if ems else 0.0,
                       p_ev=ems.pos if ems else 0.0,
                       l_ev=ems.lane if ems else 0,
                       ems_present=ems is not None, coeffs=self.coeffs,
                       same_lane_regularization=self.same_lane_regularization)
        else:
            r = self.sim.network.speed_limit(VehicleClass.CAV)

        done = self._steps >= self.spec.horizon_steps or cav is None
        if not done and self.early_stop:
            done = (self._crossed_final(VehicleClass.EMS)
                    and self._crossed_final(VehicleClass.CAV))
        info = {"t": self.sim.t,
                "ems_crossed": self._crossed_final(VehicleClass.EMS),
                "cav_crossed": self._crossed_final(VehicleClass.CAV)}
        obs = (self._obs_vector() if cav is not None
               else np.zeros(self.observation_dim))
        return obs, r, done, info
