"""The 9-component partial observation available to the CAV.

The CAV senses its immediate same-lane neighbours on board and hears the
emergency vehicle over a range-limited wireless link. Absent neighbours and
an out-of-range emergency vehicle take fixed sentinel values so the input
dimension never changes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..sim.engine import Simulation
from ..sim.vehicle import VehicleClass

COMM_RANGE = 300.0          # m, wireless range between EMS and CAV
SENTINEL_HEADWAY = 350.0    # m, stands in for "no vehicle there"


@dataclass(frozen=True)
class Observation:
    v_lead: float
    h_lead: float
    v_follower: float
    h_follower: float
    v_ev: float
    l_ev: int
    p_ev: float
    v_cav: float
    p_cav: float

    @property
    def ems_in_range(self) -> bool:
        """True when the wireless fields carry a real emergency vehicle."""
        return self.l_ev >= 0

    def vector(self) -> np.ndarray:
        return np.array([self.v_lead, self.h_lead, self.v_follower,
                         self.h_follower, self.v_ev, float(self.l_ev),
                         self.p_ev, self.v_cav, self.p_cav], dtype=np.float64)


def observe(sim: Simulation, comm_range: float = COMM_RANGE,
            sentinel_headway: float = SENTINEL_HEADWAY) -> Observation:
    """Observation of the CAV's neighbourhood in the current state."""
    cav = sim.cav
    if cav is None:
        raise ValueError("no CAV in the simulation")
    leader = sim.leader_of(cav)
    follower = sim.follower_of(cav)
    v_lead, h_lead = 0.0, sentinel_headway
    if leader is not None:
        v_lead = leader.speed
        h_lead = max(leader.rear - cav.pos, 0.0)
    v_follower, h_follower = 0.0, sentinel_headway
    if follower is not None:
        v_follower = follower.speed
        h_follower = max(cav.rear - follower.pos, 0.0)

    ems = sim.find(VehicleClass.EMS)
    if ems is not None and abs(cav.pos - ems.pos) < comm_range:
        v_ev, l_ev, p_ev = ems.speed, ems.lane, ems.pos
    else:
        # out of range: speed 0, position mirrored onto the CAV, lane -1
        v_ev, l_ev, p_ev = 0.0, -1, cav.pos
    return Observation(v_lead=v_lead, h_lead=h_lead, v_follower=v_follower,
                       h_follower=h_follower, v_ev=v_ev, l_ev=l_ev, p_ev=p_ev,
                       v_cav=cav.speed, p_cav=cav.pos)


def normalize_observation(obs: Observation, corridor_length: float,
                          v_scale: float = 35.0) -> np.ndarray:
    """Unit-scale input vector for the policy network."""
    vec = obs.vector()
    scale = np.array([v_scale, corridor_length, v_scale, corridor_length,
                      v_scale, 1.0, corridor_length, v_scale,
                      corridor_length], dtype=np.float64)
    return vec / scale
