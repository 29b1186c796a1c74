"""Initial conditions and inflow for the (x_a, d) experiment family.

A scenario starts at the instant the first intersection's signal turns
green, with the emergency vehicle queued in the right lane at distance
``d`` from stop line 1 and the controllable vehicle queued in the left
lane at distance ``x_a``. Negative ``x_a`` places it past the first
intersection, queued at the second: its gap to stop line 2 is
``|x_a| - z``.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .sim.engine import Arrival, Simulation
from .sim.network import CorridorNetwork, SignalProgram
from .sim.vehicle import VEHICLE_LENGTH, Vehicle, VehicleClass

JAM_SPACING = 7.0          # front bumper to front bumper, m
EXTRA_QUEUE_SLOTS = 3      # humans queued behind the deepest placement

CAV_ID = 1
EMS_ID = 2
FIRST_HUMAN_ID = 3

LEFT, RIGHT = 0, 1


class InfeasibleScenarioError(ValueError):
    """The requested placements cannot be realized on the corridor."""


class NetworkKind(enum.Enum):
    ONE = "one_intersection"
    TWO = "two_intersection"

    @classmethod
    def parse(cls, value: str) -> "NetworkKind":
        key = value.strip().lower().replace("-", "_")
        aliases = {
            "one": cls.ONE, "one_intersection": cls.ONE, "oneintersection": cls.ONE,
            "two": cls.TWO, "two_intersection": cls.TWO, "twointersection": cls.TWO,
        }
        if key not in aliases:
            raise ValueError(f"unknown network kind {value!r}")
        return aliases[key]

    def build(self) -> CorridorNetwork:
        if self is NetworkKind.ONE:
            return CorridorNetwork.single()
        return CorridorNetwork.double()


@dataclass(frozen=True)
class ScenarioSpec:
    network: NetworkKind = NetworkKind.ONE
    x_a: float = 1.0
    d: float = 16.0
    inflow_vph: float = 1000.0
    seed: int = 0
    horizon_steps: int = 600

    def validate(self) -> None:
        net = self.network.build()
        if self.d < 0:
            raise InfeasibleScenarioError(f"d must be non-negative, got {self.d}")
        if self.d > net.approach_length:
            raise InfeasibleScenarioError(f"d={self.d} beyond the approach")
        if self.inflow_vph <= 0:
            raise InfeasibleScenarioError("inflow_vph must be positive")
        if self.horizon_steps <= 0:
            raise InfeasibleScenarioError("horizon_steps must be positive")
        if self.x_a >= 0:
            if self.x_a > net.approach_length:
                raise InfeasibleScenarioError(f"x_a={self.x_a} beyond the approach")
        else:
            if self.network is not NetworkKind.TWO:
                raise InfeasibleScenarioError(
                    "negative x_a requires the two-intersection network")
            gap = -self.x_a - net.z
            if gap < 0 or gap > net.z - VEHICLE_LENGTH:
                raise InfeasibleScenarioError(
                    f"x_a={self.x_a} does not land between the stop lines")

    def cav_stop_line(self) -> int:
        return 1 if self.x_a < 0 else 0

    def cav_gap(self) -> float:
        """Distance from the CAV to its reference stop line."""
        net = self.network.build()
        return self.x_a if self.x_a >= 0 else -self.x_a - net.z

    # exact wire field names: network, x_a, d, inflow_vph, seed, horizon_steps
    def to_json_dict(self) -> dict:
        return {"network": self.network.value, "x_a": self.x_a, "d": self.d,
                "inflow_vph": self.inflow_vph, "seed": self.seed,
                "horizon_steps": self.horizon_steps}

    @classmethod
    def from_json_dict(cls, data: dict) -> "ScenarioSpec":
        return cls(network=NetworkKind.parse(data.get("network", "one_intersection")),
                   x_a=float(data.get("x_a", 1.0)), d=float(data.get("d", 16.0)),
                   inflow_vph=float(data.get("inflow_vph", 1000.0)),
                   seed=int(data.get("seed", 0)),
                   horizon_steps=int(data.get("horizon_steps", 600)))

    def with_seed(self, seed: int) -> "ScenarioSpec":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class LaneQueue:
    """Human placements for one lane of one approach, as distances to the
    stop line."""
    stop_line: int
    lane: int
    distances: tuple[float, ...]

    def validate(self) -> None:
        for a, b in zip(self.distances, self.distances[1:]):
            if b <= a:
                raise InfeasibleScenarioError("queue distances must increase")
            if b - a < JAM_SPACING - 1e-9:
                raise InfeasibleScenarioError("queue spacing below jam spacing")


@dataclass(frozen=True)
class QueueLayout:
    queues: tuple[LaneQueue, ...]

    def validate(self) -> None:
        for q in self.queues:
            q.validate()


def _lane_slots(special_dist: float | None, depth: float, limit: float) -> list[float]:
    """Jam-spaced human distances for one lane.

    ``special_dist`` reserves the EMS/CAV position: humans fill the
    floor(dist/7) slots ahead of it and continue behind it at jam spacing.
    """
    slots: list[float] = []
    if special_dist is None:
        dist = 0.0
        while dist <= depth + 1e-9 and dist <= limit:
            slots.append(dist)
            dist += JAM_SPACING
        return slots
    n_ahead = int(special_dist // JAM_SPACING)
    slots.extend(k * JAM_SPACING for k in range(n_ahead))
    dist = special_dist + JAM_SPACING
    while dist <= depth + 1e-9 and dist <= limit:
        slots.append(dist)
        dist += JAM_SPACING
    return slots


def queue_layout(spec: ScenarioSpec) -> QueueLayout:
    """Human queue placements implied by a scenario."""
    spec.validate()
    net = spec.network.build()
    pad = EXTRA_QUEUE_SLOTS * JAM_SPACING
    limit1 = net.approach_length - VEHICLE_LENGTH
    queues = []

    cav_line = spec.cav_stop_line()
    cav_gap = spec.cav_gap()
    depth1 = spec.d + pad
    if cav_line == 0:
        depth1 = max(depth1, spec.x_a + pad)
    queues.append(LaneQueue(0, LEFT, tuple(_lane_slots(
        spec.x_a if cav_line == 0 else None, depth1, limit1))))
    queues.append(LaneQueue(0, RIGHT, tuple(_lane_slots(spec.d, depth1, limit1))))

    if cav_line == 1:
        depth2 = cav_gap + pad
        limit2 = net.z - VEHICLE_LENGTH - 1.0
        queues.append(LaneQueue(1, LEFT, tuple(_lane_slots(cav_gap, depth2, limit2))))
        queues.append(LaneQueue(1, RIGHT, tuple(_lane_slots(None, depth2, limit2))))

    layout = QueueLayout(tuple(queues))
    layout.validate()
    return layout


def inflow_schedule(spec: ScenarioSpec, jitter_s: float = 0.0) -> list[Arrival]:
    """Arrival times at the corridor entry, round-robin across lanes.

    Deterministic uniform headways by default; optional seeded jitter.
    """
    if spec.inflow_vph <= 0:
        raise InfeasibleScenarioError("inflow_vph must be positive")
    headway = 3600.0 / spec.inflow_vph
    horizon_s = spec.horizon_steps * 0.5
    times = []
    t = headway
    while t <= horizon_s:
        times.append(t)
        t += headway
    if jitter_s > 0.0:
        rng = np.random.default_rng(spec.seed)
        times = sorted(max(1e-3, t + rng.uniform(-jitter_s, jitter_s))
                       for t in times)
    return [Arrival(time=t, lane=i % 2) for i, t in enumerate(times)]


def build_initial_state(spec: ScenarioSpec, *, record_states: bool = True,
                        jitter_s: float = 0.0,
                        ems_lane_changes: bool = True) -> Simulation:
    """Simulator state at the red-to-green instant of intersection 1."""
    layout = queue_layout(spec)
    net = spec.network.build()
    program = SignalProgram(offsets=(0.0,) * net.n_intersections)

    vehicles = [
        Vehicle(id=CAV_ID, vclass=VehicleClass.CAV, lane=LEFT,
                pos=net.stop_lines[spec.cav_stop_line()] - spec.cav_gap()),
        Vehicle(id=EMS_ID, vclass=VehicleClass.EMS, lane=RIGHT,
                pos=net.stop_lines[0] - spec.d),
    ]
    next_id = FIRST_HUMAN_ID
    for queue in layout.queues:
        line = net.stop_lines[queue.stop_line]
        for dist in queue.distances:
            pos = line - dist
            if pos < 0.0:
                continue
            vehicles.append(Vehicle(id=next_id, vclass=VehicleClass.HUMAN,
                                    lane=queue.lane, pos=pos))
            next_id += 1

    return Simulation(network=net, program=program, vehicles=vehicles,
                      arrivals=inflow_schedule(spec, jitter_s=jitter_s),
                      record_states=record_states,
                      ems_lane_changes=ems_lane_changes)


def sweep_cells(network: NetworkKind, x_a_values: list[float],
                d_values: list[float], inflow_vph: float = 1000.0,
                seed: int = 0, horizon_steps: int = 600) -> list[ScenarioSpec]:
    """Cartesian (x_a, d) grid, every cell exactly once, x_a-major order."""
    return [ScenarioSpec(network=network, x_a=x_a, d=d, inflow_vph=inflow_vph,
                         seed=seed, horizon_steps=horizon_steps)
            for x_a in x_a_values for d in d_values]


def dump_grid(cells: list[ScenarioSpec]) -> str:
    return json.dumps([c.to_json_dict() for c in cells], indent=2)


def load_grid(text: str) -> list[ScenarioSpec]:
    return [ScenarioSpec.from_json_dict(item) for item in json.loads(text)]
