"""Vehicle state."""
from __future__ import annotations

import enum
from dataclasses import dataclass


class VehicleClass(enum.Enum):
    HUMAN = "human"
    CAV = "cav"
    EMS = "ems"


VEHICLE_LENGTH = 5.0


@dataclass(slots=True)
class Vehicle:
    """Kinematic state of one road agent.

    ``pos`` is the front-bumper coordinate along the corridor axis; the body
    extends ``length`` metres behind it.
    """

    id: int
    vclass: VehicleClass
    lane: int
    pos: float
    speed: float = 0.0
    accel: float = 0.0
    length: float = VEHICLE_LENGTH
    # index of the stop line this vehicle has committed to stop at, if any
    committed_line: int | None = None
    # earliest step index at which another lane change may happen (EMS only)
    lane_change_ready_step: int = 0

    @property
    def rear(self) -> float:
        return self.pos - self.length
