"""Corridor geometry and fixed-time signal plans."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .vehicle import VehicleClass


class SignalState(enum.Enum):
    GREEN = "Green"
    YELLOW = "Yellow"
    RED = "Red"


@dataclass(frozen=True)
class SignalProgram:
    """Periodic green/yellow/red plan, identical cycle at every intersection.

    The red interval serves the cross street; by default it mirrors the
    corridor's green+yellow, giving a 74 s cycle.
    """

    green_s: float = 31.0
    yellow_s: float = 6.0
    red_s: float = 37.0
    offsets: tuple[float, ...] = (0.0,)

    @property
    def cycle_s(self) -> float:
        return self.green_s + self.yellow_s + self.red_s

    def state(self, t: float, intersection: int = 0) -> SignalState:
        phase = (t - self.offsets[intersection]) % self.cycle_s
        if phase < self.green_s:
            return SignalState.GREEN
        if phase < self.green_s + self.yellow_s:
            return SignalState.YELLOW
        return SignalState.RED


def signal_state(program: SignalProgram, t: float,
                 intersection: int = 0) -> SignalState:
    """Signal state for the corridor direction at time ``t``."""
    if t < 0.0:
        raise ValueError("time must be non-negative")
    return program.state(t, intersection)


DEFAULT_SPEED_LIMITS = {
    VehicleClass.HUMAN: 15.0,
    VehicleClass.CAV: 15.0,
    VehicleClass.EMS: 35.0,
}


@dataclass(frozen=True)
class CorridorNetwork:
    """One or two signalized intersections on a straight two-lane corridor.

    Positions grow along the travel direction; vehicles enter at 0. The
    first stop line sits at ``approach_length``; with two intersections the
    second sits ``z`` metres further downstream, followed by an exit
    segment.
    """

    n_intersections: int = 1
    approach_length: float = 175.0
    z: float = 175.0
    exit_length: float = 175.0
    lanes_per_direction: int = 2
    speed_limits: dict[VehicleClass, float] = field(
        default_factory=lambda: dict(DEFAULT_SPEED_LIMITS))

    def __post_init__(self):
        if self.n_intersections not in (1, 2):
            raise ValueError("corridor supports exactly 1 or 2 intersections")
        if self.n_intersections == 2 and self.z <= 0:
            raise ValueError("z must be positive with two intersections")

    @property
    def stop_lines(self) -> tuple[float, ...]:
        if self.n_intersections == 1:
            return (self.approach_length,)
        return (self.approach_length, self.approach_length + self.z)

    @property
    def length(self) -> float:
        return self.stop_lines[-1] + self.exit_length

    def speed_limit(self, vclass: VehicleClass) -> float:
        return self.speed_limits[vclass]

    @classmethod
    def single(cls) -> "CorridorNetwork":
        return cls(n_intersections=1)

    @classmethod
    def double(cls, z: float = 175.0) -> "CorridorNetwork":
        return cls(n_intersections=2, z=z)
