"""Fixed-step microscopic simulation of the corridor.

One ``Simulation`` instance owns its entire state; instances never share
mutable data, so any number may run in parallel processes or threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .idm import DEFAULT_IDM, IdmParams, idm_accel
from .network import CorridorNetwork, SignalProgram, SignalState
from .record import CrossingEvent, EpisodeRecord, LaneChangeEvent, StateRow
from .vehicle import Vehicle, VehicleClass

# Minimum bumper-to-bumper distance enforced by the discrete failsafe.
GAP_FLOOR = 0.1
# Gap fed to the IDM when a standing obstacle is essentially on the bumper.
MIN_IDM_GAP = 0.01


class SimulationFault(RuntimeError):
    """A state invariant broke after an update; the episode is aborted."""


@dataclass(frozen=True)
class Arrival:
    time: float
    lane: int


@dataclass
class SimClock:
    dt: float = 0.5
    step_index: int = 0

    @property
    def t(self) -> float:
        return self.step_index * self.dt


@dataclass(frozen=True)
class LaneChangeRule:
    """Gap-acceptance rule for the emergency vehicle's lane choice.

    The adjacent lane is taken when its projected free-run speed beats the
    current lane's by ``hysteresis`` and both neighbouring gaps clear the
    safety margins.
    """

    lookahead: float = 100.0
    speed_tau: float = 3.0          # gap/tau term of the projected speed
    hysteresis: float = 0.5         # m/s advantage required to move
    gap_margin: float = 0.3         # s of speed added to the static min gap
    cooldown_steps: int = 4


@dataclass
class Simulation:
    network: CorridorNetwork
    program: SignalProgram
    vehicles: list[Vehicle]
    arrivals: list[Arrival] = field(default_factory=list)
    dt: float = 0.5
    idm: IdmParams = DEFAULT_IDM
    lane_change_rule: LaneChangeRule = field(default_factory=LaneChangeRule)
    ems_lane_changes: bool = True
    record_states: bool = True

    def __post_init__(self):
        self.clock = SimClock(dt=self.dt)
        self._lanes: list[list[Vehicle]] = [
            [] for _ in range(self.network.lanes_per_direction)]
        for veh in self.vehicles:
            self._lanes[veh.lane].append(veh)
        for lane in self._lanes:
            lane.sort(key=lambda v: -v.pos)
        self._pending = sorted(self.arrivals, key=lambda a: (a.time, a.lane))
        self._next_id = 1 + max((v.id for v in self.vehicles), default=0)
        self.record = EpisodeRecord(
            network=self.network, program=self.program, dt=self.dt,
            vehicle_classes={v.id: v.vclass for v in self.vehicles},
            recorded=self.record_states)
        self._check_initial_state()
        if self.record_states:
            self._append_rows()

    # -- state queries -----------------------------------------------------

    @property
    def t(self) -> float:
        return self.clock.t

    def find(self, vclass: VehicleClass) -> Vehicle | None:
        for lane in self._lanes:
            for veh in lane:
                if veh.vclass is vclass:
                    return veh
        return None

    @property
    def cav(self) -> Vehicle | None:
        return self.find(VehicleClass.CAV)

    @property
    def ems(self) -> Vehicle | None:
        return self.find(VehicleClass.EMS)

    def lane_vehicles(self, lane: int) -> list[Vehicle]:
        return list(self._lanes[lane])

    def leader_of(self, veh: Vehicle) -> Vehicle | None:
        lane = self._lanes[veh.lane]
        idx = lane.index(veh)
        return lane[idx - 1] if idx > 0 else None

    def follower_of(self, veh: Vehicle) -> Vehicle | None:
        lane = self._lanes[veh.lane]
        idx = lane.index(veh)
        return lane[idx + 1] if idx + 1 < len(lane) else None

    # -- stepping ----------------------------------------------------------

    def step(self, commands: dict[int, float] | None = None) -> None:
        """Advance the world one tick.

        ``commands`` maps vehicle id to a commanded acceleration and may
        address CAVs only. Commanded accelerations pass through the same
        leader/signal safety envelope human drivers obey, so an arbitrary
        command cannot create a collision or run a stoppable red light.
        """
        commands = commands or {}
        t = self.clock.t
        for vid in commands:
            veh = self._by_id(vid)
            if veh is None or veh.vclass is not VehicleClass.CAV:
                raise ValueError(f"acceleration command for non-CAV vehicle {vid}")

        if self.ems_lane_changes:
            self._maybe_change_ems_lane(t)

        for lane in self._lanes:
            leader = None
            for veh in lane:
                veh.accel = self._plan_accel(veh, leader, t,
                                             commands.get(veh.id))
                leader = veh

        t_next = (self.clock.step_index + 1) * self.dt
        self._advance_positions(t_next)
        self._remove_departed()
        self._spawn_arrivals(t_next)
        self.clock.step_index += 1
        if self.record_states:
            self._append_rows()
        self._check_invariants()

    def run(self, n_steps: int, controller=None) -> None:
        """Run ``n_steps`` ticks, optionally driving the CAV via ``controller``.

        The controller is called with this simulation and must return an
        acceleration command or ``None`` for default car-following.
        """
        for _ in range(n_steps):
            cmd = controller(self) if controller is not None else None
            cav = self.cav
            if cmd is not None and cav is not None:
                self.step({cav.id: cmd})
            else:
                self.step()
        self.record.horizon_steps = self.clock.step_index

    # -- acceleration planning ----------------------------------------------

    def _plan_accel(self, veh: Vehicle, leader: Vehicle | None, t: float,
                    command: float | None) -> float:
        p = self.idm
        v_des = self.network.speed_limit(veh.vclass)
        if leader is not None:
            gap = max(leader.rear - veh.pos, MIN_IDM_GAP)
            accel = idm_accel(veh.speed, v_des, gap,
                              veh.speed - leader.speed, p)
        else:
            accel = idm_accel(veh.speed, v_des, None, 0.0, p)

        if command is not None:
            if not math.isfinite(command):
                raise ValueError("non-finite acceleration command")
            # a command may brake harder than car-following, never accelerate
            # past what the leader allows
            accel = min(accel, max(-p.max_decel, min(p.max_accel, command)))

        line_idx = self._next_stop_line(veh.pos)
        if line_idx is not None:
            accel = min(accel, self._signal_constraint(veh, line_idx, t, v_des))
        return max(-p.max_decel, min(p.max_accel, accel))

    def _next_stop_line(self, pos: float) -> int | None:
        for k, line in enumerate(self.network.stop_lines):
            if pos < line:
                return k
        return None

    def _signal_constraint(self, veh: Vehicle, line_idx: int, t: float,
                           v_des: float) -> float:
        """Acceleration bound imposed by the signal ahead, if any.

        A non-green signal acts as a standing virtual leader at the stop
        line if and only if the vehicle can still stop with the permitted
        deceleration; once committed, a vehicle stays committed until the
        signal releases it.
        """
        state = self.program.state(t, line_idx)
        if state is SignalState.GREEN:
            veh.committed_line = None
            return self.idm.max_accel
        dist = self.network.stop_lines[line_idx] - veh.pos
        if veh.committed_line != line_idx:
            needed = veh.speed * veh.speed / (2.0 * max(dist, MIN_IDM_GAP))
            if needed > self.idm.max_decel:
                return self.idm.max_accel  # cannot stop; proceeds through
            veh.committed_line = line_idx
        return idm_accel(veh.speed, v_des, max(dist, MIN_IDM_GAP),
                         veh.speed, self.idm)

    # -- kinematic update ---------------------------------------------------

    def _advance_positions(self, t_next: float) -> None:
        dt = self.dt
        stop_lines = self.network.stop_lines
        for lane_idx, lane in enumerate(self._lanes):
            leader_rear = math.inf
            for veh in lane:
                v_max = self.network.speed_limit(veh.vclass)
                v_new = min(max(veh.speed + veh.accel * dt, 0.0), v_max)
                x_new = veh.pos + v_new * dt
                if veh.committed_line is not None:
                    line = stop_lines[veh.committed_line]
                    if x_new > line:
                        x_new = line
                if x_new > leader_rear - GAP_FLOOR:
                    x_new = max(veh.pos, leader_rear - GAP_FLOOR)
                v_new = (x_new - veh.pos) / dt
                for k, line in enumerate(stop_lines):
                    if veh.pos <= line < x_new:
                        self.record.crossings.append(CrossingEvent(
                            t=t_next, vehicle_id=veh.id, stop_line=k,
                            lane=lane_idx))
                veh.speed = v_new
                veh.pos = x_new
                leader_rear = x_new - veh.length

    def _remove_departed(self) -> None:
        end = self.network.length
        for lane in self._lanes:
            while lane and lane[0].rear > end:
                lane.pop(0)

    def _spawn_arrivals(self, t_next: float) -> None:
        p = self.idm
        remaining = []
        for arr in self._pending:
            if arr.time > t_next:
                remaining.append(arr)
                continue
            lane = self._lanes[arr.lane]
            tail = lane[-1].rear if lane else math.inf
            if tail < p.min_gap + GAP_FLOOR:
                remaining.append(arr)  # entry blocked, retry next step
                continue
            v_limit = self.network.speed_limit(VehicleClass.HUMAN)
            speed = min(v_limit, max(0.0, (tail - p.min_gap) / p.time_headway))
            veh = Vehicle(id=self._next_id, vclass=VehicleClass.HUMAN,
                          lane=arr.lane, pos=0.0, speed=speed)
            self._next_id += 1
            lane.append(veh)
            self.record.vehicle_classes[veh.id] = veh.vclass
        self._pending = remaining

    # -- EMS lane selection ---------------------------------------------------

    def _maybe_change_ems_lane(self, t: float) -> None:
        ems = self.ems
        if ems is None or ems.pos >= self.network.stop_lines[-1]:
            return
        if self.clock.step_index < ems.lane_change_ready_step:
            return
        rule = self.lane_change_rule
        cur, adj = ems.lane, 1 - ems.lane
        if self._projected_speed(ems, adj) <= \
                self._projected_speed(ems, cur) + rule.hysteresis:
            return
        if not self._gap_acceptable(ems, adj):
            return
        self._lanes[cur].remove(ems)
        ems.lane = adj
        self._lanes[adj].append(ems)
        self._lanes[adj].sort(key=lambda v: -v.pos)
        ems.lane_change_ready_step = self.clock.step_index + rule.cooldown_steps
        self.record.lane_changes.append(LaneChangeEvent(
            t=t, vehicle_id=ems.id, lane_from=cur, lane_to=adj, position=ems.pos))

    def _projected_speed(self, ems: Vehicle, lane_idx: int) -> float:
        """Free-run speed estimate for the EMS in a candidate lane."""
        v_des = self.network.speed_limit(ems.vclass)
        rule = self.lane_change_rule
        leader = None
        for veh in reversed(self._lanes[lane_idx]):
            if veh is ems:
                continue
            if veh.pos > ems.pos:
                leader = veh
                break
        if leader is None or leader.rear - ems.pos > rule.lookahead:
            return v_des
        gap = max(leader.rear - ems.pos, 0.0)
        return min(v_des, leader.speed + gap / rule.speed_tau)

    def _gap_acceptable(self, ems: Vehicle, lane_idx: int) -> bool:
        rule = self.lane_change_rule
        p = self.idm
        for veh in self._lanes[lane_idx]:
            if veh.pos > ems.pos:
                continue
            # first vehicle at or behind the EMS position: the new follower
            if veh.pos > ems.rear - (p.min_gap + rule.gap_margin * veh.speed):
                return False
            break
        for veh in reversed(self._lanes[lane_idx]):
            if veh.pos <= ems.pos:
                continue
            if veh.rear - ems.pos < p.min_gap + rule.gap_margin * ems.speed:
                return False
            break
        return True

    # -- bookkeeping ---------------------------------------------------------

    def _by_id(self, vid: int) -> Vehicle | None:
        for lane in self._lanes:
            for veh in lane:
                if veh.id == vid:
                    return veh
        return None

    def _append_rows(self) -> None:
        t = self.clock.t
        step = self.clock.step_index
        rows = [StateRow(step, t, veh.id, veh.vclass, veh.lane, veh.pos,
                         veh.speed, veh.accel)
                for lane in self._lanes for veh in lane]
        rows.sort(key=lambda r: r.vehicle_id)
        self.record.rows.extend(rows)

    def _check_initial_state(self) -> None:
        for lane in self._lanes:
            for i in range(1, len(lane)):
                if lane[i - 1].rear - lane[i].pos <= 0.0:
                    raise SimulationFault(
                        f"initial overlap between {lane[i - 1].id} and {lane[i].id}")

    def _check_invariants(self) -> None:
        for lane in self._lanes:
            leader = None
            for veh in lane:
                v_max = self.network.speed_limit(veh.vclass)
                if not (0.0 <= veh.speed <= v_max + 1e-9):
                    raise SimulationFault(
                        f"speed bound violated for vehicle {veh.id}: {veh.speed}")
                if abs(veh.accel) > self.idm.max_accel + 1e-9:
                    raise SimulationFault(
                        f"acceleration bound violated for vehicle {veh.id}")
                if leader is not None and leader.rear - veh.pos <= 0.0:
                    raise SimulationFault(
                        f"collision between {leader.id} and {veh.id}")
                leader = veh
